"""Pattern algebra and phase automaton against from-scratch set oracles."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hydralab.gks import (
    GksError,
    Instance,
    PhaseState,
    WILDCARD,
    all_configs,
    compatible_configs,
    compatible_count,
    config_distance,
    load_trace,
    pattern_dim,
    pattern_members,
    phase_survivors,
    random_requests,
    request_kills,
    save_trace,
    serves,
    split_pattern,
    uniform_binary,
)
from hydralab.trees import build_factorial_tree


class TestInstance:
    def test_basic(self):
        inst = Instance((2, 3, 2))
        assert inst.k == 3
        assert inst.config_count == 12

    @pytest.mark.parametrize("sizes", [(), (1,), (2, 0), (2, True)])
    def test_rejects_bad_sizes(self, sizes):
        with pytest.raises(GksError):
            Instance(sizes)

    def test_point_validation(self):
        inst = Instance((2, 3))
        assert inst.validate_point([1, 2]) == (1, 2)
        with pytest.raises(GksError, match="coordinates"):
            inst.validate_point((0,))
        with pytest.raises(GksError, match="out of range"):
            inst.validate_point((0, 3))


class TestServiceAndDistance:
    def test_serves_iff_shared_coordinate(self):
        assert serves((0, 1), (0, 0))
        assert serves((0, 1), (1, 1))
        assert not serves((0, 1), (1, 0))

    def test_distance_counts_mismatches(self):
        assert config_distance((0, 1, 2), (0, 2, 2)) == 1
        assert config_distance((0, 0), (1, 1)) == 2
        assert config_distance((5,), (5,)) == 0

    def test_compatible_count_closed_form(self):
        # prod(sizes) - prod(sizes-1), same for every request
        inst = Instance((2, 3, 4))
        for r in [(0, 0, 0), (1, 2, 3)]:
            assert len(compatible_configs(inst, r)) == compatible_count(inst)
        assert compatible_count(inst) == 24 - 6

    def test_binary_compatibility_is_everything_but_antipode(self):
        inst = uniform_binary(3)
        got = set(compatible_configs(inst, (1, 1, 1)))
        everything = set(all_configs(inst))
        assert got == everything - {(0, 0, 0)}


class TestPatterns:
    def test_members_and_dim(self):
        inst = Instance((2, 3))
        assert pattern_dim((WILDCARD, 1)) == 1
        assert set(pattern_members(inst, (WILDCARD, 1))) == {(0, 1), (1, 1)}
        assert len(pattern_members(inst, (WILDCARD, WILDCARD))) == 6

    def test_kill_condition(self):
        # killed iff no fixed coordinate matches
        assert request_kills((WILDCARD, 1), (0, 0))
        assert not request_kills((WILDCARD, 1), (0, 1))
        assert request_kills((WILDCARD, WILDCARD), (0, 0))

    def test_kill_iff_some_member_fails(self):
        # the definition the fixed-coordinate test stands in for
        inst = Instance((2, 2, 3))
        pats = itertools.product(*[(WILDCARD, *range(s)) for s in inst.sizes])
        reqs = all_configs(inst)
        for pat in pats:
            for r in reqs:
                member_fails = any(not serves(c, r)
                                   for c in pattern_members(inst, pat))
                assert request_kills(pat, r) == member_fails

    def test_split_children_pin_free_coords_ascending(self):
        kids = split_pattern((WILDCARD, 5, WILDCARD), (1, 0, 2))
        assert kids == [(1, 5, WILDCARD), (WILDCARD, 5, 2)]

    def test_split_requires_kill(self):
        with pytest.raises(GksError, match="survives"):
            split_pattern((0, WILDCARD), (0, 1))

    def test_split_union_is_exactly_the_serving_members(self):
        # exhaustive over all patterns and requests of two small instances
        for sizes in [(2, 2, 2), (2, 3, 2), (3, 3)]:
            inst = Instance(sizes)
            pats = itertools.product(*[(WILDCARD, *range(s)) for s in sizes])
            for pat in pats:
                if pattern_dim(pat) == 0:
                    continue
                for r in all_configs(inst):
                    if not request_kills(pat, r):
                        continue
                    kids = split_pattern(pat, r)
                    assert len(kids) == pattern_dim(pat)
                    union = set()
                    for kid in kids:
                        members = set(pattern_members(inst, kid))
                        assert members <= set(pattern_members(inst, pat))
                        union |= members
                    want = {c for c in pattern_members(inst, pat)
                            if serves(c, r)}
                    assert union == want


def antipode(config):
    return tuple(1 - v for v in config)


class TestPhaseState:
    def test_starts_with_free_root(self):
        st_ = PhaseState(Instance((2, 3)))
        assert st_.alive_handles() == [0]
        assert st_.pattern(0) == (WILDCARD, WILDCARD)
        assert not st_.finished

    def test_root_split_on_first_request(self):
        st_ = PhaseState(uniform_binary(2))
        ev = st_.serve((0, 0))
        assert len(ev.killed) == 1
        rec = ev.killed[0]
        assert rec.handle == 0
        assert rec.children == (1, 2)
        assert st_.pattern(1) == (0, WILDCARD)
        assert st_.pattern(2) == (WILDCARD, 0)
        assert not ev.ended

    def test_children_survive_their_own_request(self):
        st_ = PhaseState(uniform_binary(3))
        ev = st_.serve((1, 0, 1))
        for rec in ev.killed:
            for ch in rec.children:
                assert st_.is_alive(ch)

    def test_kills_are_reported_in_handle_order(self):
        st_ = PhaseState(uniform_binary(3))
        rng = np.random.default_rng(5)
        while not st_.finished:
            r = tuple(int(v) for v in rng.integers(0, 2, size=3))
            ev = st_.serve(r)
            handles = [rec.handle for rec in ev.killed]
            assert handles == sorted(handles)

    def test_serving_after_end_is_an_error(self):
        st_ = PhaseState(uniform_binary(1))
        # k=1: lone coordinate; antipode request kills root, child 0-dim
        ev = st_.serve((0,))
        assert not ev.ended
        ev = st_.serve((1,))
        assert ev.ended and st_.finished
        with pytest.raises(GksError, match="already ended"):
            st_.serve((0,))

    @pytest.mark.parametrize("sizes", [(2, 2), (2, 2, 2), (2, 3), (3, 2, 2)])
    def test_alive_union_tracks_survivors(self, sizes):
        inst = Instance(sizes)
        rng = np.random.default_rng(hash(sizes) % 2**32)
        st_ = PhaseState(inst)
        seen = []
        while not st_.finished and st_.requests_seen < 200:
            r = tuple(int(rng.integers(0, s)) for s in inst.sizes)
            seen.append(r)
            st_.serve(r)
            assert st_.alive_member_union() == phase_survivors(inst, seen)

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_finished_phase_built_the_whole_factorial_tree(self, k):
        # every born pattern died, and a dim-d death births d children, so
        # the handle count must equal the factorial tree's node count
        inst = uniform_binary(k)
        st_ = PhaseState(inst)
        while not st_.finished:
            survivor = next(iter(st_.alive_member_union()))
            st_.serve(antipode(survivor))
        assert st_.space_count == build_factorial_tree(k).node_count

    def test_binary_antipode_kills_exactly_one_survivor(self):
        inst = uniform_binary(3)
        st_ = PhaseState(inst)
        seen = []
        while not st_.finished:
            survivors = st_.alive_member_union()
            victim = min(survivors)
            seen.append(antipode(victim))
            st_.serve(seen[-1])
            assert st_.alive_member_union() == survivors - {victim}
        assert len(seen) == 8


@given(data=st.data())
@settings(max_examples=40, deadline=None)
def test_phase_union_invariant_random(data):
    sizes = tuple(data.draw(st.integers(min_value=2, max_value=3))
                  for _ in range(data.draw(st.integers(1, 3))))
    inst = Instance(sizes)
    st_ = PhaseState(inst)
    seen = []
    for _ in range(data.draw(st.integers(0, 12))):
        if st_.finished:
            break
        r = tuple(data.draw(st.integers(0, s - 1)) for s in sizes)
        seen.append(r)
        st_.serve(r)
    assert st_.alive_member_union() == phase_survivors(inst, seen)


class TestTraces:
    def test_roundtrip(self, tmp_path):
        inst = Instance((2, 3))
        rng = np.random.default_rng(0)
        reqs = random_requests(inst, 17, rng)
        path = tmp_path / "trace.jsonl"
        save_trace(path, inst, (1, 2), reqs)
        inst2, initial, back = load_trace(path)
        assert inst2 == inst
        assert initial == (1, 2)
        assert np.array_equal(back, reqs)

    def test_random_requests_respect_sizes(self):
        inst = Instance((2, 3, 4))
        reqs = random_requests(inst, 500, np.random.default_rng(1))
        assert reqs.shape == (500, 3)
        for i, s in enumerate(inst.sizes):
            assert reqs[:, i].min() >= 0
            assert reqs[:, i].max() < s

    def test_empty_trace_file_rejected(self, tmp_path):
        p = tmp_path / "empty.jsonl"
        p.write_text("")
        with pytest.raises(GksError, match="empty"):
            load_trace(p)

    @pytest.mark.parametrize("header", [
        '{"sizes": [2, 2]}',
        '{"sizes": "nope", "initial": [0, 0]}',
        '{"k": 3, "sizes": [2, 2], "initial": [0, 0]}',
        'not json',
    ])
    def test_malformed_headers_rejected(self, tmp_path, header):
        p = tmp_path / "bad.jsonl"
        p.write_text(header + "\n")
        with pytest.raises(GksError):
            load_trace(p)

    def test_bad_request_line_rejected(self, tmp_path):
        p = tmp_path / "bad2.jsonl"
        p.write_text('{"sizes": [2, 2], "initial": [0, 0]}\n[0, 2]\n')
        with pytest.raises(GksError, match="line 2"):
            load_trace(p)

    def test_zero_request_trace(self, tmp_path):
        p = tmp_path / "empty_body.jsonl"
        inst = uniform_binary(2)
        save_trace(p, inst, (0, 0), [])
        _, _, reqs = load_trace(p)
        assert reqs.shape == (0, 2)
