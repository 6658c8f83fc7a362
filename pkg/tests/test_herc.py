"""Fractional policy and potential tests.

Hand-derived frozen values for the 2-factorial tree (ids: root 0, internal 1
and 2, leaf 3 under 1, leaf 4 under 2), kill order 0, 1, 3, 2:

* step costs 1, 1/2, 3/2, 1; total 4
* potential trace 14 -> 13 -> 25/2 -> 9 -> 8 (initial 4*2*H(2) + 2 = 14,
  final 4*height = 8)
* game bound 4*2*H(2) + 2 = 14

and for the depth-first baseline on the same schedule: moves 0->1, 1->3,
3->2, 2->4 with distances 1, 1, 3, 1, total 6 (at most 2 * node_count = 10).
"""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hydralab import herc
from hydralab.harmonics import harmonic, harmonic_float, harmonic_float_error
from hydralab.herc import (
    CASE_INTERNAL,
    CASE_LEAF,
    DfsPolicy,
    FractionalHerc,
    behavioral_step,
    distribution,
    eta,
    play_dfs,
    play_verified,
    potential,
    trace_records,
    verify_step,
)
from hydralab.hydra import GameProtocolError, alive_nodes, kill, new_game
from hydralab.trees import (
    build_complete_kary_tree,
    build_factorial_tree,
    build_path_tree,
    from_parents,
)


def random_schedule(t, seed):
    """Full uniformly-random kill order, derived by simulation."""
    rng = np.random.default_rng(seed)
    g = new_game(t)
    order = []
    while not g.finished:
        pool = alive_nodes(g)
        u = pool[int(rng.integers(len(pool)))]
        order.append(u)
        kill(g, u)
    return order


SMALL_TREES = [
    build_factorial_tree(2),
    build_factorial_tree(3),
    build_complete_kary_tree(2, 3),
    build_complete_kary_tree(3, 2),
    build_path_tree(6),
    from_parents([-1, 0, 0, 1, 1, 2, 5, 5, 5, 3]),
]


class TestHarmonics:
    def test_exact_values(self):
        assert harmonic(0) == 0
        assert harmonic(1) == 1
        assert harmonic(2) == Fraction(3, 2)
        assert harmonic(6) == Fraction(49, 20)
        assert harmonic(24) == sum(Fraction(1, i) for i in range(1, 25))

    def test_float_agrees_within_stated_error(self):
        for n in (1, 10, 720, 5040):
            err = harmonic_float_error(n)
            assert abs(harmonic_float(n) - float(harmonic(n))) <= err
            assert err < 1e-10


class TestDistribution:
    def test_fresh_game_is_point_mass_at_root(self):
        g = new_game(build_factorial_tree(3))
        assert distribution(g) == {0: Fraction(1)}
        assert eta(g, 0) == 1
        assert eta(g, 1) == 0

    def test_sums_to_one_every_step(self):
        t = build_factorial_tree(3)
        g = new_game(t)
        for u in random_schedule(t, 3):
            kill(g, u)
            d = distribution(g)
            assert sum(d.values()) == 1
            assert all(m > 0 for m in d.values())

    def test_alive_leaves_carry_unit_rank(self):
        t = build_factorial_tree(3)
        g = new_game(t)
        for u in random_schedule(t, 4):
            kill(g, u)
            r = g.rank_root()
            for w in alive_nodes(g):
                if t.is_leaf(w):
                    assert eta(g, w) == Fraction(1, r)


class TestHandTrace:
    def test_step_costs_and_total(self):
        t = build_factorial_tree(2)
        v = play_verified(t, [0, 1, 3, 2])
        assert [s.cost for s in v.steps] == [Fraction(1), Fraction(1, 2),
                                             Fraction(3, 2), Fraction(1)]
        assert v.total_cost == 4
        assert [s.case for s in v.steps] == [CASE_INTERNAL, CASE_INTERNAL,
                                             CASE_LEAF, CASE_INTERNAL]

    def test_potential_trace(self):
        t = build_factorial_tree(2)
        v = play_verified(t, [0, 1, 3, 2])
        assert v.phi_init == 14
        assert [s.phi_after for s in v.steps] == [13, Fraction(25, 2), 9, 8]
        assert v.phi_final == 4 * t.height
        assert v.cost_bound == 14
        assert v.all_ok and v.bound_ok

    def test_fresh_potential_examples(self):
        # fresh game: harmonic term 4*h*H(L), level term h
        for k in (2, 3, 4):
            t = build_factorial_tree(k)
            snap = potential(new_game(t))
            assert snap.level_term == k
            assert snap.harmonic_term == 4 * k * harmonic(t.leaf_count)

    def test_verify_step_no_kill_is_vacuous(self):
        g = new_game(build_factorial_tree(2))
        snap = potential(g)
        zero = herc.StepCost(killed=-1, case=CASE_INTERNAL,
                             value=Fraction(0), moves=())
        assert verify_step(snap, snap, zero)


class TestStepCost:
    def test_internal_cost_equals_mass_on_killed_node(self):
        t = build_factorial_tree(3)
        g = new_game(t)
        shadow = FractionalHerc(g)
        before = eta(g, 0)
        kill(g, 0)
        cost = shadow.update(0)
        assert cost.value == before == 1
        assert cost.mass_moved() == before

    def test_redistribution_matches_distribution_delta(self):
        # applying the recorded moves to the old distribution must yield the
        # new distribution exactly, for every step of random games
        for t in SMALL_TREES:
            for seed in (0, 1):
                g = new_game(t)
                shadow = FractionalHerc(g)
                for u in random_schedule(t, seed * 17 + 5):
                    old = distribution(g)
                    old_r = g.rank_root()
                    kill(g, u)
                    cost = shadow.update(u)
                    moved = old.copy()
                    for src, dst, mass in cost.moves:
                        moved[src] -= mass
                        moved[dst] = moved.get(dst, 0) + mass
                    # the recorded moves alone must carry old to new exactly:
                    # on a leaf kill rank(w)/R + rank(w)/(R(R-1)) = rank(w)/(R-1)
                    moved = {n: m for n, m in moved.items() if m}
                    assert moved == distribution(g)
                    assert old_r - g.rank_root() == (1 if cost.case == CASE_LEAF else 0)

    def test_leaf_kill_mass_and_bound(self):
        t = build_factorial_tree(2)
        g = new_game(t)
        shadow = FractionalHerc(g)
        for u in (0, 1):
            kill(g, u)
            shadow.update(u)
        before = eta(g, 3)
        r_before = g.rank_root()
        kill(g, 3)
        cost = shadow.update(3)
        assert cost.case == CASE_LEAF
        assert cost.mass_moved() == before == Fraction(1, 2)
        assert cost.value == Fraction(3, 2)
        assert cost.value <= Fraction(2 * t.height, r_before)

    def test_update_protocol_errors(self):
        t = build_factorial_tree(2)
        g = new_game(t)
        shadow = FractionalHerc(g)
        with pytest.raises(GameProtocolError):
            shadow.update(0)       # nothing killed yet
        kill(g, 0)
        with pytest.raises(GameProtocolError):
            shadow.update(1)       # wrong node
        shadow.update(0)
        with pytest.raises(GameProtocolError):
            shadow.update(0)       # double consume
        kill(g, 1)
        kill(g, 3)
        with pytest.raises(GameProtocolError):
            shadow.update(3)       # skipped the kill of node 1


class TestVerifiedGames:
    @pytest.mark.parametrize("tree_idx", range(len(SMALL_TREES)))
    def test_drop_covers_cost_and_bound(self, tree_idx):
        t = SMALL_TREES[tree_idx]
        for seed in range(5):
            v = play_verified(t, random_schedule(t, seed))
            assert v.all_ok
            assert v.bound_ok
            assert v.phi_final == 4 * t.height
            assert v.phi_init == 4 * t.height * harmonic(t.leaf_count) + t.height
            # telescoped slack: total cost <= phi_init - phi_final
            assert v.total_cost <= v.phi_init - v.phi_final

    @given(st.integers(0, 10**6))
    @settings(max_examples=20, deadline=None)
    def test_property_random_seeds_factorial3(self, seed):
        t = build_factorial_tree(3)
        v = play_verified(t, random_schedule(t, seed))
        assert v.all_ok and v.bound_ok

    def test_trace_records_schema(self):
        t = build_factorial_tree(2)
        v = play_verified(t, [0, 1, 3, 2])
        recs = trace_records(v)
        assert recs[0] == {"step": 1, "killed": 0, "case": CASE_INTERNAL,
                           "cost_num": 1, "cost_den": 1,
                           "phi_num": 13, "phi_den": 1}
        assert recs[2]["cost_num"] == 3 and recs[2]["cost_den"] == 2
        assert recs[2]["phi_num"] == 9 and recs[2]["phi_den"] == 1


class TestBehavioral:
    def test_internal_kill_marginal_matches_masses(self):
        # after killing the root of the 3-factorial tree the position should
        # land on each child with probability rank/3
        t = build_factorial_tree(3)
        counts = {1: 0, 2: 0, 3: 0}
        n = 3000
        for seed in range(n):
            g = new_game(t)
            kill(g, 0)
            rng = np.random.default_rng((20, seed))
            pos, paid = behavioral_step(g, 0, 0, rng)
            assert paid == 1
            counts[pos] += 1
        for c in (1, 2, 3):
            p = 1 / 3
            sigma = (p * (1 - p) / n) ** 0.5
            assert abs(counts[c] / n - p) <= 4 * sigma

    def test_position_untouched_when_other_node_dies(self):
        t = build_factorial_tree(2)
        g = new_game(t)
        kill(g, 0)
        rng = np.random.default_rng(0)
        behavioral_step(g, 0, 0, rng)
        kill(g, 1)
        pos, paid = behavioral_step(g, 1, 2, rng)
        assert (pos, paid) == (2, 0)

    def test_full_schedule_mean_near_fractional_total(self):
        # fractional total on the fixed 2-factorial schedule is exactly 4;
        # the behavioral cost is 6 or 2 with equal probability
        t = build_factorial_tree(2)
        schedule = [0, 1, 3, 2]
        totals = []
        for seed in range(2000):
            g = new_game(t)
            rng = np.random.default_rng((7, seed))
            pos, total = t.root, 0
            for u in schedule:
                kill(g, u)
                pos, paid = behavioral_step(g, u, pos, rng)
                total += paid
            totals.append(total)
        assert set(totals) == {2, 6}
        mean = np.mean(totals)
        se = np.std(totals, ddof=1) / len(totals) ** 0.5
        assert abs(mean - 4) <= 3 * se


class TestDfsBaseline:
    def test_path_tree_top_down(self):
        t = build_path_tree(6)
        assert play_dfs(t, list(range(6))) == 6

    def test_two_factorial_schedule_frozen(self):
        t = build_factorial_tree(2)
        assert play_dfs(t, [0, 1, 3, 2]) == 6
        assert play_dfs(t, [0, 1, 3, 2]) <= 2 * t.node_count

    def test_cost_at_most_twice_node_count(self):
        for t in SMALL_TREES:
            for seed in range(4):
                assert play_dfs(t, random_schedule(t, seed)) <= 2 * t.node_count

    def test_policy_position_always_alive(self):
        t = build_factorial_tree(3)
        g = new_game(t)
        policy = DfsPolicy(t)
        for u in random_schedule(t, 8):
            kill(g, u)
            policy.on_kill(g, u)
            if not g.finished:
                assert g.life[policy.position] == 1
