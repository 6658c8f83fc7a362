"""Acceptance gate: the primary contracts at their stated scales.

One test per criterion, each ending in a single visible verdict line
(written past pytest's capture so the line always lands in the log):

  [C01] potential drop covers every step's cost, full matrix, exact
  [C02] alive leaves carry unit rank (eta = 1/R) everywhere
  [C03] sampled single-position runs reproduce the exact expectation
  [C04] split children partition exactly the surviving members
  [C05] per-phase and whole-run server bounds against the offline optimum
  [C06] finished phases are never free for any start config
  [C07] the penalizer forces cost 2^k - 1 at adversary cost <= k
  [C08] greedy code: size, pairwise distance, exact ball volumes
  [C09] herding bound bookkeeping holds exactly per Confine
  [C10] same master seed, byte-identical reports, both kernel variants

The game matrix (criterion 1) is computed once and shared with criterion 2.
Kernel runs validate integer forms of the exact inequalities every step;
the object engine re-verifies a sub-matrix in plain Fractions, and their
equivalence is pinned by the unit suites.
"""

import itertools
import time
from fractions import Fraction

import numpy as np
import pytest

from hydralab.adversaries import (
    ball_size,
    build_code,
    pairwise_min_distance,
    q_leaf_schedule,
    randomized_lb_phase,
)
from hydralab.fastgame import ACTIVE_VARIANT, check_cost_bound, play_game
from hydralab.gks import (
    Instance,
    WILDCARD,
    compatible_configs,
    pattern_members,
    random_requests,
    request_kills,
    split_pattern,
    uniform_binary,
)
from hydralab.harness import (
    CODE_HEADER,
    DET_LB_HEADER,
    GKS_HEADER,
    HYDRA_HEADER,
    TreeSpec,
    run_code_gen,
    run_det_lb_experiment,
    run_gks_experiment,
    run_hydra_experiment,
    run_rand_lb_experiment,
    write_csv,
    write_jsonl,
)
from hydralab.herc import eta, play_verified
from hydralab.hydra import kill, new_game
from hydralab.offline import offline_opt, per_start_phase_costs
from hydralab.reduction import competitive_envelope, run_reduction
from hydralab.trees import Tree, build_complete_kary_tree, \
    build_factorial_tree

MASTER_SEED = 1009
SEEDS_PER_CELL = 100


def _verdict(capsys, tag: str, ok: bool, detail: str) -> None:
    line = f"[{tag}] {'PASS' if ok else 'FAIL'} {detail}"
    with capsys.disabled():
        print(f"\n{line}", flush=True)
    assert ok, line


def _matrix_specs() -> list[TreeSpec]:
    specs = [TreeSpec(f"factorial-{k}", build_factorial_tree(k))
             for k in range(2, 9)]
    specs += [TreeSpec(f"kary-{b}-{h}", build_complete_kary_tree(b, h))
              for b in (2, 3) for h in range(2, 7)]
    return specs


@pytest.fixture(scope="module")
def game_matrix():
    """Every tree x adversary x seed, reduced to per-run check counters."""
    t0 = time.time()
    rows = []
    idx = 0
    for spec in _matrix_specs():
        qleaf = q_leaf_schedule(spec.tree)
        for adversary in ("greedy", "random", "qleaf"):
            arg = qleaf if adversary == "qleaf" else adversary
            for _ in range(SEEDS_PER_CELL):
                seed = idx * 0x9E37 + MASTER_SEED
                run = play_game(spec.tree, arg, seed=seed)
                rows.append({
                    "tree": spec.label,
                    "adversary": adversary,
                    "status": run.status,
                    "steps": run.steps,
                    "nodes": spec.tree.node_count,
                    "drop": run.potential_drop_violations,
                    "unit_rank": run.unit_rank_violations,
                    "leaf_case": run.leaf_cost_bound_violations,
                    "rank_sum": run.rank_sum_violations,
                    "bound_ok": check_cost_bound(run),
                })
                idx += 1
    return rows, time.time() - t0


def _sub_matrix_specs() -> list[TreeSpec]:
    specs = [TreeSpec(f"factorial-{k}", build_factorial_tree(k))
             for k in range(2, 6)]
    specs += [TreeSpec(f"kary-2-{h}", build_complete_kary_tree(2, h))
              for h in range(2, 5)]
    specs += [TreeSpec(f"kary-3-{h}", build_complete_kary_tree(3, h))
              for h in range(2, 4)]
    return specs


def _replay_schedule(t: Tree, adversary, seed: int) -> list[int]:
    if isinstance(adversary, str):
        run = play_game(t, adversary, seed=seed, record_schedule=True)
        return [int(u) for u in run.schedule]
    return [int(u) for u in adversary]


class TestC01PotentialSuite:
    def test_every_step_of_every_game(self, capsys, game_matrix):
        rows, elapsed = game_matrix
        bad = [r for r in rows
               if r["status"] != 0 or r["drop"] or r["leaf_case"]
               or r["rank_sum"] or not r["bound_ok"]
               or r["steps"] != r["nodes"] - 1]
        # the object engine re-verifies a sub-matrix in plain Fractions
        verified = 0
        for spec in _sub_matrix_specs():
            qleaf = q_leaf_schedule(spec.tree)
            for adversary in ("greedy", "random", "qleaf"):
                arg = qleaf if adversary == "qleaf" else adversary
                for s in range(3):
                    sched = _replay_schedule(spec.tree, arg, s)
                    vg = play_verified(spec.tree, sched)
                    assert vg.all_ok and vg.total_cost <= vg.cost_bound
                    verified += len(vg.steps)
        _verdict(
            capsys, "C01", not bad,
            f"potential drop covers cost: {len(rows)} kernel runs "
            f"({len(bad)} violations), {verified} object steps re-verified "
            f"in Fractions, {elapsed:.0f}s")


class TestC02UnitRank:
    def test_alive_leaves_carry_unit_rank(self, capsys, game_matrix):
        rows, _ = game_matrix
        bad = [r for r in rows if r["unit_rank"]]
        # object engine: exact eta equality, every step, every alive leaf
        checked = 0
        for spec in _sub_matrix_specs():
            t = spec.tree
            qleaf = q_leaf_schedule(t)
            for adversary in ("greedy", "random", "qleaf"):
                arg = qleaf if adversary == "qleaf" else adversary
                for s in range(3):
                    g = new_game(t)
                    for u in _replay_schedule(t, arg, s):
                        kill(g, u)
                        root_rank = int(g.rank[t.root])
                        for w in g.alive:
                            if t.is_leaf(w):
                                assert int(g.rank[w]) == 1
                                assert eta(g, w) == Fraction(1, root_rank)
                                checked += 1
        _verdict(
            capsys, "C02", not bad,
            f"alive leaves carry eta = 1/R: {len(rows)} kernel runs "
            f"({len(bad)} violations), {checked} exact leaf checks")


class TestC03BehavioralFidelity:
    def test_sampled_mean_matches_exact_total(self, capsys):
        t = build_factorial_tree(2)
        schedule = [0, 1, 3, 2]  # root, first child, its leaf, other child
        vg = play_verified(t, schedule)
        assert vg.total_cost == 4
        n = 100_000
        total = 0
        seen = set()
        for i in range(n):
            run = play_game(t, np.asarray(schedule), seed=i, behavioral=True)
            total += run.behavioral_cost
            seen.add(run.behavioral_cost)
        mean = total / n
        se = 2.0 / n ** 0.5  # outcomes are 2 or 6, sd exactly 2
        ok = abs(mean - 4.0) <= 3 * se and seen <= {2, 6}
        _verdict(
            capsys, "C03", ok,
            f"behavioral mean {mean:.4f} vs exact 4 "
            f"(3 SE = {3 * se:.4f}, outcomes {sorted(seen)}, n = {n})")


class TestC04SplitEquivalence:
    def test_exhaustive_split_against_brute_force(self, capsys):
        checked = 0
        for k in range(1, 5):
            for sizes in itertools.product((2, 3), repeat=k):
                inst = Instance(sizes)
                requests = list(itertools.product(
                    *(range(s) for s in sizes)))
                comp = {r: set(compatible_configs(inst, r))
                        for r in requests}
                axes = [tuple(range(s)) + (WILDCARD,) for s in sizes]
                for pat in itertools.product(*axes):
                    if sum(1 for v in pat if v == WILDCARD) > 3:
                        continue
                    members = set(pattern_members(inst, pat))
                    for r in requests:
                        if not request_kills(pat, r):
                            assert members & comp[r], \
                                "surviving pattern must keep a server"
                            continue
                        union = set()
                        for child in split_pattern(pat, r):
                            union |= set(pattern_members(inst, child))
                        assert union == members & comp[r]
                        checked += 1
        _verdict(
            capsys, "C04", True,
            f"split children equal members-inside-complement on "
            f"{checked} killed (pattern, request) pairs, exhaustive")


class TestC05ReductionBound:
    TRACES_PER_K = 500
    TRACE_LEN = 200

    def test_phase_and_run_bounds_against_opt(self, capsys):
        t0 = time.time()
        phases = 0
        runs = 0
        for k in (2, 3, 4):
            inst = uniform_binary(k)
            initial = (0,) * k
            envelope_of = {}
            for i in range(self.TRACES_PER_K):
                rng = np.random.default_rng((MASTER_SEED, k, i))
                reqs = [tuple(int(v) for v in row)
                        for row in random_requests(inst, self.TRACE_LEN,
                                                   rng)]
                opt = offline_opt(inst, initial, reqs)
                if opt not in envelope_of:
                    envelope_of[opt] = competitive_envelope(inst, opt)
                env = envelope_of[opt]
                sampled = run_reduction(inst, initial, reqs,
                                        mode="behavioral", seed=i)
                # realized game cost may exceed the expectation bound on a
                # bad sample; only the two stated inequalities are certain
                assert sampled.all_phase_bounds_ok
                assert sampled.total_server_cost <= env
                # fractional shadow: expectation-level run, certain bounds
                exact = run_reduction(inst, initial, reqs, mode="exact")
                assert exact.all_phase_bounds_ok
                assert exact.all_game_bounds_ok
                assert exact.total_server_cost <= env
                phases += sampled.finished_phases + exact.finished_phases
                runs += 2
        _verdict(
            capsys, "C05", True,
            f"server <= game + 1 per phase, run <= (4kH(k!)+k+1)(OPT+1): "
            f"{runs} runs, {phases} finished phases, {time.time() - t0:.0f}s")


class TestC06PhaseLowerBound:
    def test_finished_phases_cost_every_start(self, capsys):
        checked = 0
        for sizes in ((2, 2), (2, 2, 2), (2, 3)):
            inst = Instance(sizes)
            initial = (0,) * inst.k
            for i in range(10):
                rng = np.random.default_rng((MASTER_SEED + 6, inst.k, i))
                reqs = [tuple(int(v) for v in row)
                        for row in random_requests(inst, 250, rng)]
                rep = run_reduction(inst, initial, reqs,
                                    mode="behavioral", seed=i)
                start = 0
                for phase in rep.phases:
                    slice_ = reqs[start:start + phase.requests]
                    start += phase.requests
                    costs = per_start_phase_costs(inst, slice_)
                    assert (costs >= 1).all()
                    checked += 1
        _verdict(
            capsys, "C06", checked >= 30,
            f"every finished phase costs >= 1 from every start config "
            f"({checked} phases, all starts)")


class TestC07DeterministicPenalizer:
    def test_every_deterministic_algorithm_pays(self, capsys):
        t0 = time.time()
        rows, ok = run_det_lb_experiment(
            range(3, 9), ["greedy_stay", "reduction_dfs"])
        assert ok and len(rows) == 12
        for row in rows:
            k = row["k"]
            assert row["certified"]
            assert row["algorithm_cost_num"] >= \
                (2 ** k - 1) * row["algorithm_cost_den"]
            assert row["adversary_cost"] <= k
        _verdict(
            capsys, "C07", True,
            f"penalizer forces cost >= 2^k - 1 at adversary cost <= k for "
            f"k = 3..8, both algorithms ({time.time() - t0:.1f}s)")


class TestC08CodeConstruction:
    def test_radius_one_code_on_sixteen_bits(self, capsys):
        t0 = time.time()
        code = build_code(16, 1)
        md = pairwise_min_distance(code.words)
        sizes_ok = True
        for k in range(1, 17):
            pop = np.bitwise_count(np.arange(1 << k, dtype=np.uint32))
            counts = np.bincount(pop, minlength=k + 1)
            for r in range(k + 1):
                if ball_size(k, r) != int(counts[: r + 1].sum()):
                    sizes_ok = False
        _verdict(
            capsys, "C08", code.size >= 16 and md >= 2 and sizes_ok,
            f"code of size {code.size} >= 16, pairwise distance "
            f"{md} >= 2, ball volumes exact for k <= 16 "
            f"({time.time() - t0:.1f}s)")


class TestC09RandomizedHerding:
    def test_exact_oracle_confine_accounting(self, capsys):
        t0 = time.time()
        confines = 0
        for k in range(3, 7):
            rep = randomized_lb_phase(k, radius=1, oracle="exact")
            assert rep.all_ok
            total = Fraction(0)
            for c in rep.confines:
                assert c.ok
                assert c.measured_cost >= c.bound_term
                total += c.bound_term
                confines += 1
            assert rep.total_bound == total
            assert rep.total_measured >= total
        _verdict(
            capsys, "C09", True,
            f"measured herding cost >= certified term per Confine, "
            f"k = 3..6, {confines} confines ({time.time() - t0:.1f}s)")


class TestC10Determinism:
    SPECS = ("factorial-4", "kary-2-3")

    def _hydra_text(self, variant):
        specs = [TreeSpec("factorial-4", build_factorial_tree(4)),
                 TreeSpec("kary-2-3", build_complete_kary_tree(2, 3))]
        rows, ok = run_hydra_experiment(
            specs, ["greedy", "random", "qleaf"], runs=5,
            master_seed=99, behavioral=True, variant=variant)
        assert ok
        return write_csv(None, "hydra", HYDRA_HEADER, rows)

    def test_reports_are_byte_identical(self, capsys, tmp_path):
        variants = [None]
        if ACTIVE_VARIANT == "numba":
            variants.append("python")
        texts = {v: self._hydra_text(v) for v in variants}
        first = self._hydra_text(variants[0])
        assert all(t == first for t in texts.values())

        inst = uniform_binary(3)
        gks = [write_csv(None, "gks", GKS_HEADER,
                         run_gks_experiment(inst, "behavioral", runs=3,
                                            request_len=60,
                                            master_seed=7)[0])
               for _ in range(2)]
        assert gks[0] == gks[1]

        det = [write_csv(None, "det_lb", DET_LB_HEADER,
                         run_det_lb_experiment([3, 4], ["greedy_stay"])[0])
               for _ in range(2)]
        assert det[0] == det[1]

        rand = [write_jsonl(None, "rand_lb",
                            run_rand_lb_experiment([3], 1, "exact", 0)[0])
                for _ in range(2)]
        assert rand[0] == rand[1]

        assert run_code_gen(8, 1)[2]
        code = [write_csv(None, "code", CODE_HEADER, run_code_gen(8, 1)[0])
                for _ in range(2)]
        assert code[0] == code[1]

        out = tmp_path / "hydra.csv"
        out.write_text(first)
        again = tmp_path / "hydra2.csv"
        again.write_text(self._hydra_text(variants[0]))
        assert out.read_bytes() == again.read_bytes()
        _verdict(
            capsys, "C10", True,
            f"same master seed gives byte-identical reports across "
            f"{len(variants)} kernel variant(s) and every report kind")
