"""Adversaries and lower-bound drivers.

Game side: a scripted two-stage schedule that herds play into a spread-out
set of leaves. Q holds, for every node whose subtree height is exactly
floor(h/2), the lowest-id leaf below it; stage A kills everything else in
BFS order (parents fall before children, so each victim is awake on its
turn), stage B kills Q ascending until one leaf stands. Distinct Q members
sit in disjoint subtrees, so on trees with uniform leaf depth their pairwise
distance is at least 2*floor(h/2), making stage B's leaf kills expensive.

Server side, binary coordinates throughout:

* the deterministic penalizer requests the current config's antipode, which
  exactly one config fails to serve. Every request forces the algorithm to
  move; the run stops once 2^k - 1 distinct configs were penalized or after
  ``budget_factor * 2^k`` requests (memoryless algorithms cycle through few
  configs and would stall forever). Either exit certifies algorithm cost
  >= 2^k - 1 while a never-penalized config serves the whole run and costs
  the adversary at most k to reach.
* the randomized bound herds a distribution. Confine(Q) keeps requesting the
  antipode of the lowest word outside Q carrying more than eps mass; in
  binary, antipode(c) kills exactly the alive patterns containing c, after
  which no surviving config equals c for the rest of the phase, so each
  request buries one config for good and Confine terminates. Between
  Confines the adversary deletes the heaviest code word; the algorithm's
  measured movement during the next Confine must cover shipping that mass
  back into the shrunken code, a triangle-inequality certificate checked
  exactly per Confine. A never-deleted code word serves every request
  issued, so the phase never ends.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .gks import Instance, uniform_binary
from .reduction import Reduction
from .trees import Tree, build_factorial_tree


# ---------------------------------------------------------------------------
# scripted game schedule


def q_leaf_set(t: Tree) -> np.ndarray:
    """Lowest-id leaf under each node of subtree height floor(h/2)."""
    half = t.height // 2
    n = t.node_count
    min_leaf = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    for u in t.bfs_order[::-1]:
        u = int(u)
        if t.is_leaf(u):
            min_leaf[u] = u
        p = int(t.parent[u])
        if p >= 0 and min_leaf[u] < min_leaf[p]:
            min_leaf[p] = min_leaf[u]
    return np.unique(min_leaf[t.level == half])


def q_leaf_schedule(t: Tree) -> np.ndarray:
    """Scripted kill order: all non-Q nodes in BFS order, then Q ascending
    with the largest id spared as the survivor."""
    q = set(int(v) for v in q_leaf_set(t))
    stage_a = [int(u) for u in t.bfs_order if int(u) not in q]
    stage_b = sorted(q)[:-1]
    return np.asarray(stage_a + stage_b, dtype=np.int64)


# ---------------------------------------------------------------------------
# adversarial requests


def antipode(config) -> tuple[int, ...]:
    """Binary complement; the one request exactly this config fails."""
    out = []
    for v in config:
        v = int(v)
        if v not in (0, 1):
            raise ValueError("antipode needs binary coordinates")
        out.append(1 - v)
    return tuple(out)


def dodge(config, sizes) -> tuple[int, ...]:
    """Request differing from the config in every coordinate."""
    return tuple((int(c) + 1) % int(s) for c, s in zip(config, sizes))


def hamming(a, b) -> int:
    return sum(1 for x, y in zip(a, b) if int(x) != int(y))


# ---------------------------------------------------------------------------
# deterministic lower bound


@dataclass(frozen=True)
class DetLbReport:
    k: int
    algorithm: str
    requests: int
    distinct_penalized: int
    algorithm_cost: Fraction
    adversary_cost: int
    budget: int
    reached_target: bool

    @property
    def certified(self) -> bool:
        """algorithm cost >= 2^k - 1 against adversary cost <= k."""
        floor = 2 ** self.k - 1
        return (self.algorithm_cost >= floor
                and self.adversary_cost <= self.k
                and self.requests <= self.budget)

    def as_record(self) -> dict:
        return {
            "k": self.k,
            "algorithm": self.algorithm,
            "requests": self.requests,
            "distinct_penalized": self.distinct_penalized,
            "algorithm_cost_num": self.algorithm_cost.numerator,
            "algorithm_cost_den": self.algorithm_cost.denominator,
            "adversary_cost": self.adversary_cost,
            "reached_target": self.reached_target,
            "certified": self.certified,
        }


def det_penalizer(algorithm, name: str, budget_factor: int = 4) -> DetLbReport:
    """Drive any binary-config algorithm with its own antipode.

    ``algorithm`` exposes ``instance``, ``config`` and ``serve(request)``
    returning the movement that request caused. Each request is unserved by
    exactly the current config, so the algorithm pays at least 1 per
    request. Stops at 2^k - 1 distinct penalized configs or at the request
    budget; both exits certify the cost floor.
    """
    inst: Instance = algorithm.instance
    if any(s != 2 for s in inst.sizes):
        raise ValueError("the penalizer drives binary instances only")
    k = inst.k
    initial = tuple(algorithm.config)
    target = 2 ** k - 1
    budget = budget_factor * 2 ** k
    penalized: set[tuple[int, ...]] = set()
    cost = Fraction(0)
    requests = 0
    while len(penalized) < target and requests < budget:
        c = tuple(algorithm.config)
        penalized.add(c)
        paid = algorithm.serve(antipode(c))
        if paid < 1:
            raise AssertionError("a penalizing request must force a move")
        cost += paid
        requests += 1
    survivors = [c for c in itertools.product((0, 1), repeat=k)
                 if c not in penalized]
    c_star = min(survivors)
    return DetLbReport(
        k=k, algorithm=name, requests=requests,
        distinct_penalized=len(penalized), algorithm_cost=cost,
        adversary_cost=hamming(initial, c_star), budget=budget,
        reached_target=len(penalized) >= target)


# ---------------------------------------------------------------------------
# code packing


def ball_size(k: int, radius: int) -> int:
    """Hamming ball volume: sum of C(k, i) for i <= radius."""
    return sum(math.comb(k, i) for i in range(min(radius, k) + 1))


def _flip_neighborhood(word: int, k: int, radius: int):
    """All words within Hamming distance radius of word."""
    bits = list(range(k))
    for r in range(radius + 1):
        for combo in itertools.combinations(bits, r):
            w = word
            for b in combo:
                w ^= 1 << b
            yield w


def word_to_config(word: int, k: int) -> tuple[int, ...]:
    """Bit i of the word is coordinate i of the config."""
    return tuple((word >> i) & 1 for i in range(k))


def config_to_word(config) -> int:
    w = 0
    for i, v in enumerate(config):
        v = int(v)
        if v not in (0, 1):
            raise ValueError("binary configs only")
        w |= v << i
    return w


@dataclass(frozen=True)
class CodeSet:
    """Greedily packed binary code with pairwise distance >= 2*radius."""

    k: int
    radius: int
    words: np.ndarray  # uint64 words in greedy (ascending) acceptance order

    @property
    def size(self) -> int:
        return int(self.words.shape[0])

    def configs(self) -> list[tuple[int, ...]]:
        return [word_to_config(int(w), self.k) for w in self.words]


def build_code(k: int, radius: int) -> CodeSet:
    """Greedy ascending scan accepting words at distance >= 2*radius.

    A word is rejected exactly when it lands inside some accepted word's
    radius 2*radius - 1 ball, which the bitmap marks. For radius 1 the
    construction yields the even-parity words, 2^(k-1) of them.
    """
    if k < 1 or k > 24:
        raise ValueError("k out of the supported 1..24 range")
    if radius < 1:
        raise ValueError("radius must be at least 1")
    blocked = np.zeros(1 << k, dtype=bool)
    chosen: list[int] = []
    for w in range(1 << k):
        if blocked[w]:
            continue
        chosen.append(w)
        for near in _flip_neighborhood(w, k, 2 * radius - 1):
            blocked[near] = True
    return CodeSet(k=k, radius=radius,
                   words=np.asarray(chosen, dtype=np.uint64))


def pairwise_min_distance(words: np.ndarray, chunk: int = 256) -> int:
    """Minimum pairwise Hamming distance, chunked popcounts."""
    m = words.shape[0]
    if m < 2:
        raise ValueError("need at least two words")
    words = words.astype(np.uint64)
    best = None
    for lo in range(0, m, chunk):
        block = words[lo:lo + chunk]
        d = np.bitwise_count(block[:, None] ^ words[None, :])
        rows = np.arange(block.shape[0])
        d[rows, lo + rows] = np.iinfo(d.dtype).max  # mask self-pairs
        val = int(d.min())
        best = val if best is None else min(best, val)
    return best


# ---------------------------------------------------------------------------
# mass oracles for the randomized bound


class ExactMassOracle:
    """Reads the exact carrier's config marginal and drives it directly."""

    exact = True

    def __init__(self, reduction: Reduction):
        if reduction.mode != "exact":
            raise ValueError("the exact oracle needs the exact carrier")
        self.reduction = reduction

    def snapshot(self) -> dict[tuple[int, ...], Fraction]:
        return self.reduction.config_distribution()

    def heavy(self, mass: Fraction, eps: Fraction) -> bool:
        return mass > eps

    def serve(self, request) -> Fraction:
        return self.reduction.serve(request)


class EmpiricalMassOracle:
    """Monte Carlo stand-in: N behavioral replicas vote on the marginal.

    A config counts as heavy when its frequency clears eps by three standard
    errors. Costs are replica averages, so the Confine inequalities hold
    only approximately; this oracle exercises the adversary against a
    sampled algorithm and certifies nothing.
    """

    exact = False

    def __init__(self, instance: Instance, initial, samples: int = 200,
                 seed: int = 0):
        self.replicas = [Reduction(instance, initial, mode="behavioral",
                                   seed=s)
                         for s in range(seed, seed + samples)]
        self.samples = samples

    def snapshot(self) -> dict[tuple[int, ...], Fraction]:
        out: dict[tuple[int, ...], Fraction] = {}
        unit = Fraction(1, self.samples)
        for r in self.replicas:
            cfg = tuple(r.config)
            out[cfg] = out.get(cfg, Fraction(0)) + unit
        return out

    def heavy(self, mass: Fraction, eps: Fraction) -> bool:
        f = float(mass)
        margin = 3.0 * math.sqrt(max(f * (1.0 - f), 1e-12) / self.samples)
        return f > float(eps) + margin

    def serve(self, request) -> Fraction:
        total = Fraction(0)
        for r in self.replicas:
            total += r.serve(request)
        return total / self.samples


# ---------------------------------------------------------------------------
# randomized lower bound


@dataclass(frozen=True)
class ConfineRecord:
    index: int
    removed: tuple[int, ...] | None  # code word deleted before this Confine
    requests: int
    measured_cost: Fraction
    bound_term: Fraction
    ok: bool

    def as_record(self) -> dict:
        return {
            "i": self.index,
            "removed": None if self.removed is None else list(self.removed),
            "requests": self.requests,
            "measured_cost_num": self.measured_cost.numerator,
            "measured_cost_den": self.measured_cost.denominator,
            "bound_term_num": self.bound_term.numerator,
            "bound_term_den": self.bound_term.denominator,
            "ok": self.ok,
        }


@dataclass(frozen=True)
class RandLbReport:
    k: int
    radius: int
    oracle: str
    code_size: int
    eps: Fraction
    confines: tuple[ConfineRecord, ...]
    total_measured: Fraction
    total_bound: Fraction
    adversary_cost: int
    survivor: tuple[int, ...]

    @property
    def all_ok(self) -> bool:
        if self.oracle != "exact":
            return True  # sampled marginals certify nothing
        return (all(c.ok for c in self.confines)
                and self.total_measured >= self.total_bound)

    def as_record(self) -> dict:
        return {
            "k": self.k,
            "radius": self.radius,
            "oracle": self.oracle,
            "m": self.code_size,
            "eps_num": self.eps.numerator,
            "eps_den": self.eps.denominator,
            "per_confine": [c.as_record() for c in self.confines],
            "total_measured_num": self.total_measured.numerator,
            "total_measured_den": self.total_measured.denominator,
            "total_bound_num": self.total_bound.numerator,
            "total_bound_den": self.total_bound.denominator,
            "adversary_cost": self.adversary_cost,
            "all_ok": self.all_ok,
        }


def _confine(oracle, universe, inside, eps: Fraction,
             cap: int) -> tuple[int, Fraction]:
    """Request antipodes of heavy outside configs until none remain."""
    inside_set = set(inside)
    requests = 0
    cost = Fraction(0)
    while True:
        mu = oracle.snapshot()
        heavy = None
        for c in universe:
            if c in inside_set:
                continue
            if oracle.heavy(mu.get(c, Fraction(0)), eps):
                heavy = c
                break
        if heavy is None:
            return requests, cost
        if requests >= cap:
            raise AssertionError("Confine exceeded its request cap")
        cost += oracle.serve(antipode(heavy))
        requests += 1


def _outside_mass(mu, universe, inside_set) -> Fraction:
    return sum((mu.get(c, Fraction(0)) for c in universe
                if c not in inside_set), Fraction(0))


def randomized_lb_phase(k: int, radius: int = 1, oracle: str = "exact",
                        eps: Fraction | None = None, seed: int = 0,
                        samples: int = 200) -> RandLbReport:
    """One full herding run over the greedy code of the given radius.

    Confine 0 drives the mass into the code; each later round deletes the
    heaviest remaining word c (ties to the earlier word), Confines on the
    rest Q, and certifies, exactly for the exact oracle,

        measured cost >= (mu_before(c) - mu_after(outside Q)) * dist(c, Q).

    At least that much mass flowed from c into Q, each unit traveling at
    least the removed word's distance to the code remnant.
    """
    inst = uniform_binary(k)
    if eps is None:
        eps = Fraction(1, 2 ** (2 * k + 2))
    code = build_code(k, radius)
    universe = [word_to_config(w, k) for w in range(2 ** k)]
    initial = (0,) * k
    if oracle == "exact":
        orc = ExactMassOracle(Reduction(inst, initial, mode="exact",
                                        seed=seed))
    elif oracle == "empirical":
        orc = EmpiricalMassOracle(inst, initial, samples=samples, seed=seed)
    else:
        raise ValueError(f"unknown oracle {oracle!r}")
    # each penalizing request buries one config for the rest of the phase,
    # and the phase never ends, so this cap is never reached honestly
    cap = build_factorial_tree(k).node_count + 2 ** k
    live = list(code.configs())
    records = []
    req0, cost0 = _confine(orc, universe, live, eps, cap)
    records.append(ConfineRecord(index=0, removed=None, requests=req0,
                                 measured_cost=cost0, bound_term=Fraction(0),
                                 ok=True))
    i = 1
    while len(live) > 1:
        mu = orc.snapshot()
        mu_c, idx = max(((mu.get(c, Fraction(0)), j)
                         for j, c in enumerate(live)),
                        key=lambda t: (t[0], -t[1]))
        removed = live.pop(idx)
        dist_to_rest = min(hamming(removed, q) for q in live)
        reqs, cost = _confine(orc, universe, live, eps, cap)
        outside_after = _outside_mass(orc.snapshot(), universe, set(live))
        term = max((mu_c - outside_after) * dist_to_rest, Fraction(0))
        ok = cost >= term if orc.exact else True
        records.append(ConfineRecord(index=i, removed=removed, requests=reqs,
                                     measured_cost=cost, bound_term=term,
                                     ok=ok))
        i += 1
    survivor = live[0]
    return RandLbReport(
        k=k, radius=radius, oracle=oracle, code_size=code.size, eps=eps,
        confines=tuple(records),
        total_measured=sum((r.measured_cost for r in records), Fraction(0)),
        total_bound=sum((r.bound_term for r in records), Fraction(0)),
        adversary_cost=hamming(initial, survivor), survivor=survivor)
