"""Fused integer game kernel with a jitted and a plain execution path.

One function plays a whole game: applies kills (scripted, greedy-by-mass or
uniform-random), maintains ranks incrementally, optionally tracks a single
randomized position, and verifies the exact per-step inequalities of the
fractional policy using integer arithmetic only. The checked inequalities
are the potential-drop condition multiplied through by its (positive)
denominators:

* internal kill of u:   rank(u)*level(u) - sum_c rank(c)*level(c) >= rank(u)
* leaf kill of u:       4*height*(R-1) - N >= D

where ``N = sum over alive w of rank(w)*level(w)`` and ``D = sum over alive
w != u of rank(w)*dist(u, w)``. D is computed in O(depth) by walking the dead
ancestors of u: the alive nodes whose lowest common ancestor with u is the
j-th ancestor a_j carry exactly ``rank(a_j) - rank(a_{j-1})`` live leaves
(pre-kill ranks), so

    D = depth(u)*(R-1) + (S - depth(u))
        - 2 * sum_j depth(a_j) * (rank(a_j) - rank(a_{j-1}))

with ``S = sum over alive w of rank(w)*depth(w)``. The kernel also asserts
the leaf-kill cost bound ``D <= 2*height*(R-1)``, that every awakened or
killed leaf has rank exactly 1, and (periodically, every kill for small
trees) that the alive ranks sum to ``rank(root)`` and alive leaves have unit
rank.

Per-denominator cost accumulators (``acc_internal[R]`` sums internal-kill
numerators rank(u) while the live leaf count was R; ``acc_leaf[R]`` holds
the single leaf-kill numerator D at R) let the exact total
``sum acc_internal[R]/R + sum acc_leaf[R]/(R*(R-1))`` be rebuilt as one
Fraction after the game.

All intermediate quantities fit int64 under the tree size cap: |N|, |S| <=
R*height, |D| <= 2*height*R, and the greedy heap key rank*n + n - 1 - id
stays below 2^62 for n <= 2*10^7.

The same function body runs in two variants: ``numba.njit`` compiled (used
when numba imports and ``HYDRALAB_DISABLE_NUMBA`` is unset) and the original
Python bytecode over numpy scalars. Both use the same int64/uint64 wrap
semantics and IEEE float ops, so results are bit-identical; the tests assert
this and ``benchmarks/bench_kernel.py`` compares speed.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .harmonics import harmonic, harmonic_float, harmonic_float_error
from .trees import Tree

ADV_SCRIPTED = 0
ADV_GREEDY = 1
ADV_RANDOM = 2

_ADVERSARY_CODES = {"greedy": ADV_GREEDY, "random": ADV_RANDOM}

STATUS_OK = 0
STATUS_BAD_KILL = 1          # schedule picked a node that is not alive
STATUS_SHORT_SCHEDULE = 2    # schedule ended before the game did

_U = np.uint64
_U13, _U7, _U17 = _U(13), _U(7), _U(17)

MASK64 = (1 << 64) - 1


def derive_seed(master_seed: int, stream_index: int) -> int:
    """Counter-based stream derivation (splitmix64 over master + index).

    Pure integer arithmetic so ports can reproduce it: x = master +
    (index + 1) * 0x9E3779B97F4A7C15 (mod 2^64), then two splitmix64
    finalisation rounds. A zero result becomes 1 because the xorshift state
    must be nonzero.
    """
    x = (master_seed + (stream_index + 1) * 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    x ^= x >> 31
    return x if x != 0 else 1


def _play(parent, child_start, children_flat, depth, level, root,
          height, adversary, schedule, seed, behavioral,
          check_every, schedule_out):
    n = parent.shape[0]

    life = np.zeros(n, dtype=np.int8)          # 0 asleep, 1 alive, 2 dead
    rank = np.zeros(n, dtype=np.int64)

    # ranks bottom-up over a reverse BFS order (ids need not be topological
    # for file-loaded trees)
    order = np.empty(n, dtype=np.int64)
    order[0] = root
    head = 0
    tail = 1
    while head < tail:
        u = order[head]
        head += 1
        for j in range(child_start[u], child_start[u + 1]):
            order[tail] = children_flat[j]
            tail += 1
    for i in range(n - 1, -1, -1):
        u = order[i]
        if child_start[u + 1] == child_start[u]:
            rank[u] = 1
        if u != root:
            rank[parent[u]] += rank[u]

    life[root] = 1
    total_leaves = rank[root]

    # alive set as a swap-remove list (uniform sampling, weighted walks)
    alive_list = np.empty(n, dtype=np.int64)
    alive_idx = np.full(n, -1, dtype=np.int64)
    alive_list[0] = root
    alive_idx[root] = 0
    alive_count = 1

    # max-heap for the greedy adversary, lazy deletion via the life check;
    # alive ranks never change, so stored keys stay valid while alive.
    # key = rank * n + (n - 1 - id): ties break toward the lowest id.
    heap_keys = np.empty(n + 1, dtype=np.int64)
    heap_nodes = np.empty(n + 1, dtype=np.int64)
    heap_size = 0
    if adversary == 1:
        heap_keys[0] = rank[root] * n + (n - 1 - root)
        heap_nodes[0] = root
        heap_size = 1

    rng = _U(seed)
    for _ in range(12):  # warmup
        rng ^= rng << _U13
        rng ^= rng >> _U7
        rng ^= rng << _U17

    R = rank[root]                       # live leaf count
    N = rank[root] * level[root]         # sum over alive of rank*level
    S = rank[root] * depth[root]         # sum over alive of rank*depth
    non_dead = n

    acc_internal = np.zeros(total_leaves + 1, dtype=np.int64)
    acc_leaf = np.zeros(total_leaves + 1, dtype=np.int64)

    drop_viol = 0
    obs_viol = 0
    case2_viol = 0
    ranksum_viol = 0
    frac_cost = 0.0
    behav_cost = np.int64(0)
    position = root
    steps = 0
    leaf_kills = 0
    status = 0
    record = schedule_out.shape[0] > 0
    since_check = 0

    while non_dead > 1:
        # ---- pick the victim ----
        if adversary == 0:
            if steps >= schedule.shape[0]:
                status = 2
                break
            u = schedule[steps]
            if u < 0 or u >= n or life[u] != 1:
                status = 1
                break
        elif adversary == 1:
            u = np.int64(-1)
            while heap_size > 0:
                top = heap_nodes[0]
                heap_size -= 1
                heap_keys[0] = heap_keys[heap_size]
                heap_nodes[0] = heap_nodes[heap_size]
                i = 0
                while True:
                    l = 2 * i + 1
                    if l >= heap_size:
                        break
                    big = l
                    r_ = l + 1
                    if r_ < heap_size and heap_keys[r_] > heap_keys[l]:
                        big = r_
                    if heap_keys[big] <= heap_keys[i]:
                        break
                    heap_keys[i], heap_keys[big] = heap_keys[big], heap_keys[i]
                    heap_nodes[i], heap_nodes[big] = heap_nodes[big], heap_nodes[i]
                    i = big
                if life[top] == 1:
                    u = top
                    break
            if u < 0:
                status = 1
                break
        else:
            rng ^= rng << _U13
            rng ^= rng >> _U7
            rng ^= rng << _U17
            u = alive_list[np.int64(rng % _U(alive_count))]

        # ---- kill u ----
        life[u] = 2
        non_dead -= 1
        last = alive_count - 1
        moved = alive_list[last]
        at = alive_idx[u]
        alive_list[at] = moved
        alive_idx[moved] = at
        alive_idx[u] = -1
        alive_count = last

        n_children = child_start[u + 1] - child_start[u]
        if n_children > 0:
            # internal kill: children awaken with mass rank(c)/R, cost rank(u)/R
            child_level_sum = np.int64(0)
            child_depth_sum = np.int64(0)
            for j in range(child_start[u], child_start[u + 1]):
                c = children_flat[j]
                life[c] = 1
                alive_list[alive_count] = c
                alive_idx[c] = alive_count
                alive_count += 1
                child_level_sum += rank[c] * level[c]
                child_depth_sum += rank[c] * depth[c]
                if child_start[c + 1] == child_start[c] and rank[c] != 1:
                    obs_viol += 1
                if adversary == 1:
                    heap_keys[heap_size] = rank[c] * n + (n - 1 - c)
                    heap_nodes[heap_size] = c
                    i = heap_size
                    heap_size += 1
                    while i > 0:
                        p = (i - 1) // 2
                        if heap_keys[p] >= heap_keys[i]:
                            break
                        heap_keys[i], heap_keys[p] = heap_keys[p], heap_keys[i]
                        heap_nodes[i], heap_nodes[p] = heap_nodes[p], heap_nodes[i]
                        i = p
            if rank[u] * level[u] - child_level_sum < rank[u]:
                drop_viol += 1
            acc_internal[R] += rank[u]
            frac_cost += rank[u] / R
            N += child_level_sum - rank[u] * level[u]
            S += child_depth_sum - rank[u] * depth[u]
            if behavioral == 1 and position == u:
                rng ^= rng << _U13
                rng ^= rng >> _U7
                rng ^= rng << _U17
                draw = np.int64(rng % _U(rank[u]))
                acc = np.int64(0)
                for j in range(child_start[u], child_start[u + 1]):
                    c = children_flat[j]
                    acc += rank[c]
                    if draw < acc:
                        position = c
                        behav_cost += 1
                        break
        else:
            # leaf kill: u was one of R live leaves
            if rank[u] != 1:
                obs_viol += 1
            d_u = depth[u]
            # ancestor walk with pre-kill ranks
            ls = np.int64(0)
            prev_rank = rank[u]
            a = parent[u]
            while a != -1:
                ls += depth[a] * (rank[a] - prev_rank)
                prev_rank = rank[a]
                a = parent[a]
            D = d_u * (R - 1) + (S - d_u) - 2 * ls
            if 4 * height * (R - 1) - N < D:
                drop_viol += 1
            if D > 2 * height * (R - 1):
                case2_viol += 1
            acc_leaf[R] += D
            frac_cost += D / (R * (R - 1))
            # rank decrements hit u and its (dead) root path only, so N and
            # S over the alive set just lose u's own contribution
            a = u
            while a != -1:
                rank[a] -= 1
                a = parent[a]
            R -= 1
            S -= d_u
            leaf_kills += 1
            if behavioral == 1 and position == u:
                rng ^= rng << _U13
                rng ^= rng >> _U7
                rng ^= rng << _U17
                draw = np.int64(rng % _U(R))
                acc = np.int64(0)
                for idx in range(alive_count):
                    w = alive_list[idx]
                    acc += rank[w]
                    if draw < acc:
                        position = w
                        # unweighted tree distance via the ancestor climb
                        x = u
                        y = w
                        dx = depth[u]
                        dy = depth[w]
                        paid = np.int64(0)
                        while dx > dy:
                            x = parent[x]
                            dx -= 1
                            paid += 1
                        while dy > dx:
                            y = parent[y]
                            dy -= 1
                            paid += 1
                        while x != y:
                            x = parent[x]
                            y = parent[y]
                            paid += 2
                        behav_cost += paid
                        break

        if record:
            schedule_out[steps] = u
        steps += 1
        since_check += 1
        if since_check >= check_every or non_dead == 1:
            since_check = 0
            tot = np.int64(0)
            for idx in range(alive_count):
                w = alive_list[idx]
                tot += rank[w]
                if child_start[w + 1] == child_start[w] and rank[w] != 1:
                    obs_viol += 1
            if tot != R:
                ranksum_viol += 1

    if status == 0 and non_dead == 1:
        if alive_count != 1 or R != 1:
            ranksum_viol += 1

    return (status, steps, drop_viol, obs_viol, case2_viol, ranksum_viol,
            frac_cost, behav_cost, R, leaf_kills, acc_internal, acc_leaf,
            position)


_play_python = _play
_play_numba = None
_numba_error = None
if os.environ.get("HYDRALAB_DISABLE_NUMBA", "") != "1":
    try:
        import numba

        _play_numba = numba.njit(cache=True, nogil=True)(_play)
    except ImportError as exc:  # pragma: no cover - depends on environment
        _numba_error = exc

ACTIVE_VARIANT = "numba" if _play_numba is not None else "python"


@dataclass(frozen=True)
class GameRun:
    """Everything one kernel run reports."""

    tree: Tree
    adversary: str
    seed: int
    status: int
    steps: int
    leaf_kills: int
    potential_drop_violations: int
    unit_rank_violations: int
    leaf_cost_bound_violations: int
    rank_sum_violations: int
    frac_cost_float: float
    behavioral_cost: int
    final_position: int
    acc_internal: np.ndarray
    acc_leaf: np.ndarray
    schedule: np.ndarray | None

    @property
    def checks_ok(self) -> bool:
        return (self.status == STATUS_OK and self.potential_drop_violations == 0
                and self.unit_rank_violations == 0
                and self.leaf_cost_bound_violations == 0
                and self.rank_sum_violations == 0)

    def total_cost_exact(self) -> Fraction:
        return accumulated_cost_fraction(self.acc_internal, self.acc_leaf)


def play_game(t: Tree, adversary, seed: int = 0, behavioral: bool = False,
              record_schedule: bool = False, variant: str | None = None,
              check_every: int | None = None) -> GameRun:
    """Run one full game through the kernel.

    ``adversary`` is ``"greedy"``, ``"random"`` or an explicit kill schedule
    (array of node ids, one per step). ``seed`` may be any int; it is
    whitened through :func:`derive_seed` before feeding the kernel stream
    (used by the random adversary and the behavioral position). ``variant``
    forces ``"numba"`` or ``"python"``; the default picks the active one.
    ``check_every`` controls how often the O(alive) rank-sum audit runs
    (every kill for trees up to 4096 nodes, every 64 kills above).
    """
    if isinstance(adversary, str):
        try:
            code = _ADVERSARY_CODES[adversary]
        except KeyError:
            raise ValueError(f"unknown adversary {adversary!r}") from None
        schedule = np.empty(0, dtype=np.int64)
        name = adversary
    else:
        code = ADV_SCRIPTED
        schedule = np.ascontiguousarray(adversary, dtype=np.int64)
        if schedule.shape[0] != max(t.node_count - 1, 0):
            raise ValueError(
                f"scripted schedule must hold node_count-1 = {t.node_count - 1} "
                f"kills, got {schedule.shape[0]}")
        name = "scripted"

    if variant is None:
        fn = _play_numba if _play_numba is not None else _play_python
    elif variant == "numba":
        if _play_numba is None:
            raise RuntimeError("numba variant unavailable "
                               f"(disabled or import failed: {_numba_error})")
        fn = _play_numba
    elif variant == "python":
        fn = _play_python
    else:
        raise ValueError(f"unknown kernel variant {variant!r}")

    if check_every is None:
        check_every = 1 if t.node_count <= 4096 else 64
    check_every = max(1, int(check_every))
    schedule_out = np.empty(t.node_count - 1 if record_schedule else 0,
                            dtype=np.int64)

    (status, steps, drop_viol, obs_viol, case2_viol, ranksum_viol,
     frac_cost, behav_cost, _final_r, leaf_kills, acc_i, acc_l, pos) = fn(
        t.parent, t.child_offsets, t.children_flat, t.depth, t.level,
        t.root, t.height, code, schedule, np.uint64(derive_seed(seed, 0)),
        1 if behavioral else 0, check_every, schedule_out)

    return GameRun(tree=t, adversary=name, seed=seed, status=int(status),
                   steps=int(steps), leaf_kills=int(leaf_kills),
                   potential_drop_violations=int(drop_viol),
                   unit_rank_violations=int(obs_viol),
                   leaf_cost_bound_violations=int(case2_viol),
                   rank_sum_violations=int(ranksum_viol),
                   frac_cost_float=float(frac_cost),
                   behavioral_cost=int(behav_cost), final_position=int(pos),
                   acc_internal=acc_i, acc_leaf=acc_l,
                   schedule=schedule_out if record_schedule else None)


def _pair_sum(terms: list[tuple[int, int]]) -> tuple[int, int]:
    """Divide-and-conquer sum of raw fractions, one normalisation at the end."""
    if not terms:
        return 0, 1
    while len(terms) > 1:
        merged = []
        for i in range(0, len(terms) - 1, 2):
            n1, d1 = terms[i]
            n2, d2 = terms[i + 1]
            merged.append((n1 * d2 + n2 * d1, d1 * d2))
        if len(terms) % 2:
            merged.append(terms[-1])
        terms = merged
    return terms[0]


def accumulated_cost_fraction(acc_internal: np.ndarray,
                              acc_leaf: np.ndarray) -> Fraction:
    """Exact total cost from the kernel's per-denominator accumulators."""
    terms = []
    if acc_internal.shape[0] > 1 and int(acc_internal[1]):
        terms.append((int(acc_internal[1]), 1))
    for r in range(2, acc_internal.shape[0]):
        v = int(acc_internal[r])
        if v:
            terms.append((v, r))
    for r in range(2, acc_leaf.shape[0]):
        v = int(acc_leaf[r])
        if v:
            terms.append((v, r * (r - 1)))
    num, den = _pair_sum(terms)
    return Fraction(num, den)


def cost_bound_fraction(height: int, leaf_count: int) -> Fraction:
    """Whole-game cost bound: 4 * height * H(leaf_count) + height."""
    return 4 * height * harmonic(leaf_count) + height


def check_cost_bound(run: GameRun) -> bool:
    """Exact decision of total cost <= 4*h*H(L) + h.

    Floats with outward error envelopes decide the typical case; when the
    margin is inside the envelope the comparison falls back to exact
    Fractions, so the verdict always matches exact arithmetic. The kernel
    sum adds one correctly-rounded term per step (integer operands convert
    exactly below 2^53), so its error stays below (2*steps+4)*2^-53 times
    the total.
    """
    t = run.tree
    h, L = t.height, t.leaf_count
    bound_f = 4.0 * h * harmonic_float(L) + h
    bound_err = 4.0 * h * harmonic_float_error(L) + 2.0 ** -50 * bound_f
    cost_f = run.frac_cost_float
    cost_err = (2 * run.steps + 4) * 2.0 ** -53 * max(cost_f, 1.0)
    if cost_f + cost_err <= bound_f - bound_err:
        return True
    if cost_f - cost_err > bound_f + bound_err:
        return False
    return run.total_cost_exact() <= cost_bound_fraction(h, L)
