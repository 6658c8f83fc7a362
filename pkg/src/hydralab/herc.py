"""Rank-proportional fractional policy, its potential, and baselines.

The policy keeps one unit of mass spread over the alive nodes: node ``u``
carries ``eta(u) = rank(u) / rank(root)``. Killing a node moves exactly its
mass:

* internal kill of ``u``: each child ``w`` receives ``eta(u) * rank(w) /
  rank(u)`` (which equals ``rank(w) / rank(root)``), each unit of mass pays
  distance 1, so the step costs ``eta(u)``;
* leaf kill of ``u`` (one of ``R`` live leaves): every other alive node ``w``
  receives ``rank(w) / (R * (R - 1))`` and the step costs the mass-weighted
  distance, which never exceeds ``2 * height / R``.

The potential ``phi = 4 * height * H(rank(root)) + sum_w eta(w) * level(w)``
drops by at least the step cost on every kill; telescoping gives the game
bound ``4 * height * H(leaf_count) + height``. Everything here is exact
rational arithmetic; the integer-only fast path in ``fastgame`` is validated
against this module.

A behavioral (randomized, single-position) realisation of the same policy and
a deterministic depth-first baseline live here too.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .harmonics import harmonic
from .hydra import GameProtocolError, GameState, KillRecord, kill, new_game
from .trees import Tree, dist, preorder

CASE_INTERNAL = 1
CASE_LEAF = 2


def eta(g: GameState, u: int) -> Fraction:
    """Mass on node ``u``: rank(u)/rank(root) if alive, else 0."""
    if g.life[u] != 1:
        return Fraction(0)
    return Fraction(int(g.rank[u]), g.rank_root())


def distribution(g: GameState) -> dict[int, Fraction]:
    """Mass of every alive node. Values sum to 1 on any unfinished game."""
    r = g.rank_root()
    return {u: Fraction(int(g.rank[u]), r) for u in sorted(g.alive)}


@dataclass(frozen=True)
class StepCost:
    killed: int
    case: int                       # CASE_INTERNAL or CASE_LEAF
    value: Fraction                 # mass-weighted distance paid
    moves: tuple                    # (src, dst, mass) triples, exact masses

    def mass_moved(self) -> Fraction:
        return sum((m for _, _, m in self.moves), Fraction(0))


@dataclass(frozen=True)
class PotentialSnapshot:
    phi: Fraction
    harmonic_term: Fraction
    level_term: Fraction


def potential(g: GameState) -> PotentialSnapshot:
    """``4 * height * H(rank(root)) + sum over alive of eta * level``.

    Recomputed from scratch; this is the reference the incremental paths are
    tested against.
    """
    t = g.tree
    r = g.rank_root()
    harm = 4 * t.height * harmonic(r)
    n = sum(int(g.rank[u]) * int(t.level[u]) for u in g.alive)
    lvl = Fraction(n, r) if r else Fraction(0)
    return PotentialSnapshot(phi=harm + lvl, harmonic_term=harm, level_term=lvl)


def verify_step(phi_before: PotentialSnapshot, phi_after: PotentialSnapshot,
                cost: StepCost) -> bool:
    """Exact check that the potential drop covers the step cost."""
    return phi_after.phi - phi_before.phi <= -cost.value


class FractionalHerc:
    """Exact shadow of the fractional policy attached to one game.

    ``update(killed)`` must be called once per kill, immediately after it, in
    order; anything else raises :class:`GameProtocolError`. The needed
    pre-kill quantities are reconstructed from the post-kill state: an
    internal kill changes no rank, and a leaf kill changes no rank of any
    node that is still alive.
    """

    def __init__(self, g: GameState):
        self.game = g
        self._cursor = len(g.steps)
        self.total_cost = Fraction(0)

    def update(self, killed: int) -> StepCost:
        g = self.game
        if self._cursor != len(g.steps) - 1:
            raise GameProtocolError(
                "policy update out of sync with the kill log "
                f"(consumed {self._cursor} of {len(g.steps)} kills)")
        rec: KillRecord = g.steps[self._cursor]
        if rec.node != killed:
            raise GameProtocolError(
                f"update for node {killed} but the last kill was {rec.node}")
        self._cursor += 1
        cost = self._step_cost(rec)
        self.total_cost += cost.value
        return cost

    def _step_cost(self, rec: KillRecord) -> StepCost:
        g = self.game
        t = g.tree
        u = rec.node
        if not rec.was_leaf:
            r = g.rank_root()
            moves = tuple((u, int(c), Fraction(int(g.rank[c]), r))
                          for c in t.children(u))
            value = Fraction(int(g.rank[u]), r)
            return StepCost(killed=u, case=CASE_INTERNAL, value=value, moves=moves)
        r_before = rec.rank_root_after + 1
        den = r_before * (r_before - 1)
        moves = []
        value = Fraction(0)
        for w in sorted(g.alive):
            mass = Fraction(int(g.rank[w]), den)
            moves.append((u, w, mass))
            value += mass * dist(t, u, w)
        return StepCost(killed=u, case=CASE_LEAF, value=value, moves=tuple(moves))


@dataclass(frozen=True)
class VerifiedStep:
    step: int
    killed: int
    case: int
    cost: Fraction
    phi_before: Fraction
    phi_after: Fraction
    drop_ok: bool          # potential drop covers the cost
    leaf_cost_ok: bool     # leaf kills cost at most 2*height/R
    unit_rank_ok: bool     # every alive leaf carries rank 1


@dataclass(frozen=True)
class VerifiedGame:
    tree: Tree
    steps: tuple
    total_cost: Fraction
    phi_init: Fraction
    phi_final: Fraction
    cost_bound: Fraction   # 4 * height * H(leaf_count) + height

    @property
    def all_ok(self) -> bool:
        return all(s.drop_ok and s.leaf_cost_ok and s.unit_rank_ok
                   for s in self.steps)

    @property
    def bound_ok(self) -> bool:
        return self.total_cost <= self.cost_bound


def _alive_leaves_unit_rank(g: GameState) -> bool:
    t = g.tree
    return all(int(g.rank[u]) == 1
               for u in g.alive if t.is_leaf(u))


def play_verified(t: Tree,
                  kills: Sequence[int] | Callable[[GameState], int],
                  max_steps: int | None = None) -> VerifiedGame:
    """Run a full game with exact per-step verification.

    ``kills`` is either a complete kill schedule or a callable picking the
    next victim from the current state. Verification recomputes the potential
    from scratch around every kill; intended for small and medium trees.
    """
    g = new_game(t)
    shadow = FractionalHerc(g)
    records = []
    phi = potential(g)
    height = t.height

    def next_victim():
        if callable(kills):
            return kills(g)
        idx = len(g.steps)
        if idx >= len(kills):
            raise GameProtocolError("kill schedule exhausted before the game ended")
        return kills[idx]

    while not g.finished:
        if max_steps is not None and len(g.steps) >= max_steps:
            break
        u = int(next_victim())
        kill(g, u)
        cost = shadow.update(u)
        phi_after = potential(g)
        drop_ok = verify_step(phi, phi_after, cost)
        if cost.case == CASE_LEAF:
            r_before = g.steps[-1].rank_root_after + 1
            leaf_ok = cost.value <= Fraction(2 * height, r_before)
        else:
            leaf_ok = True
        records.append(VerifiedStep(
            step=len(g.steps), killed=u, case=cost.case, cost=cost.value,
            phi_before=phi.phi, phi_after=phi_after.phi, drop_ok=drop_ok,
            leaf_cost_ok=leaf_ok, unit_rank_ok=_alive_leaves_unit_rank(g)))
        phi = phi_after

    bound = 4 * height * harmonic(t.leaf_count) + height
    return VerifiedGame(tree=t, steps=tuple(records),
                        total_cost=shadow.total_cost,
                        phi_init=records[0].phi_before if records else potential(g).phi,
                        phi_final=phi.phi, cost_bound=bound)


def trace_records(v: VerifiedGame) -> list[dict]:
    """Per-step trace as JSON-ready dicts with exact numerators/denominators."""
    out = []
    for s in v.steps:
        out.append({
            "step": s.step,
            "killed": s.killed,
            "case": s.case,
            "cost_num": s.cost.numerator,
            "cost_den": s.cost.denominator,
            "phi_num": s.phi_after.numerator,
            "phi_den": s.phi_after.denominator,
        })
    return out


def behavioral_step(g: GameState, killed: int, position: int,
                    rng: np.random.Generator) -> tuple[int, int]:
    """One randomized move of a single-position realisation of the policy.

    Called immediately after ``kill(g, killed)``. If the position was not the
    victim nothing happens. Otherwise the position jumps to a child with
    probability proportional to its rank (internal kill), or to any alive
    node with probability rank/(R - 1) (leaf kill). Sampling uses one uniform
    integer under the cumulative ranks so the probabilities are exact.
    Returns ``(new_position, distance_paid)``.
    """
    if position != killed:
        return position, 0
    if not g.steps or g.steps[-1].node != killed:
        raise GameProtocolError("behavioral step must follow the kill it consumes")
    t = g.tree
    children = t.children(killed)
    if len(children):
        total = int(g.rank[killed])
        draw = int(rng.integers(total))
        acc = 0
        for c in children:
            acc += int(g.rank[c])
            if draw < acc:
                return int(c), 1
        raise AssertionError("child ranks do not sum to the parent rank")
    total = g.rank_root()  # R - 1 relative to the pre-kill leaf count
    draw = int(rng.integers(total))
    acc = 0
    for w in sorted(g.alive):
        acc += int(g.rank[w])
        if draw < acc:
            return w, dist(t, killed, w)
    raise AssertionError("alive ranks do not sum to the live leaf count")


class DfsPolicy:
    """Deterministic baseline: sit still until killed, then advance to the
    next alive node in preorder, wrapping around once if needed."""

    def __init__(self, t: Tree):
        self.tree = t
        self.order = preorder(t)
        index = np.empty(t.node_count, dtype=np.int64)
        index[self.order] = np.arange(t.node_count, dtype=np.int64)
        self.index_of = index
        self.position = t.root
        self.total_paid = 0

    def on_kill(self, g: GameState, killed: int) -> int:
        if killed != self.position:
            return 0
        n = self.tree.node_count
        start = int(self.index_of[killed])
        for off in range(1, n + 1):
            cand = int(self.order[(start + off) % n])
            if g.life[cand] == 1:
                paid = dist(self.tree, killed, cand)
                self.position = cand
                self.total_paid += paid
                return paid
        raise GameProtocolError("no alive node to move to")


def play_dfs(t: Tree, kills: Sequence[int] | Callable[[GameState], int]) -> int:
    """Total distance the DFS baseline pays over a full game."""
    g = new_game(t)
    policy = DfsPolicy(t)
    while not g.finished:
        if callable(kills):
            u = int(kills(g))
        else:
            u = int(kills[len(g.steps)])
        kill(g, u)
        policy.on_kill(g, u)
    return policy.total_paid
