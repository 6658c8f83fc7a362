"""Mutable state of one tree game.

Life cycle of a node: asleep -> alive (its parent was killed) -> dead (it was
killed itself). The root starts alive, everyone else asleep. Only alive nodes
may be killed; killing an internal node awakens its children, killing a leaf
permanently removes one unit of rank along the root path. The game is over
when a single non-dead node remains, which the life invariant forces to be an
alive leaf; that final survivor can never be killed.

``rank(u)`` is the number of non-dead leaves in the subtree of ``u``. It is
maintained incrementally (initialised from ``subtree_leaves``, decremented on
the root path of every leaf kill) and can be recomputed from scratch with
:func:`recompute_ranks` for cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .trees import Tree


class LifeState(IntEnum):
    ASLEEP = 0
    ALIVE = 1
    DEAD = 2


class GameProtocolError(RuntimeError):
    """A kill or policy update violated the game protocol."""


@dataclass(frozen=True)
class KillRecord:
    step: int           # 1-based position in the kill sequence
    node: int
    was_leaf: bool
    rank_root_after: int


@dataclass(frozen=True)
class KillOutcome:
    children_awakened: tuple
    rank_deltas: dict   # node -> delta applied (leaf kills only)


class GameState:
    __slots__ = ("tree", "life", "rank", "alive", "non_dead", "steps")

    def __init__(self, tree: Tree):
        self.tree = tree
        self.life = np.zeros(tree.node_count, dtype=np.int8)
        self.life[tree.root] = LifeState.ALIVE
        self.rank = tree.subtree_leaves.copy()
        self.alive = {tree.root}
        self.non_dead = tree.node_count
        self.steps: list[KillRecord] = []

    @property
    def finished(self) -> bool:
        return self.non_dead == 1

    def rank_root(self) -> int:
        return int(self.rank[self.tree.root])


def new_game(tree: Tree) -> GameState:
    return GameState(tree)


def kill(g: GameState, u: int) -> KillOutcome:
    """Kill alive node ``u``; awaken its children if it has any."""
    if g.finished:
        raise GameProtocolError("the game is finished; no further kill is legal")
    u = int(u)
    if u < 0 or u >= g.tree.node_count or g.life[u] != LifeState.ALIVE:
        raise GameProtocolError(f"node {u} is not alive and cannot be killed")

    t = g.tree
    g.life[u] = LifeState.DEAD
    g.alive.discard(u)
    g.non_dead -= 1

    children = t.children(u)
    awakened = tuple(int(c) for c in children)
    for c in awakened:
        g.life[c] = LifeState.ALIVE
        g.alive.add(c)

    was_leaf = len(awakened) == 0
    deltas: dict[int, int] = {}
    if was_leaf:
        node = u
        while node != -1:
            g.rank[node] -= 1
            deltas[node] = -1
            node = int(t.parent[node])

    g.steps.append(KillRecord(step=len(g.steps) + 1, node=u, was_leaf=was_leaf,
                              rank_root_after=g.rank_root()))
    return KillOutcome(children_awakened=awakened, rank_deltas=deltas)


def alive_nodes(g: GameState) -> list[int]:
    return sorted(g.alive)


def rank_of(g: GameState, u: int) -> int:
    return int(g.rank[u])


def recompute_ranks(g: GameState) -> np.ndarray:
    """Rank of every node recomputed from life states alone (bottom-up)."""
    t = g.tree
    fresh = np.zeros(t.node_count, dtype=np.int64)
    offs = t.child_offsets
    is_leaf = offs[1:] == offs[:-1]
    fresh[is_leaf & (np.asarray(g.life) != LifeState.DEAD)] = 1
    order = t.bfs_order
    for i in range(t.node_count - 1, 0, -1):
        u = order[i]
        fresh[t.parent[u]] += fresh[u]
    return fresh


def assert_life_invariant(g: GameState) -> None:
    """Walk every node and check the global life invariant.

    Alive nodes form an antichain whose ancestors are all dead; descendants of
    non-dead nodes are asleep; at most one life state transition direction.
    Intended for tests (O(n * height)).
    """
    t = g.tree
    life = g.life
    for u in g.alive:
        p = int(t.parent[u])
        while p != -1:
            if life[p] != LifeState.DEAD:
                raise AssertionError(
                    f"alive node {u} has non-dead ancestor {p}")
            p = int(t.parent[p])
        for c in t.children(u):
            _assert_subtree_asleep(g, int(c))
    if not g.finished and not g.alive:
        raise AssertionError("unfinished game with no alive node")


def _assert_subtree_asleep(g: GameState, u: int) -> None:
    stack = [u]
    while stack:
        v = stack.pop()
        if g.life[v] != LifeState.ASLEEP:
            raise AssertionError(f"descendant {v} of an alive node is not asleep")
        stack.extend(int(c) for c in g.tree.children(v))


def event_log_records(g: GameState) -> list[dict]:
    """Event log as JSON-ready dicts, one per kill."""
    return [{"step": r.step, "node": r.node, "was_leaf": r.was_leaf,
             "rank_root_after": r.rank_root_after} for r in g.steps]
