"""Online algorithm for the uniform k-server variant via the tree game.

Each phase binds the alive patterns of a PhaseState to nodes of the order-k
factorial tree: pattern dimension equals node level, and the j-th split
child (ascending free coordinate) binds to the j-th tree child (ascending
id). Requests kill patterns; each kill is mirrored as a game kill. The kill
that would eliminate the game's final survivor is never played: it marks the
phase end, the algorithm pays one forced move of server 0 and both sides
reset.

Server motion follows the game policy through a carrier:

* behavioral: one tracked tree position jumps per the policy's exact rank
  probabilities; the config rewrites only the coordinates its new pattern
  fixes differently, so per event the servers move at most as far as the
  position did in the tree.
* exact: the full fractional transport. Mass atoms (node, config) follow the
  policy's recorded moves; each atom's config maps onto the destination
  pattern. Expected server movement per event is at most the policy's
  charged cost because the pattern map never exceeds the tree distance.
* dfs: the deterministic preorder baseline instead of the sampler.

A config matched to an alive pattern always serves the next request: a
surviving pattern has a fixed coordinate equal to the request's, and a fresh
split child pins one. Only the phase-end request finds every pattern dead,
and there the single forced move restores service. Hence per finished phase

    server cost <= carrier's game cost + 1,

an inequality every serve() maintains by construction and the ledger
records.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .fastgame import cost_bound_fraction
from .gks import Instance, PhaseState, WILDCARD, serves
from .herc import DfsPolicy, FractionalHerc, behavioral_step
from .hydra import GameState, kill, new_game
from .trees import Tree, build_factorial_tree


def map_to_pattern(config, pattern) -> tuple[tuple[int, ...], int]:
    """Rewrite only the coordinates the pattern fixes differently.

    Returns the mapped config and the number of coordinates changed. The
    result always matches the pattern; the change count never exceeds the
    tree distance between the patterns' nodes because each tree edge pins or
    frees a single coordinate.
    """
    out = []
    changed = 0
    for c, p in zip(config, pattern):
        c = int(c)
        p = int(p)
        if p == WILDCARD or p == c:
            out.append(c)
        else:
            out.append(p)
            changed += 1
    return tuple(out), changed


class GreedyStay:
    """Baseline: stay while served, else move server 0 onto the request."""

    def __init__(self, instance: Instance, initial):
        self.instance = instance
        self.config = instance.validate_point(initial, "initial")
        self.total_cost = 0

    def serve(self, request) -> int:
        r = self.instance.validate_point(request, "request")
        if serves(self.config, r):
            return 0
        self.config = (r[0],) + self.config[1:]
        self.total_cost += 1
        return 1


@dataclass(frozen=True)
class PhaseLedger:
    """Bookkeeping of one finished phase."""

    index: int
    requests: int
    kill_events: int
    game_cost: Fraction      # carrier's game-side cost, end move excluded
    server_cost: Fraction    # actual (or expected) server movement
    bound_ok: bool           # server_cost <= game_cost + 1
    game_bound_ok: bool      # game_cost <= 4k H(k!) + k, exact carrier only

    def as_record(self) -> dict:
        return {
            "phase": self.index,
            "requests": self.requests,
            "kill_events": self.kill_events,
            "game_cost_num": self.game_cost.numerator,
            "game_cost_den": self.game_cost.denominator,
            "server_cost_num": self.server_cost.numerator,
            "server_cost_den": self.server_cost.denominator,
            "bound_ok": self.bound_ok,
            "game_bound_ok": self.game_bound_ok,
        }


class Reduction:
    """Phase-resetting online algorithm; modes behavioral, exact, dfs."""

    def __init__(self, instance: Instance, initial, mode: str = "behavioral",
                 seed: int = 0):
        if mode not in ("behavioral", "exact", "dfs"):
            raise ValueError(f"unknown carrier mode {mode!r}")
        self.instance = instance
        self.mode = mode
        self.seed = seed
        self.tree: Tree = build_factorial_tree(instance.k)
        self._rng = np.random.default_rng((seed, 1))
        self._initial = instance.validate_point(initial, "initial")
        self.config: tuple[int, ...] | None = None
        if mode != "exact":
            self.config = self._initial
        self.total_server_cost: Fraction = Fraction(0)
        self.phases: list[PhaseLedger] = []
        self._phase_index = 0
        self._start_phase()

    # -- phase lifecycle ----------------------------------------------------

    def _start_phase(self):
        self.ps = PhaseState(self.instance)
        self.game: GameState = new_game(self.tree)
        self._node_of = {0: self.tree.root}
        self._pattern_of_node = {self.tree.root: self.ps.pattern(0)}
        self._phase_game_cost = Fraction(0)
        self._phase_server_cost = Fraction(0)
        if self.mode == "behavioral":
            self._position = self.tree.root
        elif self.mode == "dfs":
            self._dfs = DfsPolicy(self.tree)
        else:
            # phase resets overwrite this with the carried-over atoms
            self._policy = FractionalHerc(self.game)
            self._mass: dict[tuple[int, tuple[int, ...]], Fraction] = {
                (self.tree.root, self._initial): Fraction(1)}

    def _bind_children(self, rec):
        u = self._node_of[rec.handle]
        node_children = self.game.tree.children(u)
        if len(rec.children) != len(node_children):
            raise AssertionError("pattern/tree arity mismatch")
        for ch_handle, ch_node in zip(rec.children, node_children):
            self._node_of[ch_handle] = int(ch_node)
            self._pattern_of_node[int(ch_node)] = self.ps.pattern(ch_handle)

    # -- carriers -----------------------------------------------------------

    def _serve_kill_behavioral(self, u: int) -> Fraction:
        kill(self.game, u)
        new_pos, paid = behavioral_step(self.game, u, self._position,
                                        self._rng)
        self._phase_game_cost += paid
        moved = 0
        if paid or new_pos != self._position:
            target = self._pattern_of_node[new_pos]
            self.config, moved = map_to_pattern(self.config, target)
            if moved > paid:
                raise AssertionError("pattern map exceeded the tree distance")
        self._position = new_pos
        return Fraction(moved)

    def _serve_kill_dfs(self, u: int) -> Fraction:
        kill(self.game, u)
        before = self._dfs.position
        paid = self._dfs.on_kill(self.game, u)
        self._phase_game_cost += paid
        moved = 0
        if self._dfs.position != before:
            target = self._pattern_of_node[self._dfs.position]
            self.config, moved = map_to_pattern(self.config, target)
            if moved > paid:
                raise AssertionError("pattern map exceeded the tree distance")
        return Fraction(moved)

    def _serve_kill_exact(self, u: int) -> Fraction:
        kill(self.game, u)
        step = self._policy.update(u)
        self._phase_game_cost += step.value
        atoms = [(cfg, m) for (node, cfg), m in self._mass.items()
                 if node == u]
        for cfg, _ in atoms:
            del self._mass[(u, cfg)]
        total_out = sum(m for _, _, m in step.moves)
        total_atoms = sum(m for _, m in atoms)
        if total_out != total_atoms:
            raise AssertionError("carrier mass desynced from the policy")
        cost = Fraction(0)
        if total_out == 0:
            return cost
        for _, dst, m_node in step.moves:
            share = m_node / total_out
            target = self._pattern_of_node[dst]
            for cfg, m_cfg in atoms:
                mapped, changed = map_to_pattern(cfg, target)
                gain = m_cfg * share
                cost += gain * changed
                key = (dst, mapped)
                self._mass[key] = self._mass.get(key, Fraction(0)) + gain
        return cost

    # -- the algorithm ------------------------------------------------------

    def serve(self, request) -> Fraction:
        """Consume one request; returns the server movement it caused."""
        r = self.instance.validate_point(request, "request")
        ev = self.ps.serve(r)
        cost = Fraction(0)
        skipped = 0
        for rec in ev.killed:
            self._bind_children(rec)
            if self.game.finished:
                skipped += 1
                if rec.children:
                    raise AssertionError("skipped kill must be a point")
                continue
            if self.mode == "behavioral":
                cost += self._serve_kill_behavioral(self._node_of[rec.handle])
            elif self.mode == "dfs":
                cost += self._serve_kill_dfs(self._node_of[rec.handle])
            else:
                cost += self._serve_kill_exact(self._node_of[rec.handle])
        if ev.ended:
            if skipped != 1:
                raise AssertionError("phase end must skip exactly one kill")
            cost += self._end_phase(r)
        else:
            if skipped:
                raise AssertionError("kills skipped before the phase ended")
            self._assert_served(r)
        self._phase_server_cost += cost
        if self.mode == "exact" and sum(self._mass.values()) != 1:
            raise AssertionError("carrier mass must stay exactly 1")
        if ev.ended:
            self._seal_phase()
        self.total_server_cost += cost
        return cost

    def _assert_served(self, r):
        if self.mode == "exact":
            return  # every atom sits in an alive pattern, all of which serve
        if not serves(self.config, r):
            raise AssertionError("config failed to serve a mid-phase request")

    def _end_phase(self, r) -> Fraction:
        """Forced move of server 0 onto the request's first coordinate."""
        if self.mode == "exact":
            moved = Fraction(0)
            new_mass: dict[tuple[int, tuple[int, ...]], Fraction] = {}
            for (node, cfg), m in self._mass.items():
                if serves(cfg, r):
                    raise AssertionError("phase-end config unexpectedly serves")
                cfg2 = (r[0],) + cfg[1:]
                moved += m
                new_mass[(node, cfg2)] = new_mass.get((node, cfg2),
                                                      Fraction(0)) + m
            if moved != 1:
                raise AssertionError("carrier mass must be 1 at phase end")
            self._carry = {cfg: m for (_, cfg), m in new_mass.items()}
            return moved
        if serves(self.config, r):
            raise AssertionError("phase-end config unexpectedly serves")
        self.config = (r[0],) + self.config[1:]
        return Fraction(1)

    def _seal_phase(self):
        bound = cost_bound_fraction(self.tree.height, self.tree.leaf_count)
        ledger = PhaseLedger(
            index=self._phase_index,
            requests=self.ps.requests_seen,
            kill_events=self.ps.kill_events,
            game_cost=Fraction(self._phase_game_cost),
            server_cost=self._phase_server_cost,
            bound_ok=self._phase_server_cost <= self._phase_game_cost + 1,
            game_bound_ok=Fraction(self._phase_game_cost) <= bound,
        )
        self.phases.append(ledger)
        self._phase_index += 1
        carry = getattr(self, "_carry", None)
        self._start_phase()
        if self.mode == "exact" and carry is not None:
            self._mass = {(self.tree.root, cfg): m for cfg, m in carry.items()}
            self._carry = None

    # -- whole-run reporting --------------------------------------------------

    def open_phase_costs(self) -> tuple[Fraction, Fraction]:
        """(game_cost, server_cost) of the phase still in progress."""
        return Fraction(self._phase_game_cost), self._phase_server_cost

    def config_distribution(self) -> dict[tuple[int, ...], Fraction]:
        """Exact config marginal of the carrier mass (exact mode only)."""
        if self.mode != "exact":
            raise ValueError("only the exact carrier holds a distribution")
        out: dict[tuple[int, ...], Fraction] = {}
        for (_, cfg), m in self._mass.items():
            out[cfg] = out.get(cfg, Fraction(0)) + m
        return out


@dataclass(frozen=True)
class ReductionReport:
    mode: str
    seed: int
    request_count: int
    total_server_cost: Fraction
    finished_phases: int
    phases: tuple[PhaseLedger, ...]
    all_phase_bounds_ok: bool
    all_game_bounds_ok: bool


def run_reduction(instance: Instance, initial, requests,
                  mode: str = "behavioral", seed: int = 0) -> ReductionReport:
    red = Reduction(instance, initial, mode=mode, seed=seed)
    n = 0
    for r in requests:
        red.serve(r)
        n += 1
    return ReductionReport(
        mode=mode, seed=seed, request_count=n,
        total_server_cost=red.total_server_cost,
        finished_phases=len(red.phases),
        phases=tuple(red.phases),
        all_phase_bounds_ok=all(p.bound_ok for p in red.phases),
        all_game_bounds_ok=all(p.game_bound_ok for p in red.phases),
    )


def competitive_envelope(instance: Instance, opt_cost: int) -> Fraction:
    """(B + 1) * (OPT + 1) with B = 4k H(k!) + k, the whole-run ceiling."""
    t = build_factorial_tree(instance.k)
    return (cost_bound_fraction(t.height, t.leaf_count) + 1) * (opt_cost + 1)
