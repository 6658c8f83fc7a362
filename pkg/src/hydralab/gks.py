"""Configurations, request service and wildcard-pattern phases.

The metric: k servers, server i living on its own uniform space of
``sizes[i] >= 2`` points; moving server i costs 1 per relocation, so the
distance between configurations is the number of differing coordinates. A
configuration serves a request iff they agree somewhere.

A pattern fixes some coordinates and leaves the rest free (``WILDCARD``).
The configs matching a pattern form a subspace; its dimension is the number
of free coordinates. A request kills a pattern iff no fixed coordinate
matches the request, which for ``sizes >= 2`` is exactly the condition that
the subspace contains a config failing to serve (pick any non-request value
at every free coordinate). A killed pattern of dimension d splits into d
children, the j-th (by ascending free-coordinate index) pinning that
coordinate to the request's value there; their union is precisely the killed
subspace's set of configs that do serve the request.

PhaseState runs the resulting automaton: start from the all-free pattern,
kill and split per request, phase over when nothing is left alive. The union
of alive subspaces always equals the set of configs that served every
request so far, which `phase_survivors` recomputes from scratch as the
test oracle.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

WILDCARD = -1

ENUMERATION_CAP = 1 << 20


class GksError(ValueError):
    pass


@dataclass(frozen=True)
class Instance:
    """Coordinate space sizes; server i moves on {0, ..., sizes[i]-1}."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        if len(self.sizes) == 0:
            raise GksError("need at least one coordinate")
        for s in self.sizes:
            if not isinstance(s, int) or isinstance(s, bool) or s < 2:
                raise GksError(f"coordinate sizes must be ints >= 2, got {s}")

    @property
    def k(self) -> int:
        return len(self.sizes)

    @property
    def config_count(self) -> int:
        n = 1
        for s in self.sizes:
            n *= s
        return n

    def validate_point(self, c, name: str = "point") -> tuple[int, ...]:
        c = tuple(int(v) for v in c)
        if len(c) != self.k:
            raise GksError(f"{name} must have {self.k} coordinates, got {len(c)}")
        for i, v in enumerate(c):
            if not 0 <= v < self.sizes[i]:
                raise GksError(f"{name} coordinate {i} out of range: {v}")
        return c


def uniform_binary(k: int) -> Instance:
    return Instance((2,) * k)


def serves(config, request) -> bool:
    """A config serves a request iff they share some coordinate value."""
    return any(int(c) == int(r) for c, r in zip(config, request))


def config_distance(a, b) -> int:
    """Per-coordinate uniform metric: count of differing coordinates."""
    return sum(1 for x, y in zip(a, b) if int(x) != int(y))


def all_configs(inst: Instance) -> list[tuple[int, ...]]:
    if inst.config_count > ENUMERATION_CAP:
        raise GksError(f"refusing to enumerate {inst.config_count} configs "
                       f"(cap {ENUMERATION_CAP})")
    return list(itertools.product(*(range(s) for s in inst.sizes)))


def compatible_configs(inst: Instance, request) -> list[tuple[int, ...]]:
    """All configs serving the request (the request's compatibility set)."""
    r = inst.validate_point(request, "request")
    return [c for c in all_configs(inst) if serves(c, r)]


def compatible_count(inst: Instance, request=None) -> int:
    """|comp(r)| = prod(sizes) - prod(sizes - 1), independent of r."""
    full = 1
    dodge = 1
    for s in inst.sizes:
        full *= s
        dodge *= s - 1
    return full - dodge


# ---------------------------------------------------------------------------
# patterns


def pattern_dim(pattern) -> int:
    return sum(1 for v in pattern if int(v) == WILDCARD)


def pattern_members(inst: Instance, pattern) -> list[tuple[int, ...]]:
    """All configs matching the pattern's fixed coordinates."""
    axes = []
    for i, v in enumerate(pattern):
        v = int(v)
        if v == WILDCARD:
            axes.append(range(inst.sizes[i]))
        else:
            if not 0 <= v < inst.sizes[i]:
                raise GksError(f"pattern coordinate {i} out of range: {v}")
            axes.append((v,))
    count = 1
    for a in axes:
        count *= len(a)
    if count > ENUMERATION_CAP:
        raise GksError("pattern too large to enumerate")
    return list(itertools.product(*axes))


def request_kills(pattern, request) -> bool:
    """True iff no fixed coordinate of the pattern matches the request."""
    return not any(int(p) == int(r) for p, r in zip(pattern, request))


def split_pattern(pattern, request) -> list[tuple[int, ...]]:
    """Children of a killed pattern, ascending free-coordinate order."""
    pattern = tuple(int(v) for v in pattern)
    request = tuple(int(v) for v in request)
    if not request_kills(pattern, request):
        raise GksError("pattern survives this request, nothing to split")
    out = []
    for i, v in enumerate(pattern):
        if v == WILDCARD:
            child = list(pattern)
            child[i] = request[i]
            out.append(tuple(child))
    return out


@dataclass(frozen=True)
class KillRecord:
    """One pattern killed by a request, with its split children's handles."""

    handle: int
    pattern: tuple[int, ...]
    children: tuple[int, ...]


@dataclass(frozen=True)
class PhaseEvent:
    request: tuple[int, ...]
    killed: tuple[KillRecord, ...]
    ended: bool


class PhaseState:
    """Alive pattern set of one phase, handles in creation order.

    Handle 0 is the all-free root pattern. serve() kills every alive pattern
    with no fixed coordinate matching the request (vectorized: wildcards are
    -1 and never equal a request value), splits the killed ones in ascending
    handle order, and reports the event. Children born from a request always
    survive it (their pinned coordinate matches), so the kill set is
    determined before any split.
    """

    __slots__ = ("instance", "_patterns", "_alive", "_count", "requests_seen",
                 "kill_events")

    def __init__(self, instance: Instance):
        self.instance = instance
        cap = max(4, 2 * instance.k)
        self._patterns = np.empty((cap, instance.k), dtype=np.int32)
        self._alive = np.zeros(cap, dtype=bool)
        self._patterns[0] = WILDCARD
        self._alive[0] = True
        self._count = 1
        self.requests_seen = 0
        self.kill_events = 0

    @property
    def space_count(self) -> int:
        return self._count

    @property
    def finished(self) -> bool:
        return not self._alive[:self._count].any()

    def alive_handles(self) -> list[int]:
        return [int(h) for h in np.flatnonzero(self._alive[:self._count])]

    def pattern(self, handle: int) -> tuple[int, ...]:
        if not 0 <= handle < self._count:
            raise GksError(f"no such pattern handle: {handle}")
        return tuple(int(v) for v in self._patterns[handle])

    def is_alive(self, handle: int) -> bool:
        if not 0 <= handle < self._count:
            raise GksError(f"no such pattern handle: {handle}")
        return bool(self._alive[handle])

    def _grow(self, need: int):
        cap = self._patterns.shape[0]
        if self._count + need <= cap:
            return
        new_cap = max(2 * cap, self._count + need)
        patterns = np.empty((new_cap, self.instance.k), dtype=np.int32)
        patterns[:self._count] = self._patterns[:self._count]
        alive = np.zeros(new_cap, dtype=bool)
        alive[:self._count] = self._alive[:self._count]
        self._patterns = patterns
        self._alive = alive

    def serve(self, request) -> PhaseEvent:
        if self.finished:
            raise GksError("phase already ended; reset before serving more")
        r = self.instance.validate_point(request, "request")
        self.requests_seen += 1
        rvec = np.asarray(r, dtype=np.int32)
        live = self._patterns[:self._count]
        killed_handles = np.flatnonzero(
            self._alive[:self._count] & ~(live == rvec).any(axis=1))
        records = []
        for h in killed_handles:
            h = int(h)
            self._alive[h] = False
            pat = self._patterns[h]
            free = np.flatnonzero(pat == WILDCARD)
            self._grow(free.shape[0])
            child_handles = []
            for i in free:
                c = self._count
                self._patterns[c] = pat
                self._patterns[c, i] = rvec[i]
                self._alive[c] = True
                self._count = c + 1
                child_handles.append(c)
            records.append(KillRecord(handle=h,
                                      pattern=tuple(int(v) for v in pat),
                                      children=tuple(child_handles)))
        if records:
            self.kill_events += 1
        return PhaseEvent(request=r, killed=tuple(records),
                          ended=self.finished)

    def alive_member_union(self) -> set[tuple[int, ...]]:
        """Union of all alive subspaces; test-size instances only."""
        out: set[tuple[int, ...]] = set()
        for h in self.alive_handles():
            out.update(pattern_members(self.instance, self.pattern(h)))
        return out


def phase_survivors(inst: Instance, requests) -> set[tuple[int, ...]]:
    """Configs serving every request; the from-scratch phase oracle."""
    alive = all_configs(inst)
    for r in requests:
        r = inst.validate_point(r, "request")
        alive = [c for c in alive if serves(c, r)]
    return set(alive)


# ---------------------------------------------------------------------------
# traces


def random_requests(inst: Instance, length: int, rng) -> np.ndarray:
    """Uniform i.i.d. requests, one row each, int32."""
    cols = [rng.integers(0, s, size=length, dtype=np.int32)
            for s in inst.sizes]
    return np.stack(cols, axis=1) if cols else np.empty((length, 0), np.int32)


def save_trace(path, inst: Instance, initial, requests) -> None:
    """JSON-lines: header {k, sizes, initial}, then one request per line."""
    initial = inst.validate_point(initial, "initial")
    with open(path, "w", encoding="ascii") as f:
        f.write(json.dumps({"k": inst.k, "sizes": list(inst.sizes),
                            "initial": list(initial)}) + "\n")
        for row in requests:
            r = inst.validate_point(row, "request")
            f.write(json.dumps(list(r)) + "\n")


def load_trace(path) -> tuple[Instance, tuple[int, ...], np.ndarray]:
    with open(path, "r", encoding="ascii") as f:
        header_line = f.readline()
        if not header_line:
            raise GksError("empty trace file")
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise GksError(f"bad trace header: {exc}") from exc
        if (not isinstance(header, dict)
                or not isinstance(header.get("sizes"), list)
                or not isinstance(header.get("initial"), list)):
            raise GksError("trace header needs sizes and initial lists")
        sizes = tuple(int(s) for s in header["sizes"])
        inst = Instance(sizes)
        if header.get("k") not in (None, inst.k):
            raise GksError("trace header k disagrees with sizes")
        initial = inst.validate_point(header["initial"], "initial")
        rows = []
        for line_no, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise GksError(f"bad request on line {line_no}: {exc}") from exc
            rows.append(inst.validate_point(row, f"request line {line_no}"))
    requests = np.asarray(rows, dtype=np.int32).reshape(len(rows), inst.k)
    return inst, initial, requests
