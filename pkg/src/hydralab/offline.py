"""Brute-force offline optima over explicit configuration tables.

The reference solver is the quadratic dynamic program: one table entry per
configuration holding the cheapest cost of any schedule that served the
prefix and parked there, updated per request as

    dp'[c] = min over c' of dp[c'] + dist(c', c)   if c serves the request
    dp'[c] = infinity                              otherwise.

Everything here enumerates all configurations, so instances are capped at
``DP_CONFIG_CAP``; the independent cross-checks (full path enumeration, the
laziness restriction) carry much smaller guards of their own.
"""

from __future__ import annotations

import itertools

import numpy as np

from .gks import GksError, Instance, all_configs, serves

DP_CONFIG_CAP = 4096

_INF = np.int64(1) << 40


def config_index(inst: Instance, config) -> int:
    """Row-major index (last coordinate fastest), matching all_configs."""
    c = inst.validate_point(config, "config")
    idx = 0
    for v, s in zip(c, inst.sizes):
        idx = idx * s + v
    return idx


def index_config(inst: Instance, idx: int) -> tuple[int, ...]:
    if not 0 <= idx < inst.config_count:
        raise GksError(f"config index out of range: {idx}")
    out = []
    for s in reversed(inst.sizes):
        out.append(idx % s)
        idx //= s
    return tuple(reversed(out))


def config_table(inst: Instance) -> np.ndarray:
    """(P, k) int32 matrix of all configs in index order."""
    if inst.config_count > DP_CONFIG_CAP:
        raise GksError(f"{inst.config_count} configs exceed the offline "
                       f"solver cap {DP_CONFIG_CAP}")
    return np.asarray(all_configs(inst), dtype=np.int32).reshape(
        inst.config_count, inst.k)


def distance_matrix(inst: Instance) -> np.ndarray:
    """(P, P) pairwise coordinate-mismatch counts, int32."""
    table = config_table(inst)
    return (table[:, None, :] != table[None, :, :]).sum(axis=2,
                                                        dtype=np.int32)


def serving_mask(inst: Instance, table: np.ndarray, request) -> np.ndarray:
    r = np.asarray(inst.validate_point(request, "request"), dtype=np.int32)
    return (table == r).any(axis=1)


def offline_opt(inst: Instance, initial, requests) -> int:
    """Cheapest total movement serving every request in order."""
    table = config_table(inst)
    dist = distance_matrix(inst)
    dp = np.full(inst.config_count, _INF, dtype=np.int64)
    dp[config_index(inst, initial)] = 0
    for r in requests:
        mask = serving_mask(inst, table, r)
        dp = (dp[:, None] + dist).min(axis=0)
        dp[~mask] = _INF
        if not mask.any():  # unreachable for sizes >= 2, defensive
            raise GksError("request serviceable by no config")
    return int(dp.min())


def offline_opt_lazy(inst: Instance, initial, requests) -> int:
    """Optimum under the laziness restriction: move only when the current
    config fails the request, and then directly to a serving config."""
    table = config_table(inst)
    dist = distance_matrix(inst)
    dp = np.full(inst.config_count, _INF, dtype=np.int64)
    dp[config_index(inst, initial)] = 0
    for r in requests:
        mask = serving_mask(inst, table, r)
        stay = np.where(mask, dp, _INF)
        movers = np.where(mask, _INF, dp)
        moved = (movers[:, None] + dist).min(axis=0)
        moved[~mask] = _INF
        dp = np.minimum(stay, moved)
    return int(dp.min())


def offline_opt_bruteforce(inst: Instance, initial, requests) -> int:
    """Exhaustive minimum over all config paths; tiny inputs only."""
    requests = [inst.validate_point(r, "request") for r in requests]
    configs = all_configs(inst)
    if len(configs) ** max(len(requests), 1) > 1 << 22:
        raise GksError("path enumeration too large")
    initial = inst.validate_point(initial, "initial")
    best = _INF
    from .gks import config_distance

    for path in itertools.product(configs, repeat=len(requests)):
        if any(not serves(c, r) for c, r in zip(path, requests)):
            continue
        cost = 0
        prev = initial
        for c in path:
            cost += config_distance(prev, c)
            prev = c
        best = min(best, cost)
    return int(best)


def per_start_phase_costs(inst: Instance, requests) -> np.ndarray:
    """Offline cost of the request block from every possible start config.

    Entry s is the cheapest movement a schedule starting at config index s
    needs to serve the whole block. After a finished phase every entry is
    at least 1: no single config served everything.
    """
    if inst.config_count > 256:
        raise GksError("per-start solver holds a cubic temporary; "
                       "capped at 256 configs")
    table = config_table(inst)
    dist = distance_matrix(inst)
    p = inst.config_count
    dp = np.zeros((p, p), dtype=np.int64)  # dp[start, here]
    id_diag = np.arange(p)
    dp[:] = _INF
    dp[id_diag, id_diag] = 0
    for r in requests:
        mask = serving_mask(inst, table, r)
        dp = (dp[:, :, None] + dist[None, :, :]).min(axis=1)
        dp[:, ~mask] = _INF
    return dp.min(axis=1)
