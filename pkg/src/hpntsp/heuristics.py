"""Construction and local-search baselines."""
from __future__ import annotations

import numpy as np

from .tsp import Instance, Tour, check_permutation, make_rng

IMPROVEMENT_EPS = 1e-12


def nearest_neighbor(inst: Instance, start: int = 0) -> Tour:
    n = inst.n
    if not 0 <= start < n:
        raise ValueError(f"start {start} out of range for n={n}")
    d = inst.distance_matrix()
    visited = np.zeros(n, dtype=bool)
    order = [start]
    visited[start] = True
    cur = start
    for _ in range(n - 1):
        row = np.where(visited, np.inf, d[cur])
        cur = int(np.argmin(row))  # first minimum = lowest index
        visited[cur] = True
        order.append(cur)
    return Tour.of(inst, order)


def farthest_insertion(inst: Instance) -> Tour:
    n = inst.n
    if n <= 2:
        return Tour.of(inst, range(n))
    d = inst.distance_matrix()
    i, j = np.unravel_index(int(np.argmax(d)), d.shape)
    order = [int(min(i, j)), int(max(i, j))]
    in_tour = np.zeros(n, dtype=bool)
    in_tour[order] = True
    gap = np.minimum(d[order[0]], d[order[1]])
    for _ in range(n - 2):
        k = int(np.argmax(np.where(in_tour, -np.inf, gap)))
        tour = np.asarray(order)
        nxt = np.roll(tour, -1)
        cost = d[tour, k] + d[k, nxt] - d[tour, nxt]
        pos = int(np.argmin(cost))
        order.insert(pos + 1, k)
        in_tour[k] = True
        gap = np.minimum(gap, d[k])
    return Tour.of(inst, order)


def two_opt_deltas(d: np.ndarray, tour: np.ndarray) -> np.ndarray:
    """delta[i, j] = change in length from reversing tour[i+1 : j+1], for i < j."""
    nxt = np.roll(tour, -1)
    d_cur = d[tour, nxt]
    delta = d[tour[:, None], tour[None, :]] + d[nxt[:, None], nxt[None, :]]
    delta -= d_cur[:, None] + d_cur[None, :]
    delta[np.tril_indices(len(tour))] = np.inf
    return delta


def two_opt(inst: Instance, start_tour: Tour | list[int] | np.ndarray,
            max_no_improve_sweeps: int = 1) -> Tour:
    """Best-improvement 2-opt.

    Each sweep scans every pair (i, j) in lexicographic order and applies the
    single best strictly improving exchange. The search stops once
    ``max_no_improve_sweeps`` consecutive sweeps find nothing.
    """
    if max_no_improve_sweeps < 1:
        raise ValueError("max_no_improve_sweeps must be >= 1")
    order = start_tour.order if isinstance(start_tour, Tour) else start_tour
    tour = check_permutation(order, inst.n).copy()
    n = inst.n
    if n < 4:
        return Tour.of(inst, tour)
    d = inst.distance_matrix()
    idle = 0
    while idle < max_no_improve_sweeps:
        delta = two_opt_deltas(d, tour)
        flat = int(np.argmin(delta))
        if delta.flat[flat] < -IMPROVEMENT_EPS:
            i, j = divmod(flat, n)
            tour[i + 1:j + 1] = tour[i + 1:j + 1][::-1].copy()
            idle = 0
        else:
            idle += 1
    return Tour.of(inst, tour)


def random_tour(inst: Instance, seed: int) -> Tour:
    return Tour.of(inst, make_rng(seed).permutation(inst.n))
