"""Instances, tours and tour lengths for the symmetric Euclidean TSP."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Instance:
    coords: np.ndarray  # (n, 2)

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.float64)
        if c.ndim != 2 or c.shape[1] != 2 or c.shape[0] < 1:
            raise ValueError(f"coords must have shape (n>=1, 2), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coords must be finite")
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return len(self.coords)

    def distance_matrix(self) -> np.ndarray:
        return distance_matrix(self.coords)


@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]
    length: float

    @classmethod
    def of(cls, inst: Instance, order) -> Tour:
        order = tuple(int(i) for i in order)
        return cls(order, tour_length(inst, order))


def euclidean(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def distance_matrix(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt((diff ** 2).sum(-1))


def check_permutation(order, n: int) -> np.ndarray:
    arr = np.asarray(order)
    if arr.shape != (n,) or not np.array_equal(np.sort(arr), np.arange(n)):
        raise ValueError(f"not a permutation of 0..{n - 1}: {list(order)[:20]}")
    return arr.astype(np.int64)


def tour_length(inst: Instance, order) -> float:
    """Closed tour length, including the edge back to the first city."""
    arr = check_permutation(order, inst.n)
    pts = inst.coords[arr]
    diff = pts - np.roll(pts, -1, axis=0)
    return float(np.sqrt((diff ** 2).sum(-1)).sum())


def tour_lengths(coords: np.ndarray, tours: np.ndarray) -> np.ndarray:
    """Vectorized lengths for a batch: coords (B, n, 2), tours (B, n)."""
    pts = np.take_along_axis(coords, tours[..., None], axis=1)
    diff = pts - np.roll(pts, -1, axis=1)
    return np.sqrt((diff ** 2).sum(-1)).sum(-1)


def make_rng(seed) -> np.random.Generator:
    """Repo-wide generator: numpy PCG64."""
    return np.random.Generator(np.random.PCG64(seed))


def generate_uniform(n: int, count: int, seed: int) -> list[Instance]:
    if n < 1 or count < 0:
        raise ValueError("need n >= 1 and count >= 0")
    coords = make_rng(seed).random((count, n, 2))
    return [Instance(c) for c in coords]


def brute_force_optimal(inst: Instance) -> Tour:
    n = inst.n
    if n > 10:
        raise ValueError(f"brute force limited to n <= 10, got {n}")
    if n <= 3:
        return Tour.of(inst, range(n))
    d = inst.distance_matrix()
    best, best_order = math.inf, None
    for perm in itertools.permutations(range(1, n)):
        if perm[0] > perm[-1]:  # each direction once
            continue
        length = d[0, perm[0]] + d[perm[-1], 0]
        for a, b in zip(perm, perm[1:]):
            length += d[a, b]
        if length < best:
            best, best_order = length, (0,) + perm
    return Tour.of(inst, best_order)


def write_batch(path, instances: list[Instance], n: int | None = None) -> None:
    """Instance batch file: header ``n count`` then ``count`` blocks of n ``x y`` lines."""
    if instances:
        n = instances[0].n
        if any(inst.n != n for inst in instances):
            raise ValueError("all instances in a batch must share n")
    elif n is None:
        raise ValueError("n is required for an empty batch")
    lines = [f"{n} {len(instances)}"]
    for inst in instances:
        lines.extend(f"{x!r} {y!r}" for x, y in inst.coords.tolist())
    Path(path).write_text("\n".join(lines) + "\n")


def read_batch(path) -> tuple[int, list[Instance]]:
    tokens = Path(path).read_text().split()
    if len(tokens) < 2:
        raise ValueError(f"{path}: missing 'n count' header")
    n, count = int(tokens[0]), int(tokens[1])
    values = np.array(tokens[2:], dtype=np.float64)
    if values.size != n * count * 2:
        raise ValueError(f"{path}: expected {n * count * 2} numbers, found {values.size}")
    return n, [Instance(c) for c in values.reshape(count, n, 2)]
