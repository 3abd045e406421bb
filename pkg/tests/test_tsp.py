import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hpntsp.tsp import (Instance, brute_force_optimal, euclidean, generate_uniform, read_batch,
                        tour_length, tour_lengths, write_batch)

SQUARE = Instance(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float))


def resum(coords, order):
    """Independent per-edge oracle."""
    total = 0.0
    for k in range(len(order)):
        a, b = coords[order[k]], coords[order[(k + 1) % len(order)]]
        total += math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2)
    return total


@pytest.mark.parametrize("a,b,expected", [((0, 0), (0, 0), 0.0), ((0, 0), (3, 4), 5.0),
                                          ((0, 0), (1, 1), math.sqrt(2))])
def test_euclidean(a, b, expected):
    assert euclidean(a, b) == pytest.approx(expected, abs=1e-12)
    assert euclidean(a, b) == euclidean(b, a)


def test_square_perimeter():
    assert tour_length(SQUARE, [0, 1, 2, 3]) == 4.0


def test_two_cities_out_and_back():
    inst = Instance(np.array([[0.1, 0.2], [0.4, 0.6]]))
    assert tour_length(inst, [1, 0]) == pytest.approx(1.0)


def test_single_city():
    assert tour_length(Instance(np.array([[0.3, 0.3]])), [0]) == 0.0


def test_matches_resummation_oracle():
    inst = generate_uniform(5, 1, seed=11)[0]
    order = [3, 0, 4, 1, 2]
    assert tour_length(inst, order) == pytest.approx(resum(inst.coords, order), abs=1e-12)


@pytest.mark.parametrize("order", [[0, 1, 2], [0, 1, 2, 2], [0, 1, 2, 4]])
def test_rejects_non_permutation(order):
    with pytest.raises(ValueError):
        tour_length(SQUARE, order)


def test_batch_lengths_agree():
    insts = generate_uniform(9, 20, seed=3)
    coords = np.stack([i.coords for i in insts])
    tours = np.stack([np.random.default_rng(k).permutation(9) for k in range(20)])
    np.testing.assert_allclose(tour_lengths(coords, tours),
                               [tour_length(i, t) for i, t in zip(insts, tours)], rtol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**31), st.integers(0, 29))
def test_rotation_and_reversal_invariance(n, seed, shift):
    inst = generate_uniform(n, 1, seed)[0]
    order = np.random.default_rng(seed).permutation(n)
    base = tour_length(inst, order)
    assert base >= 0
    assert tour_length(inst, np.roll(order, shift % n)) == pytest.approx(base, abs=1e-12)
    assert tour_length(inst, order[::-1]) == pytest.approx(base, abs=1e-12)


def test_zero_length_iff_coincident():
    same = Instance(np.full((4, 2), 0.25))
    assert tour_length(same, [0, 1, 2, 3]) == 0.0
    dup = Instance(np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]))
    assert tour_length(dup, [0, 1, 2]) > 0


class TestGenerate:
    def test_deterministic(self):
        a = generate_uniform(7, 5, seed=42)
        b = generate_uniform(7, 5, seed=42)
        assert all(np.array_equal(x.coords, y.coords) for x, y in zip(a, b))

    def test_range(self):
        pts = np.concatenate([i.coords for i in generate_uniform(100, 50, seed=1)])
        assert len(pts) == 5000 and pts.min() >= 0 and pts.max() <= 1

    def test_mean(self):
        pts = np.concatenate([i.coords for i in generate_uniform(1000, 50, seed=2)])
        assert abs(pts.mean() - 0.5) < 0.01


class TestBruteForce:
    def test_square(self):
        assert brute_force_optimal(SQUARE).length == pytest.approx(4.0)

    def test_collinear(self):
        inst = Instance(np.array([[0, 0], [1, 0], [2, 0]], dtype=float))
        assert brute_force_optimal(inst).length == pytest.approx(4.0)

    def test_too_large(self):
        with pytest.raises(ValueError):
            brute_force_optimal(generate_uniform(11, 1, 0)[0])

    def test_matches_full_enumeration(self):
        import itertools
        inst = generate_uniform(6, 1, seed=5)[0]
        best = min(resum(inst.coords, p) for p in itertools.permutations(range(6)))
        assert brute_force_optimal(inst).length == pytest.approx(best, abs=1e-12)


class TestBatchFile:
    def test_round_trip(self, tmp_path):
        insts = generate_uniform(5, 3, seed=9)
        write_batch(tmp_path / "b.txt", insts)
        n, back = read_batch(tmp_path / "b.txt")
        assert n == 5 and len(back) == 3
        for a, b in zip(insts, back):
            np.testing.assert_array_equal(a.coords, b.coords)

    def test_empty(self, tmp_path):
        write_batch(tmp_path / "e.txt", [], n=50)
        assert (tmp_path / "e.txt").read_text() == "50 0\n"
        assert read_batch(tmp_path / "e.txt") == (50, [])

    def test_truncated(self, tmp_path):
        (tmp_path / "t.txt").write_text("3 1\n0 0\n1 1\n")
        with pytest.raises(ValueError):
            read_batch(tmp_path / "t.txt")
