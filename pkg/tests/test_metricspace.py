import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from widthlab.metricspace import (
    HAMMING,
    KYFAN,
    LINF,
    DomainError,
    Lp,
    MetricSpec,
    WeightedVector,
    l0_width_conversion_bound,
    lp,
    matrix_distance,
    norm,
)

from conftest import kyfan_grid_oracle

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_kyfan_examples():
    assert norm(np.zeros(4), KYFAN) == 0
    assert norm(np.full(4, 0.5), KYFAN) == 0.5
    x = np.zeros(10)
    x[:3] = 1
    assert norm(x, KYFAN) == pytest.approx(0.3)
    assert kyfan_grid_oracle(x) == pytest.approx(0.3, abs=1e-4)


def test_hamming_example():
    assert norm(np.array([1.0, 0, 2, 0]), HAMMING) == 0.5


def test_hamming_threshold():
    x = np.array([1e-13, 0.0, 1.0, 0.0])
    assert norm(x, HAMMING) == 0.5
    assert norm(x, MetricSpec("Hamming", zero_threshold=1e-12)) == 0.25


def test_lp_normalization():
    x = np.array([3.0, 4.0])
    assert norm(x, lp(2)) == pytest.approx(5.0)
    assert norm(x, Lp(2)) == pytest.approx(5.0 / math.sqrt(2))
    assert norm(x, LINF) == 4.0


def test_weighted_vector():
    wv = WeightedVector(np.array([1.0, 0.0]), np.array([0.25, 0.75]))
    assert norm(wv, HAMMING) == 0.25
    assert norm(wv, KYFAN) == 0.25
    with pytest.raises(Exception):
        WeightedVector(np.array([1.0, 0.0]), np.array([0.5, 0.6]))


def test_invalid_specs():
    with pytest.raises(DomainError):
        Lp(0)
    with pytest.raises(DomainError):
        Lp(-1)
    with pytest.raises(DomainError):
        MetricSpec("Nope")
    with pytest.raises(DomainError):
        MetricSpec.parse("q3")


def test_parse():
    assert MetricSpec.parse("l1") == lp(1)
    assert MetricSpec.parse("L1.5") == Lp(1.5)
    assert MetricSpec.parse("kyfan") == KYFAN
    assert MetricSpec.parse("fro") == lp(2)


def test_matrix_distance():
    A = np.arange(9.0).reshape(3, 3)
    assert matrix_distance(A, A, KYFAN) == 0
    assert matrix_distance(np.eye(3), np.zeros((3, 3)), HAMMING) == pytest.approx(1 / 3)
    with pytest.raises(DomainError):
        matrix_distance(np.eye(3), np.eye(2), HAMMING)


def test_matrix_distance_kyfan_oracle(rng):
    A, B = rng.normal(size=(4, 4)) * 0.3, rng.normal(size=(4, 4)) * 0.3
    assert matrix_distance(A, B, KYFAN) == pytest.approx(kyfan_grid_oracle((A - B).ravel()), abs=1e-4)


def test_conversion_bound():
    assert l0_width_conversion_bound(0.0, "functions_to_vector") == 0
    assert l0_width_conversion_bound(1.0, "vector_to_functions") == 1
    assert l0_width_conversion_bound(1e-4, "functions_to_vector") == pytest.approx(2 * math.sqrt(0.02))
    with pytest.raises(DomainError):
        l0_width_conversion_bound(1.5, "functions_to_vector")
    with pytest.raises(DomainError):
        l0_width_conversion_bound(0.5, "sideways")


def test_conversion_bound_dominates_simulation(rng):
    # xi - eta small on most coordinates: per-coordinate Ky-Fan errors average eps
    N, T = 50, 400
    diffs = np.where(rng.random((T, N)) < 0.01, 1.0, 0.0)
    per_function = np.mean([norm(diffs[:, k], KYFAN) for k in range(N)])
    vector = np.mean([norm(diffs[t], KYFAN) for t in range(T)])
    assert vector <= l0_width_conversion_bound(per_function, "functions_to_vector")


def test_kyfan_not_homogeneous():
    x = np.full(6, 0.5)
    assert norm(2 * x, KYFAN) != 2 * norm(x, KYFAN)


@settings(max_examples=200, deadline=None)
@given(arrays(float, st.integers(1, 64), elements=st.floats(0, 2, allow_nan=False)))
def test_kyfan_matches_grid_oracle(x):
    assert norm(x, KYFAN) == pytest.approx(kyfan_grid_oracle(x), abs=1.01e-4)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 20).flatmap(lambda n: st.tuples(*[arrays(float, n, elements=finite)] * 3)),
       st.sampled_from([1.0, 1.5, 2.0, 3.0]))
def test_triangle_inequality(xyz, p):
    x, y, _ = xyz
    m = Lp(p)
    assert norm(x + y, m) <= norm(x, m) + norm(y, m) + 1e-10


@settings(max_examples=300, deadline=None)
@given(arrays(float, st.integers(1, 30), elements=finite), st.sampled_from([0.5, 1.0, 2.0, 4.0]))
def test_lp_dominates_kyfan(x, p):
    k = norm(x, KYFAN)
    assert norm(x, Lp(p)) >= k ** (1 + 1 / p) - 1e-12
    assert norm(x, HAMMING) >= k - 1e-12


@settings(max_examples=200, deadline=None)
@given(arrays(float, st.integers(1, 30), elements=finite), st.randoms(use_true_random=False),
       st.floats(-5, 5, allow_nan=False))
def test_invariances(x, r, c):
    perm = list(range(x.size))
    r.shuffle(perm)
    for m in (KYFAN, HAMMING):
        assert norm(x[perm], m) == pytest.approx(norm(x, m))
    assert norm(c * x, Lp(1.5)) == pytest.approx(abs(c) * norm(x, Lp(1.5)), rel=1e-9, abs=1e-12)
