import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from widthlab.metricspace import HAMMING, DomainError, Lp, lp, matrix_distance, FROBENIUS
from widthlab.subspace import Subspace, distance, random_subspace
from widthlab.systems import FunctionSystem, orthonormal_system, random_signs, sample
from widthlab.widths import (
    altmin_lowrank,
    binom_tail,
    eckart_young_truncation,
    exact_l2_avg_width,
    gluskin_certificate,
    mc_avg_width_upper,
    sp_constant,
    transpose_identity_check,
)


def test_exact_l2_examples():
    O = orthonormal_system(4, 4, seed=0)
    assert exact_l2_avg_width(O, 1).value == pytest.approx(math.sqrt(3 / 4))
    assert exact_l2_avg_width(O, 4).value == pytest.approx(0, abs=1e-12)
    with pytest.raises(DomainError):
        exact_l2_avg_width(O, 5)


def test_exact_l2_against_nelder_mead(rng):
    X = FunctionSystem(rng.normal(size=(3, 5)))
    S = X.weighted_samples()

    def objective(angles):
        a, b = angles
        u = np.array([np.sin(a) * np.cos(b), np.sin(a) * np.sin(b), np.cos(a)])
        R = S - np.outer(u, u @ S)
        return math.sqrt(np.sum(R ** 2) / S.shape[1])

    best = min(minimize(objective, x0, method="Nelder-Mead",
                        options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000}).fun
               for x0 in itertools.product([0.3, 1.2, 2.5], [0.1, 2.0, 4.0]))
    assert exact_l2_avg_width(X, 1).value == pytest.approx(best, abs=1e-4)


def test_exact_l2_subspace_is_optimal(rng):
    X = FunctionSystem(rng.normal(size=(6, 10)))
    res = exact_l2_avg_width(X, 2)
    Q = res.subspace
    S = X.weighted_samples()
    direct = math.sqrt(np.mean(np.sum((S - Q.basis @ (Q.basis.T @ S)) ** 2, axis=0)))
    assert direct == pytest.approx(res.value)


def test_eckart_young_examples(rng):
    A = rng.normal(size=(20, 30))
    assert eckart_young_truncation(A, 0).error == pytest.approx(np.linalg.norm(A))
    B = rng.normal(size=(20, 3)) @ rng.normal(size=(3, 30))
    assert eckart_young_truncation(B, 3).error == pytest.approx(0, abs=1e-9)
    ey = eckart_young_truncation(A, 5).error
    alt = altmin_lowrank(A, 5, FROBENIUS, restarts=2, iters=200, seed=1).error
    assert alt == pytest.approx(ey, rel=1e-6)


def test_altmin_rank_zero():
    A = np.arange(12.0).reshape(3, 4)
    r = altmin_lowrank(A, 0, FROBENIUS)
    assert r.error == pytest.approx(np.linalg.norm(A))
    assert r.matrix.shape == A.shape


def test_altmin_identity_hamming_n4():
    r = altmin_lowrank(np.eye(4), 2, HAMMING, seed=0)
    assert r.error == pytest.approx(2 / 16)
    assert matrix_distance(np.eye(4), r.matrix, HAMMING) == pytest.approx(r.error)
    assert np.linalg.matrix_rank(r.matrix) <= 2


def test_mc_width_endpoints():
    O = orthonormal_system(16, 16, seed=1)
    r0 = mc_avg_width_upper(O, 0, Lp(2), "RandomSubspace", trials=3)
    assert r0.value == pytest.approx(1.0)
    assert r0.stderr is not None
    for n in (4, 8):
        r = mc_avg_width_upper(O, n, Lp(2), "AltMin", trials=1, power=2)
        assert r.value == pytest.approx(math.sqrt(1 - n / 16), abs=1e-6)
    with pytest.raises(DomainError):
        mc_avg_width_upper(O, 2, Lp(2), "Bogus")


def test_mc_width_rademacher_l1_vs_oracle():
    data = sample(random_signs(16), 40, seed=4).T
    res = mc_avg_width_upper(FunctionSystem(data), 8, lp(1), "AltMin", trials=1, seed=3)
    # multi-restart oracle on the same 40 points: many Haar subspaces plus the SVD subspace
    cands = [random_subspace(16, 8, seed=s) for s in range(30)]
    cands.append(Subspace.span(np.linalg.svd(data)[0][:, :8]))
    oracle = min(np.mean([distance(data[:, j], Q, lp(1), certificate=False).value
                          for j in range(40)]) for Q in cands)
    assert res.value > 0
    assert abs(res.value / oracle - 1) <= 0.05


def test_gluskin_certificate_examples(rng):
    Q = random_subspace(6, 2, seed=1)
    assert gluskin_certificate(Q.basis @ np.array([1.0, 2.0]), Q, 1.5) == 0
    assert gluskin_certificate(np.ones(9), Subspace.zero(9), 2) == pytest.approx(3.0)
    with pytest.raises(DomainError):
        gluskin_certificate(np.ones(3), Subspace.zero(3), 1.0)
    x = rng.normal(size=6)
    resid = np.linalg.norm(x - Q.project(x))
    assert gluskin_certificate(x, Q, 2) == pytest.approx(resid, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1.1, 1.9))
def test_gluskin_certificate_is_lower_bound(seed, p):
    r_ = np.random.default_rng(seed)
    M = int(r_.integers(3, 15))
    Q = random_subspace(M, int(r_.integers(0, M)), seed=seed)
    x = r_.normal(size=M)
    assert gluskin_certificate(x, Q, p) <= distance(x, Q, lp(p)).value + 1e-7


def test_sp_constant_examples():
    O = orthonormal_system(8, 8, seed=2)
    assert sp_constant(O, 2).value == pytest.approx(1.0, abs=1e-9)
    col = FunctionSystem(np.array([[1.0], [-2.0], [0.5], [1.5]]))
    expect = np.mean(np.abs(col.samples[:, 0]) ** 4) ** 0.25
    assert sp_constant(col, 4).value == pytest.approx(expect)


def test_sp_constant_vs_sphere_grid():
    # +-1 system on 8 points with 3 functions
    signs = np.array(list(itertools.product([-1.0, 1.0], repeat=3)))
    X = FunctionSystem(signs)
    est = sp_constant(X, 4, restarts=8, seed=0).value
    th = np.linspace(0, np.pi, 181)
    ph = np.linspace(0, 2 * np.pi, 361)
    T, P = np.meshgrid(th, ph)
    A = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1).reshape(-1, 3)
    grid = np.max(np.mean(np.abs(A @ signs.T) ** 4, axis=1) ** 0.25)
    assert est == pytest.approx(grid, rel=0.05)
    assert est >= grid * (1 - 1e-9) or est == pytest.approx(grid, rel=1e-3)


def test_binom_tail():
    e, b = binom_tail(4, 1)
    assert e == 5 and b == pytest.approx(4 * math.e)
    for k in (1, 5, 9):
        e, b = binom_tail(k, k)
        assert e == 2 ** k and e <= b
    e, b = binom_tail(16, 4)
    assert e == 2517 and b == pytest.approx((4 * math.e) ** 4)
    assert binom_tail(10, 3)[0] == 176
    with pytest.raises(DomainError):
        binom_tail(3, 4)


def test_transpose_identity_small():
    X = FunctionSystem(np.array([[1.0, -1.0], [2.0, 0.5]]))
    lhs, rhs = transpose_identity_check(X, Subspace.span(np.eye(2)), 1)
    assert lhs == rhs == 0
    lhs, rhs = transpose_identity_check(X, random_subspace(2, 1, seed=0), 1)
    assert lhs == pytest.approx(rhs, rel=1e-12)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_transpose_identity_random(rng, p):
    X = FunctionSystem(rng.normal(size=(7, 5)))
    lhs, rhs = transpose_identity_check(X, random_subspace(5, 2, seed=p), p)
    assert lhs == pytest.approx(rhs, rel=1e-12)
