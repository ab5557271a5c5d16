"""Low-rank Hamming approximation of the Walsh-Hadamard characters."""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable

import numpy as np

from ..metricspace import DomainError, MetricSpec
from ..systems import MAX_ENTRIES, _popcount, substream
from ..widths import LowRankApprox, binom_tail
from .interp import InterpolatingPolynomial, polynomial_from_coefficients, sign_interpolant
from .report import Report

RANK_RTOL = 1e-8
SCAN_AFTER = 10_000


def in_center(weights: np.ndarray, k: int) -> np.ndarray:
    """Membership in {x : |sum x_i - k/2| <= sqrt(k)} given Hamming weights."""
    return np.abs(np.asarray(weights, dtype=float) - k / 2) <= math.sqrt(k) + 1e-12


def split_into_center(x: int, k: int, combine: Callable[[int, int], int],
                      inverse: Callable[[int, int], int], seed: int = 0) -> tuple:
    """Find x1, x2 in the central set with combine(x1, x2) = x.

    ``inverse(x, x1)`` returns the x2 completing x1.  Rejection sampling is
    tried first; a lexicographic scan then always succeeds because the central
    set holds more than half of the group.
    """
    rng = substream(seed, x)
    size = 2 ** k
    drawn = 0
    while drawn < SCAN_AFTER:
        c = rng.integers(0, size, 256, dtype=np.int64)
        drawn += c.size
        c2 = np.array([inverse(x, int(a)) for a in c], dtype=np.int64)
        ok = in_center(_popcount(c.astype(np.uint64)), k) & in_center(_popcount(c2.astype(np.uint64)), k)
        if ok.any():
            i = int(np.argmax(ok))
            return int(c[i]), int(c2[i])
    for a in range(size):
        b = inverse(x, a)
        if in_center(bin(a).count("1"), k) and in_center(bin(b).count("1"), k):
            assert combine(a, b) == x
            return a, b
    raise RuntimeError("no decomposition found; the central set should cover the group")


def xor_split(x: int, k: int, seed: int = 0) -> tuple:
    return split_into_center(x, k, lambda a, b: a ^ b, lambda x, a: x ^ a, seed)


def numerical_rank(A: np.ndarray, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def walsh_window(k: int, lam: float) -> tuple:
    return k / 4, 2 * lam * math.sqrt(k)


def walsh_lowrank(k: int, lam: float, mode: str = "materialize", count: int = 10 ** 6,
                  seed: int = 0, rank_sample: int = 256):
    """Approximate every character W_x of Z_2^k in the Hamming metric.

    Rows x in the central set use q(<x, y>) with q interpolating (-1)^t on the
    window [k/4 - 2 lam sqrt k, k/4 + 2 lam sqrt k]; other rows use the product
    of the approximants of x1, x2 with x = x1 XOR x2 in the central set.

    Returns ``(approx, report)``; ``approx`` is None in sampling mode.
    """
    if k < 1 or lam < 1:
        raise DomainError("need k >= 1 and lambda >= 1")
    if mode not in ("materialize", "sample"):
        raise DomainError(f"unknown mode {mode!r}")
    size = 2 ** k
    if mode == "materialize" and size * size > MAX_ENTRIES:
        raise DomainError("materialization needs 2^(2k) <= 2^26; use mode='sample'")
    center, radius = walsh_window(k, lam)
    q = sign_interpolant(center, radius, clip=(0, k))
    d = q.degree
    qt = [q(t) for t in range(k + 1)]
    sign = [Fraction(1 - 2 * (t % 2)) for t in range(k + 1)]
    good = np.array([qt[t] == sign[t] for t in range(k + 1)])
    # product approximant matches W_x iff q(t1) q(t2) == (-1)^(t1 + t2) exactly
    good2 = np.array([[qt[a] * qt[b] == sign[a] * sign[b] for b in range(k + 1)]
                      for a in range(k + 1)])
    qf = np.array([float(v) for v in qt])

    splits = {}

    def split(x):
        if x not in splits:
            splits[x] = xor_split(x, k, seed)
        return splits[x]

    predicted = 4 * math.exp(-2 * lam ** 2)
    row_bound = 2 * math.exp(-2 * lam ** 2)
    rb_center = binom_tail(k, d)[0]
    params = {"k": k, "lambda": lam, "mode": mode, "seed": seed, "degree": d,
              "window": [q.nodes[0], q.nodes[-1]]}
    notes = {"hypothesis_satisfied": 1 <= lam <= math.sqrt(k) / 4,
             "row_bound": row_bound,
             "rank_bound_center": rb_center,
             "rank_bound_rest": rb_center ** 2,
             "rank_bound_vacuous": rb_center >= size}

    if mode == "materialize":
        idx = np.arange(size, dtype=np.uint64)
        T = _popcount(idx[:, None] & idx[None, :]).astype(np.int64)
        W = 1 - 2 * (T & 1)
        cen = in_center(_popcount(idx), k)
        B = np.empty((size, size))
        miss = np.zeros((size, size), dtype=bool)
        union_violations = 0
        for x in range(size):
            if cen[x]:
                B[x] = qf[T[x]]
                miss[x] = ~good[T[x]]
            else:
                a, b = split(x)
                B[x] = qf[T[a]] * qf[T[b]]
                miss[x] = ~good2[T[a], T[b]]
                part = ~good[T[a]] | ~good[T[b]]
                union_violations += int(np.sum(miss[x] & ~part))
        measured = float(miss.mean())
        measured_center = float(miss[cen].mean()) if cen.any() else 0.0
        rank = numerical_rank(B)
        U, s, Vt = np.linalg.svd(B)
        r = int(np.sum(s > RANK_RTOL * s[0])) if s[0] > 0 else 0
        dev = float(np.abs(B - W)[~miss].max()) if (~miss).any() else 0.0
        approx = LowRankApprox(U[:, :r] * s[:r], Vt[:r], measured, MetricSpec("Hamming"),
                               "Exact", notes={"max_abs_dev_on_matches": dev})
        stderr = 0.0
        rows_center = int(cen.sum())
    else:
        rng = substream(seed, 1)
        xs = rng.integers(0, size, count, dtype=np.int64)
        ys = rng.integers(0, size, count, dtype=np.int64)
        wx = _popcount(xs.astype(np.uint64))
        cen = in_center(wx, k)
        t = _popcount((xs & ys).astype(np.uint64)).astype(np.int64)
        miss = np.empty(count, dtype=bool)
        miss[cen] = ~good[t[cen]]
        off = np.flatnonzero(~cen)
        union_violations = 0
        if off.size:
            uniq = np.unique(xs[off])
            part_a = np.empty(size, dtype=np.int64)
            part_b = np.empty(size, dtype=np.int64)
            for x in uniq:
                a, b = split(int(x))
                part_a[x], part_b[x] = a, b
            xa, xb = part_a[xs[off]], part_b[xs[off]]
            ta = _popcount((xa & ys[off]).astype(np.uint64)).astype(np.int64)
            tb = _popcount((xb & ys[off]).astype(np.uint64)).astype(np.int64)
            miss[off] = ~good2[ta, tb]
            part = ~good[ta] | ~good[tb]
            union_violations = int(np.sum(miss[off] & ~part))
        measured = float(miss.mean())
        stderr = math.sqrt(max(measured * (1 - measured), 0.0) / count)
        measured_center = float(miss[cen].mean()) if cen.any() else 0.0
        notes["stderr_center"] = (math.sqrt(measured_center * (1 - measured_center) / cen.sum())
                                  if cen.any() else 0.0)
        rows_center = None
        # numerical rank on a random submatrix of the approximant
        rs = min(rank_sample, size)
        rrows = rng.choice(size, rs, replace=False)
        rcols = rng.choice(size, rs, replace=False)
        B = np.empty((rs, rs))
        for i, x in enumerate(rrows):
            tt = _popcount((np.uint64(x) & rcols.astype(np.uint64)))
            if in_center(bin(int(x)).count("1"), k):
                B[i] = qf[tt]
            else:
                a, b = split(int(x))
                B[i] = qf[_popcount(np.uint64(a) & rcols.astype(np.uint64))] * \
                    qf[_popcount(np.uint64(b) & rcols.astype(np.uint64))]
        rank = numerical_rank(B)
        approx = None
    notes["lemma_half_violations"] = union_violations
    notes["measured_center"] = measured_center
    if rows_center is not None:
        notes["rows_in_center"] = rows_center
    report = Report("walsh_lowrank", params, predicted=predicted, measured=measured,
                    stderr=stderr, rank_bound=rb_center ** 2, rank_measured=rank, extra=notes)
    return approx, report


def monomial_rank_matrix(k: int, q) -> dict:
    """Numerical rank of (q(<x, y>))_{x, y in {0,1}^k} against the monomial count
    C(k,0) + ... + C(k,d)."""
    size = 2 ** k
    if size * size > MAX_ENTRIES:
        raise DomainError("needs 2^(2k) <= 2^26")
    if not isinstance(q, InterpolatingPolynomial):
        q = polynomial_from_coefficients(q)
    d = q.degree
    idx = np.arange(size, dtype=np.uint64)
    T = _popcount(idx[:, None] & idx[None, :]).astype(np.int64)
    table = np.array([float(q(t)) for t in range(k + 1)])
    A = table[T]
    rank = numerical_rank(A)
    bound = binom_tail(k, min(d, k))[0]
    if rank > bound:
        raise AssertionError(f"numerical rank {rank} exceeds monomial bound {bound}")
    return {"k": k, "degree": d, "rank": rank, "bound": bound}
