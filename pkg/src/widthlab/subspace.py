"""Approximating subspaces and distance-to-subspace solvers.

Convex metrics (l_1, l_inf, l_p with p > 1) are solved to a duality gap and
return a dual certificate ``z`` with ``Q^T z = 0``.  Nonconvex metrics (p < 1,
Ky-Fan, Hamming) return the best feasible point found by a multi-start
search; the reported value is always achieved by the returned coefficients.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .metricspace import (
    DomainError,
    MetricSpec,
    WeightedVector,
    check_weights,
    kyfan_value,
    norm,
)

EXACT = "Exact"
CONVEX = "ConvexConverged"
HEURISTIC = "HeuristicUpperBound"

GAP_RTOL = 1e-7
N_STARTS = 8
LP_METHODS = ("highs", "highs-ds", "highs-ipm")
SMOOTHING = tuple(10.0 ** -k for k in range(1, 7))


class SolverError(RuntimeError):
    pass


@dataclass
class Subspace:
    basis: np.ndarray

    def __post_init__(self):
        self.basis = np.asarray(self.basis)
        if self.basis.ndim != 2:
            raise DomainError("basis must be a 2-D array")
        n = self.basis.shape[1]
        if n:
            gram = self.basis.conj().T @ self.basis
            if not np.allclose(gram, np.eye(n), atol=1e-10, rtol=0):
                raise DomainError("basis columns are not orthonormal")

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def span(cls, vectors, tol: float = 1e-12) -> "Subspace":
        """Orthonormal basis of the column span, deflating dependent columns."""
        return cls(orthonormalize(vectors, tol))

    @classmethod
    def zero(cls, ambient: int) -> "Subspace":
        return cls(np.zeros((ambient, 0)))

    def project(self, x) -> np.ndarray:
        B = self.basis
        return B @ (B.conj().T @ np.asarray(x))

    def complement_projector(self) -> np.ndarray:
        B = self.basis
        return np.eye(self.ambient_dim) - B @ B.conj().T

    def contains(self, x, tol: float = 1e-10) -> bool:
        x = np.asarray(x)
        return np.linalg.norm(x - self.project(x)) <= tol * max(1.0, np.linalg.norm(x))

    def extend(self, v) -> "Subspace":
        return Subspace.span(np.column_stack([self.basis, np.asarray(v)]))


def orthonormalize(vectors, tol: float = 1e-12) -> np.ndarray:
    """Gram-Schmidt with one re-orthogonalization pass; drops columns whose
    residual falls below ``tol`` relative to the largest column norm."""
    V = np.asarray(vectors)
    if V.ndim == 1:
        V = V[:, None]
    dtype = np.result_type(V.dtype, float)
    M = V.shape[0]
    scale = max((np.linalg.norm(V[:, j]) for j in range(V.shape[1])), default=0.0)
    cols = []
    for j in range(V.shape[1]):
        v = V[:, j].astype(dtype, copy=True)
        for _ in range(2):
            for q in cols:
                v = v - q * (q.conj() @ v)
        nv = np.linalg.norm(v)
        if scale > 0 and nv > tol * scale * max(1, math.sqrt(M)) and nv > 0:
            cols.append(v / nv)
    if not cols:
        return np.zeros((M, 0), dtype=dtype)
    return np.column_stack(cols)


def random_subspace(ambient: int, dim: int, seed=None) -> Subspace:
    """Haar-distributed subspace: QR of a Gaussian matrix with sign fix."""
    if not (0 <= dim <= ambient):
        raise DomainError(f"need 0 <= dim <= ambient, got dim={dim}, ambient={ambient}")
    rng = np.random.default_rng(seed)
    if dim == 0:
        return Subspace.zero(ambient)
    G = rng.standard_normal((ambient, dim))
    Qm, R = np.linalg.qr(G)
    Qm = Qm * np.sign(np.diag(R))
    # one re-orthogonalization pass
    Qm, R = np.linalg.qr(Qm)
    Qm = Qm * np.sign(np.diag(R))
    return Subspace(Qm)


@dataclass
class DistanceResult:
    value: float
    minimizer: np.ndarray
    certificate: Optional[np.ndarray] = None
    gap: float = 0.0
    status: str = EXACT
    lower: Optional[float] = None

    @property
    def is_certified(self) -> bool:
        return self.status in (EXACT, CONVEX)


# --------------------------------------------------------------------------
# convex fits in counting l_p (inputs already weight-scaled)


def _linprog(*args, **kw):
    """HiGHS with fallbacks: the default choice occasionally stops with an
    unknown model status on degenerate problems that the other methods solve."""
    for method in LP_METHODS:
        res = linprog(*args, method=method, **kw)
        if res.status == 0:
            return res
    return res


def _lp_l1_dual(B: np.ndarray, x: np.ndarray):
    N, n = B.shape
    res = _linprog(-x, A_eq=B.T if n else None, b_eq=np.zeros(n) if n else None,
                   bounds=[(-1.0, 1.0)] * N)
    if res.status != 0:
        raise SolverError(f"l1 LP failed: {res.message}")
    c = -np.asarray(res.eqlin.marginals) if n else np.zeros(0)
    return c, np.asarray(res.x)


def _lp_linf_dual(B: np.ndarray, x: np.ndarray):
    N, n = B.shape
    cost = np.concatenate([-x, x])
    kw = {}
    if n:
        kw = dict(A_eq=np.hstack([B.T, -B.T]), b_eq=np.zeros(n))
    res = _linprog(cost, A_ub=np.ones((1, 2 * N)), b_ub=[1.0], bounds=(0, None), **kw)
    if res.status != 0:
        raise SolverError(f"linf LP failed: {res.message}")
    c = -np.asarray(res.eqlin.marginals) if n else np.zeros(0)
    z = res.x[:N] - res.x[N:]
    return c, z


def _lp_linf_primal(B: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Chebyshev fit min_c max|x - Bc| (coefficients only)."""
    return _lp_linf_dual(B, x)[0]


def _newton_lp(B: np.ndarray, x: np.ndarray, p: float, c0=None, max_iter: int = 200):
    """Damped Newton on sum |x - Bc|^p for 1 < p < inf."""
    N, n = B.shape
    c = np.linalg.lstsq(B, x, rcond=None)[0] if c0 is None else np.array(c0, float)
    scale = max(np.abs(x).max(), 1e-300)

    def f(cc):
        return float(np.sum((np.abs(x - B @ cc) / scale) ** p))

    fc = f(c)
    floor = 1e-13
    for _ in range(max_iter):
        r = (x - B @ c) / scale
        a = np.maximum(np.abs(r), floor)
        g = -B.T @ (np.sign(r) * a ** (p - 1))
        w = a ** (p - 2)
        H = (B.T * w) @ B
        H += 1e-14 * np.trace(H) / max(n, 1) * np.eye(n)
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            step = -g
        step = step * scale / max(p - 1, 1e-3)
        t = 1.0
        improved = False
        while t > 1e-12:
            cn = c + t * step
            fn = f(cn)
            if fn < fc:
                improved = True
                break
            t *= 0.5
        if not improved:
            break
        rel = (fc - fn) / max(fc, 1e-300)
        c, fc = cn, fn
        if rel < 1e-15:
            break
    return c


def _convex_solve(B: np.ndarray, Qo: np.ndarray, x: np.ndarray, p: float, want_cert: bool):
    """Return (coefficients, primal value, certificate z, lower bound) in
    counting l_p for scaled data.  ``Qo`` is an orthonormal basis of range(B)."""
    N, n = B.shape
    if n == 0:
        c = np.zeros(0)
    elif p == 1:
        c, z = _lp_l1_dual(B, x)
    elif math.isinf(p):
        c, z = _lp_linf_dual(B, x)
    else:
        c = _newton_lp(B, x, p)
    r = x - B @ c
    primal = _count_norm(r, p)
    if not want_cert:
        return c, primal, None, None
    if n == 0:
        g = _dual_direction(x, p)
    elif p == 1:
        g = z
    elif math.isinf(p):
        g = z
    else:
        g = _dual_direction(r, p)
    zc = g - Qo @ (Qo.T @ g) if n else g
    dn = _count_norm(zc, _conj(p))
    if dn == 0:
        return c, primal, np.zeros(N), 0.0
    zc = zc / dn
    lower = float(x @ zc)
    return c, primal, zc, lower


def _dual_direction(r: np.ndarray, p: float) -> np.ndarray:
    if math.isinf(p):
        g = np.zeros_like(r)
        i = int(np.argmax(np.abs(r)))
        g[i] = np.sign(r[i])
        return g
    if p == 1:
        return np.sign(r)
    s = np.abs(r).max()
    if s == 0:
        return np.zeros_like(r)
    return np.sign(r) * (np.abs(r) / s) ** (p - 1)


def _conj(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1)


def _count_norm(v: np.ndarray, p: float) -> float:
    a = np.abs(v)
    if a.size == 0:
        return 0.0
    if math.isinf(p):
        return float(a.max())
    s = a.max()
    if s == 0:
        return 0.0
    return float(s * np.sum((a / s) ** p) ** (1 / p))


# --------------------------------------------------------------------------
# nonconvex heuristics


def _irls(B, x, q, c0, scale):
    """Smoothed IRLS for sum |r|^q with the fixed continuation schedule."""
    c = c0.copy()
    for eps in SMOOTHING:
        e = eps * scale
        for _ in range(30):
            r = x - B @ c
            w = (r * r + e * e) ** (q / 2 - 1)
            sw = np.sqrt(w)
            cn = np.linalg.lstsq(B * sw[:, None], x * sw, rcond=None)[0]
            if np.linalg.norm(cn - c) <= 1e-12 * (1 + np.linalg.norm(c)):
                c = cn
                break
            c = cn
    return c


def _interpolants(B, x, rng, count, exhaustive_cap=2000):
    """Coefficients interpolating x exactly on n-subsets of coordinates."""
    N, n = B.shape
    if n == 0 or n > N:
        return []
    total = math.comb(N, n)
    if total <= exhaustive_cap:
        S = np.array(list(itertools.combinations(range(N), n)), dtype=np.intp)
    else:
        S = np.array([sorted(rng.choice(N, n, replace=False)) for _ in range(count)], dtype=np.intp)
    BS = B[S]
    # same rank test as numpy.linalg.matrix_rank, batched
    sv = np.linalg.svd(BS, compute_uv=False)
    ok = sv[:, -1] > sv[:, 0] * n * np.finfo(float).eps
    if not ok.any():
        return []
    C = np.linalg.solve(BS[ok], x[S[ok]][..., None])[..., 0]
    return list(C)


def _hamming_refine(B, x, c, thr):
    """Least-squares refit on the agreement set; keep if it does not lose agreements."""
    r = np.abs(x - B @ c)
    agree = r <= max(thr, 1e-9 * max(1.0, np.abs(x).max()))
    if agree.sum() >= B.shape[1] and np.linalg.matrix_rank(B[agree]) == B.shape[1]:
        return np.linalg.lstsq(B[agree], x[agree], rcond=None)[0]
    return c


def _hamming_refine_all(B, x, cands, thr):
    """Refits for every distinct agreement set among the candidates."""
    if not cands:
        return []
    C = np.array(cands)
    tol = max(thr, 1e-9 * max(1.0, np.abs(x).max()))
    agree = np.abs(x[None, :] - C @ B.T) <= tol
    _, first = np.unique(np.packbits(agree, axis=1), axis=0, return_index=True)
    return [_hamming_refine(B, x, cands[i], thr) for i in sorted(first)]


def _kyfan_threshold_search(B, x, w, c0, passes: int = 3):
    """Coordinate threshold search for the Ky-Fan distance.

    For a coordinate set S, fitting S in l_inf to level v_S gives Ky-Fan value
    at most max(v_S, w(S^c)).  S ranges over prefixes of the coordinates sorted
    by the current residual; v is nondecreasing and w(S^c) nonincreasing along
    the prefixes, so the crossing is located by bisection.
    """
    N, n = B.shape
    best_c = c0
    best_val = kyfan_value(np.abs(x - B @ c0), w)
    cands = []
    for _ in range(passes):
        order = np.argsort(np.abs(x - B @ best_c), kind="stable")
        tail = np.concatenate([np.cumsum(w[order][::-1])[::-1][1:], [0.0]])
        cache = {}

        def fit(j):
            if j not in cache:
                S = order[: j + 1]
                c = _lp_linf_primal(B[S], x[S]) if n else np.zeros(0)
                v = float(np.abs(x[S] - B[S] @ c).max())
                cache[j] = (c, v)
            return cache[j]

        lo, hi = min(n, N - 1), N - 1
        while lo < hi:
            mid = (lo + hi) // 2
            c, v = fit(mid)
            if v >= tail[mid]:
                hi = mid
            else:
                lo = mid + 1
        for j in {max(lo - 1, 0), lo, min(lo + 1, N - 1)}:
            cands.append(fit(j)[0])
        improved = False
        for c in cands:
            val = kyfan_value(np.abs(x - B @ c), w)
            if val < best_val - 1e-15:
                best_val, best_c, improved = val, c, True
        if not improved:
            break
    return best_c


def _kyfan_exhaustive(B, x, w):
    N, n = B.shape
    best_c, best_val = np.zeros(n), kyfan_value(np.abs(x), w)
    for size in range(n + 1, N + 1):
        for S in itertools.combinations(range(N), size):
            S = list(S)
            c = _lp_linf_primal(B[S], x[S])
            val = kyfan_value(np.abs(x - B @ c), w)
            if val < best_val:
                best_c, best_val = c, val
    return best_c


def _metric_value(r: np.ndarray, w: np.ndarray, m: MetricSpec) -> float:
    return norm(WeightedVector(r, w) if r.size else WeightedVector(np.zeros(1)), m)


def heuristic_fit(B: np.ndarray, x: np.ndarray, w: np.ndarray, m: MetricSpec, seed=0,
                  starts=None, extra_starts=()) -> np.ndarray:
    """Best coefficients found for a nonconvex metric.  Always considers c = 0,
    the least-squares solution and any ``extra_starts``."""
    N, n = B.shape
    rng = np.random.default_rng(seed)
    starts = N_STARTS if starts is None else starts
    scale = max(np.abs(x).max(), 1e-300)
    if n == 0:
        return np.zeros(0)
    c_ls = np.linalg.lstsq(B, x, rcond=None)[0]
    cands = [np.zeros(n), c_ls] + [np.asarray(c, float) for c in extra_starts]
    try:
        cands.append(_lp_l1_dual(B, x)[0])
    except SolverError:
        pass
    interp = _interpolants(B, x, rng, count=max(starts - 2, 0) if m.kind != "Hamming" else 400)
    thr = m.zero_threshold
    if m.kind == "Hamming":
        cands.extend(interp)
        cands.extend(_hamming_refine_all(B, x, list(cands), thr))
    else:
        q = m.p if m.kind in ("Lp", "LpCounting") else 0.5
        inits = [c_ls, cands[2] if len(cands) > 2 else c_ls]
        if interp:
            pick = rng.choice(len(interp), size=min(len(interp), starts - 2), replace=False)
            inits.extend(interp[i] for i in pick)
        for c0 in inits[:starts]:
            cands.append(_irls(B, x, q, c0, scale))
        cands.extend(interp)

    def score(c):
        return _metric_value(x - B @ c, w, m)

    if m.kind == "Hamming":
        R = np.abs(x[None, :] - np.array(cands) @ B.T)
        vals = list((R > thr).astype(float) @ w)
    else:
        vals = [score(c) for c in cands]
    best = int(np.argmin(vals))
    best_c = cands[best]
    if m.kind == "KyFanL0":
        if N <= 8 and n <= 2:
            c_ex = _kyfan_exhaustive(B, x, w)
            if score(c_ex) < vals[best]:
                best_c = c_ex
        order = np.argsort(vals)[:3]
        for i in order:
            c = _kyfan_threshold_search(B, x, w, cands[i])
            if score(c) < score(best_c):
                best_c = c
    return best_c


# --------------------------------------------------------------------------
# public API


def _scaling(m: MetricSpec, w: np.ndarray) -> np.ndarray:
    if m.kind == "Lp":
        return w ** (1.0 / m.p)
    return np.ones_like(w)


def distance(x, Q: Subspace, m: MetricSpec, seed=0, certificate: bool = True) -> DistanceResult:
    """rho(x, Q) under metric ``m``; ``x`` may be an array or WeightedVector."""
    wv = x if isinstance(x, WeightedVector) else WeightedVector(x)
    xv, w = wv.entries, wv.weights
    if xv.size != Q.ambient_dim:
        raise DomainError(f"vector length {xv.size} != ambient dimension {Q.ambient_dim}")
    B = Q.basis
    n = Q.dim
    if np.iscomplexobj(xv) or np.iscomplexobj(B):
        if not (m.kind in ("Lp", "LpCounting") and m.p == 2):
            raise DomainError("complex data is supported for l_2 distances only")

    if m.kind in ("Lp", "LpCounting") and m.p == 2:
        d = _scaling(m, w)
        if m.kind == "Lp" and not np.allclose(w, w[0]):
            Bs = B * d[:, None]
            c = np.linalg.lstsq(Bs, xv * d, rcond=None)[0] if n else np.zeros(0)
        else:
            c = B.conj().T @ xv if n else np.zeros(0, dtype=xv.dtype)
        r = xv - (B @ c if n else 0)
        val = norm(WeightedVector(r, w), m)
        return DistanceResult(val, c, certificate=None, gap=0.0, status=EXACT, lower=val)

    if m.is_convex:
        p = m.exponent
        d = _scaling(m, w)
        Bs, xs = B * d[:, None], xv * d
        Qo = orthonormalize(Bs) if n else Bs
        c, primal, zc, lower = _convex_solve(Bs, Qo, xs, p, certificate)
        val = norm(WeightedVector(xv - (B @ c if n else 0), w), m)
        if not certificate:
            return DistanceResult(val, c, status=CONVEX)
        # certificate mapped back: <x, d*z> = <xs, z>, Q^T (d*z) = (dQ)^T z = 0
        z_orig = d * zc
        gap = max(val - lower, 0.0)
        status = CONVEX if gap <= GAP_RTOL * (1 + _count_norm(xs, p)) else HEURISTIC
        return DistanceResult(val, c, certificate=z_orig, gap=gap, status=status, lower=lower)

    c = heuristic_fit(B, xv, w, m, seed=seed)
    val = norm(WeightedVector(xv - B @ c, w), m)
    return DistanceResult(val, c, status=HEURISTIC)


def fit(B: np.ndarray, x: np.ndarray, m: MetricSpec, w=None, seed=0, c0=None) -> np.ndarray:
    """Best coefficients c for x ~ B c under ``m`` with a general (not
    necessarily orthonormal) basis matrix ``B``.  ``c0``, when given, is kept
    as a candidate for nonconvex metrics so the result is never worse."""
    x = np.asarray(x)
    N, n = B.shape
    w = np.full(N, 1.0 / N) if w is None else check_weights(w, N)
    if n == 0:
        return np.zeros(0)
    if m.kind in ("Lp", "LpCounting") and m.p == 2:
        d = _scaling(m, w)
        return np.linalg.lstsq(B * d[:, None], x * d, rcond=None)[0]
    if m.is_convex:
        p = m.exponent
        d = _scaling(m, w)
        Bs, xs = B * d[:, None], x * d
        if p == 1:
            c = _lp_l1_dual(Bs, xs)[0]
        elif math.isinf(p):
            c = _lp_linf_primal(Bs, xs)
        else:
            c = _newton_lp(Bs, xs, p, c0=c0)
        if c0 is not None:
            r_new = _count_norm(xs - Bs @ c, p)
            r_old = _count_norm(xs - Bs @ c0, p)
            if r_old < r_new:
                return np.asarray(c0, float)
        return c
    extra = () if c0 is None else (c0,)
    return heuristic_fit(B, x, w, m, seed=seed, extra_starts=extra)


def mean_distance(X, Q: Subspace, m: MetricSpec, power: float = 1.0, seed=0):
    """((1/N) sum_i rho(x_i, Q)^power)^(1/power) over the columns of a system.

    Returns ``(value, certified)``; ``certified`` is False whenever an inner
    solve was heuristic or degraded.
    """
    samples = X.samples if hasattr(X, "samples") else np.asarray(X)
    weights = X.weights if hasattr(X, "weights") else None
    if samples.shape[0] != Q.ambient_dim:
        raise DomainError("system and subspace ambient dimensions differ")
    N = samples.shape[1]
    vals = []
    certified = True
    for j in range(N):
        x = WeightedVector(samples[:, j], weights)
        res = distance(x, Q, m, seed=seed + j, certificate=False)
        vals.append(res.value)
        certified &= res.status != HEURISTIC
    vals = np.asarray(vals)
    value = float(np.mean(vals ** power) ** (1.0 / power))
    return value, certified
