"""Width engines: exact spectral formulas in l_2, alternating-minimization
search for low-rank approximants in other metrics, Monte-Carlo estimators,
and certificates."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .metricspace import (
    FROBENIUS,
    DomainError,
    MetricSpec,
    WeightedVector,
    lp,
    matrix_distance,
)
from .subspace import (
    Subspace,
    distance,
    fit,
    random_subspace,
)
from .systems import FunctionSystem, RandomVectorModel, sample, substream

log = logging.getLogger(__name__)

EXACT = "Exact"
UPPER = "UpperBound"
LOWER_EVIDENCE = "LowerEvidence"
MONTE_CARLO = "MonteCarloEstimate"

HAMMING_SEARCH_CAP = 4096


@dataclass
class SpectralDecomposition:
    singular_values: np.ndarray
    left_basis: np.ndarray
    right_basis: np.ndarray

    @classmethod
    def of(cls, A) -> "SpectralDecomposition":
        U, s, Vt = np.linalg.svd(np.asarray(A), full_matrices=False)
        return cls(s, U, Vt.conj().T)

    def reconstruct(self) -> np.ndarray:
        return (self.left_basis * self.singular_values) @ self.right_basis.conj().T


@dataclass
class WidthResult:
    value: float
    certainty: str
    n: int
    metric: Optional[MetricSpec] = None
    stderr: Optional[float] = None
    provenance: str = ""
    subspace: Optional[Subspace] = None

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("width value must be nonnegative")
        if (self.stderr is not None) != (self.certainty == MONTE_CARLO):
            raise ValueError("stderr is present exactly for Monte-Carlo estimates")


@dataclass
class LowRankApprox:
    left: np.ndarray
    right: np.ndarray
    error: float
    metric: MetricSpec
    certainty: str = UPPER
    history: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def rank(self) -> int:
        return self.left.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        if self.left.shape[1] == 0:
            return np.zeros((self.left.shape[0], self.right.shape[1]),
                            dtype=np.result_type(self.left, self.right))
        return self.left @ self.right


def _data_matrix(X) -> tuple:
    if isinstance(X, FunctionSystem):
        return X.weighted_samples(), X
    return np.asarray(X), None


def exact_l2_avg_width(X: FunctionSystem, n: int) -> WidthResult:
    """2-averaged width of the columns of X in L_2(mu):
    N^(-1/2) (sum_{k>n} sigma_k^2)^(1/2) for the weight-adjusted sample matrix."""
    S = X.weighted_samples()
    N = S.shape[1]
    if not (0 <= n <= N):
        raise DomainError(f"n must lie in [0, {N}]")
    U, s, _ = np.linalg.svd(S, full_matrices=False)
    tail = s[n:]
    value = math.sqrt(math.fsum((tail * tail).tolist()) / N)
    basis = U[:, :n] / np.sqrt(X.weights)[:, None]
    Q = Subspace.span(basis) if n else Subspace.zero(S.shape[0])
    return WidthResult(value, EXACT, n, metric=MetricSpec("Lp", 2.0),
                       provenance="spectral tail of the weight-adjusted sample matrix", subspace=Q)


def eckart_young_truncation(A, n: int) -> LowRankApprox:
    A = np.asarray(A)
    if not (0 <= n <= min(A.shape)):
        raise DomainError("n must lie in [0, min(M, N)]")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    err = math.sqrt(math.fsum((s[n:] ** 2).tolist()))
    return LowRankApprox(U[:, :n] * s[:n], Vt[:n], err, FROBENIUS, EXACT,
                         notes={"singular_values": s.tolist()})


# --------------------------------------------------------------------------
# alternating minimization


def _fit_metric(m: MetricSpec) -> MetricSpec:
    """Separable metric used for column/row subproblems."""
    if m.kind == "KyFanL0":
        return lp(1)
    if m.kind == "Lp":
        return MetricSpec("LpCounting", m.p, m.zero_threshold)
    return m


def _separable_error(A, B, fm: MetricSpec) -> float:
    R = np.abs(A - B)
    if fm.kind == "Hamming":
        return float(np.count_nonzero(R > fm.zero_threshold))
    if fm.kind == "Linf":
        return float(R.max()) if R.size else 0.0
    return float(np.sum(R ** fm.p))


def _altmin_run(A, U, n, m, fm, iters, seed, tol=1e-13):
    M, N = A.shape
    V = np.zeros((n, N))
    for j in range(N):
        V[:, j] = fit(U, A[:, j], fm, seed=seed + j)
    hist = [_separable_error(A, U @ V, fm)]
    best = (matrix_distance(A, U @ V, m), U.copy(), V.copy())
    for it in range(iters):
        for i in range(M):
            U[i] = fit(V.T, A[i], fm, seed=seed + 7919 * (it + 1) + i, c0=U[i])
        for j in range(N):
            V[:, j] = fit(U, A[:, j], fm, seed=seed + 104729 * (it + 1) + j, c0=V[:, j])
        err = _separable_error(A, U @ V, fm)
        hist.append(err)
        true_err = matrix_distance(A, U @ V, m)
        if true_err < best[0]:
            best = (true_err, U.copy(), V.copy())
        if hist[-2] - err <= tol * max(hist[0], 1e-300):
            break
    return best, hist


def altmin_lowrank(A, n: int, m: MetricSpec = FROBENIUS, restarts: int = 3, iters: int = 50,
                   seed: int = 0, local_search: Optional[bool] = None) -> LowRankApprox:
    """Rank-n approximation of A by alternating row/column fits under ``m``.

    Restart 0 starts from the truncated SVD, the rest from Gaussian left
    factors.  Column and row subproblems use the ``subspace`` solvers (l_1 for
    the non-separable Ky-Fan metric).  For Hamming on small matrices a
    kick-and-refit local search follows.  The error is an upper bound on the
    best achievable one unless the metric is Frobenius.
    """
    A = np.asarray(A, dtype=float)
    M, N = A.shape
    if n < 0:
        raise DomainError("n must be nonnegative")
    if n == 0:
        return LowRankApprox(np.zeros((M, 0)), np.zeros((0, N)),
                             matrix_distance(A, np.zeros_like(A), m), m, EXACT)
    if n >= min(M, N):
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
        return LowRankApprox(U * s, Vt, 0.0, m, EXACT)
    fm = _fit_metric(m)
    U0, s0, _ = np.linalg.svd(A, full_matrices=False)
    best = None
    histories = []
    for r in range(max(restarts, 1)):
        if r == 0:
            U = U0[:, :n] * s0[:n]
        else:
            U = substream(seed, r).standard_normal((M, n))
        (err, Ub, Vb), hist = _altmin_run(A, U, n, m, fm, iters, seed + 1000 * r)
        histories.append(hist)
        if best is None or err < best[0]:
            best = (err, Ub, Vb)
        if err == 0:
            break
    err, U, V = best
    notes = {"restarts": restarts, "fit_metric": fm.label()}
    if local_search is None:
        local_search = m.kind == "Hamming" and M * N <= HAMMING_SEARCH_CAP
    if local_search and err > 0:
        err, U, V, kicks = _hamming_local_search(A, U, V, n, m, fm, seed)
        notes["local_search_accepted"] = kicks
    return LowRankApprox(U, V, err, m, UPPER, history=histories[0], notes=notes)


def _hamming_local_search(A, U, V, n, m, fm, seed, rounds: int = 20):
    rng = substream(seed, 99)
    err = matrix_distance(A, U @ V, m)
    accepted = 0
    M, N = A.shape
    for t in range(rounds):
        if err == 0:
            break
        Uk = U + 0.3 * rng.standard_normal(U.shape) * (np.abs(U).max() + 1e-12)
        # pin the worst rows back onto data to escape the current basin
        R = np.abs(A - U @ V) > fm.zero_threshold
        worst = np.argsort(-R.sum(axis=1))[: max(1, n)]
        for i in worst:
            Uk[i] = fit(V.T, A[i], fm, seed=seed + t)
        (e2, U2, V2), _ = _altmin_run(A, Uk, n, m, fm, 5, seed + 31 * (t + 1))
        if e2 < err:
            err, U, V = e2, U2, V2
            accepted += 1
    return err, U, V, accepted


# --------------------------------------------------------------------------
# Monte-Carlo average widths


def mc_avg_width_upper(source: Union[RandomVectorModel, FunctionSystem], n: int, m: MetricSpec,
                       strategy: str = "RandomSubspace", trials: int = 100, seed: int = 0,
                       power: float = 1.0, train: Optional[int] = None) -> WidthResult:
    """Upper estimates of d_n^avg.

    For a FunctionSystem the points are its columns (functions) in R^M; for a
    RandomVectorModel they are realizations of the vector.  ``RandomSubspace``
    averages over Haar subspaces (mean and stderr); ``AltMin`` and ``SVDInit``
    search one good subspace and report its average distance.
    """
    if strategy not in ("RandomSubspace", "AltMin", "SVDInit"):
        raise DomainError(f"unknown strategy {strategy!r}")
    if isinstance(source, FunctionSystem):
        data = np.asarray(source.samples, dtype=float)
        weights = source.weights
        ambient = data.shape[0]
    else:
        ambient = source.dim
        data = None
        weights = None
    if not (0 <= n <= ambient):
        raise DomainError("n out of range")

    def avg(Q, cols):
        vals = np.array([distance(WeightedVector(cols[:, j], weights), Q, m, seed=seed + j,
                                  certificate=False).value for j in range(cols.shape[1])])
        return vals

    if strategy == "RandomSubspace":
        per = []
        for t in range(trials):
            Q = random_subspace(ambient, n, seed=substream(seed, t, 1).integers(2 ** 63))
            if data is not None:
                vals = avg(Q, data)
                per.append(float(np.mean(vals ** power) ** (1 / power)))
            else:
                x = source.draw(substream(seed, t, 0))
                per.append(avg(Q, x[:, None])[0])
        per = np.asarray(per)
        if data is None:
            per_p = per ** power
            mean = float(np.mean(per_p) ** (1 / power))
        else:
            mean = float(np.mean(per))
        se = float(np.std(per, ddof=1) / math.sqrt(len(per))) if len(per) > 1 else 0.0
        return WidthResult(mean, MONTE_CARLO, n, m, stderr=se,
                           provenance=f"Haar subspaces, {trials} trials")

    if data is None:
        train = train or max(2 * ambient, 16)
        fit_data = sample(source, train, seed=seed).T
        eval_data = sample(source, trials, seed=seed + 1).T
    else:
        fit_data = data
        eval_data = data
    if n == 0:
        Q = Subspace.zero(ambient)
    elif strategy == "SVDInit":
        U = np.linalg.svd(fit_data, full_matrices=False)[0]
        Q = Subspace.span(U[:, :n])
    else:
        approx = altmin_lowrank(fit_data, n, m, restarts=2, iters=10, seed=seed)
        Q = Subspace.span(approx.left) if approx.rank else Subspace.zero(ambient)
        if Q.dim < n:
            Q = Subspace.span(np.column_stack([Q.basis, np.linalg.svd(fit_data)[0][:, :n]]))
    vals = avg(Q, eval_data)
    value = float(np.mean(vals ** power) ** (1 / power))
    if data is None:
        se = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
        return WidthResult(value, MONTE_CARLO, n, m, stderr=se,
                           provenance=f"{strategy} subspace fitted on {fit_data.shape[1]} draws, "
                                      f"evaluated on {trials} fresh draws", subspace=Q)
    return WidthResult(value, UPPER, n, m, provenance=f"{strategy} subspace", subspace=Q)


# --------------------------------------------------------------------------
# certificates and constants


def gluskin_certificate(x, Q: Subspace, p: float) -> float:
    """<x, Px> / ||Px||_{p'} with P the projector onto Q's orthogonal
    complement; a lower bound on the l_p distance from x to Q.  p = 2 is
    admitted as the limiting case."""
    if not (1 < p <= 2):
        raise DomainError("p must lie in (1, 2]")
    x = np.asarray(x, dtype=float)
    v = x - Q.project(x) if Q.dim else x.copy()
    pp = p / (p - 1)
    if np.linalg.norm(v) <= 1e-14 * max(1.0, np.linalg.norm(x)):
        return 0.0
    a = np.abs(v)
    s = a.max()
    denom = s * np.sum((a / s) ** pp) ** (1 / pp)
    return float(x @ v / denom)


def sp_constant(X: FunctionSystem, p_prime: float, restarts: int = 8, seed: int = 0,
                iters: int = 500) -> WidthResult:
    """Lower estimate of the best B with ||sum a_k phi_k||_{p'} <= B|a|.

    Fixed-point ascent a <- Phi^T W |f|^(p'-1) sign(f), normalized, which
    increases ||Phi a||_{p'} on the sphere for p' >= 2.
    """
    if p_prime < 2:
        raise DomainError("p' must be at least 2")
    Phi = np.asarray(X.samples, dtype=float)
    w = X.weights
    col_norms = np.sqrt(w @ Phi ** 2)
    if not np.allclose(col_norms, 1.0, atol=1e-8):
        log.warning("columns are not unit in L_2(mu); B estimate is for the raw system")

    def value(a):
        f = Phi @ a
        return float(np.sum(w * np.abs(f) ** p_prime) ** (1 / p_prime))

    N = Phi.shape[1]
    starts = [np.eye(N)[k] for k in range(min(N, restarts))]
    rng = substream(seed, 0)
    starts += [rng.standard_normal(N) for _ in range(restarts)]
    best = 0.0
    for a in starts:
        a = a / np.linalg.norm(a)
        v = value(a)
        for _ in range(iters):
            f = Phi @ a
            g = Phi.T @ (w * np.sign(f) * np.abs(f) ** (p_prime - 1))
            ng = np.linalg.norm(g)
            if ng == 0:
                break
            an = g / ng
            vn = value(an)
            if vn <= v * (1 + 1e-15):
                a, v = (an, vn) if vn > v else (a, v)
                break
            a, v = an, vn
        best = max(best, v)
    return WidthResult(best, LOWER_EVIDENCE, 0, MetricSpec("Lp", p_prime),
                       provenance=f"sphere ascent, {len(starts)} starts")


def binom_tail(k: int, d: int) -> tuple:
    """(sum_{i<=d} C(k, i), (e k / d)^d), the second read as 1 for d = 0."""
    if not (0 <= d <= k):
        raise DomainError("need 0 <= d <= k")
    exact = sum(math.comb(k, i) for i in range(d + 1))
    bound = 1.0 if d == 0 else (math.e * k / d) ** d
    return exact, bound


def transpose_identity_check(X: FunctionSystem, Q: Subspace, p: float, seed: int = 0,
                             rtol: float = 1e-12) -> tuple:
    """Both sides of sum_k ||xi_k - eta_k||_{L_p}^p = E ||xi - eta||_{l_p}^p.

    xi is a random row of X (a point drawn with X's weights); eta is the best
    l_p approximation of xi from Q, computed row by row.
    """
    S = np.asarray(X.samples, dtype=float)
    Mp, N = S.shape
    if Q.ambient_dim != N:
        raise DomainError("subspace must live in R^N (one coordinate per function)")
    m = MetricSpec("Linf") if math.isinf(p) else lp(p)
    H = np.empty_like(S)
    for i in range(Mp):
        if Q.dim == 0:
            H[i] = 0.0
        else:
            res = distance(S[i], Q, m, seed=seed + i, certificate=False)
            H[i] = Q.basis @ res.minimizer
    D = np.abs(S - H) ** p
    w = X.weights
    lhs = math.fsum(math.fsum((w * D[:, k]).tolist()) for k in range(N))
    rhs = math.fsum(w[i] * math.fsum(D[i].tolist()) for i in range(Mp))
    if abs(lhs - rhs) > rtol * max(abs(lhs), abs(rhs), 1e-300):
        raise AssertionError(f"transpose identity violated: {lhs!r} vs {rhs!r}")
    return lhs, rhs
