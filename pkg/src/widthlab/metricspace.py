"""Norms and distances for the metrics used throughout the package.

Vectors carry a probability weight on their coordinates.  ``Lp`` is the
normalized (probabilistic) L_p norm, ``LpCounting`` the plain l_p norm over the
counting measure, ``KyFanL0`` the Ky-Fan metric of convergence in measure and
``Hamming`` the weight of the nonzero set.  Complex entries are measured by
modulus.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

KINDS = ("Lp", "LpCounting", "Linf", "KyFanL0", "Hamming")

#: Metrics for which the distance to a subspace is a convex problem.
CONVEX_KINDS = ("Lp", "LpCounting", "Linf")


class DomainError(ValueError):
    """Raised on invalid metric parameters or arguments."""


@dataclass(frozen=True)
class MetricSpec:
    kind: str
    p: Optional[float] = None
    zero_threshold: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown metric kind {self.kind!r}")
        if self.kind in ("Lp", "LpCounting"):
            if self.p is None or not (self.p > 0) or math.isinf(self.p):
                raise DomainError(f"{self.kind} needs a finite p > 0, got {self.p}")
        if self.zero_threshold < 0:
            raise DomainError("zero_threshold must be nonnegative")

    @property
    def is_convex(self) -> bool:
        return self.kind == "Linf" or (self.kind in ("Lp", "LpCounting") and self.p >= 1)

    @property
    def exponent(self) -> float:
        """The l_p exponent of the metric (inf for Linf)."""
        if self.kind == "Linf":
            return math.inf
        if self.kind in ("Lp", "LpCounting"):
            return float(self.p)
        raise DomainError(f"{self.kind} has no l_p exponent")

    def label(self) -> str:
        if self.p is not None:
            return f"{self.kind}({self.p:g})"
        return self.kind

    @classmethod
    def parse(cls, text: str, zero_threshold: float = 0.0) -> "MetricSpec":
        """Parse ``l1``, ``L1.5``, ``linf``, ``l0``/``kyfan``, ``hamming``.

        A lowercase ``l`` means counting l_p, an uppercase ``L`` the
        normalized L_p^N.
        """
        t = text.strip()
        low = t.lower()
        if low in ("linf", "l_inf", "inf"):
            return cls("Linf", zero_threshold=zero_threshold)
        if low in ("l0", "kyfan", "kyfanl0"):
            return cls("KyFanL0", zero_threshold=zero_threshold)
        if low in ("hamming", "lh"):
            return cls("Hamming", zero_threshold=zero_threshold)
        if low in ("fro", "frobenius"):
            return cls("LpCounting", 2.0, zero_threshold)
        if len(t) > 1 and t[0] in "lL":
            try:
                p = float(t[1:])
            except ValueError:
                raise DomainError(f"cannot parse metric {text!r}") from None
            return cls("Lp" if t[0] == "L" else "LpCounting", p, zero_threshold)
        raise DomainError(f"cannot parse metric {text!r}")


def Lp(p: float) -> MetricSpec:
    return MetricSpec("Lp", p)


def lp(p: float) -> MetricSpec:
    """Counting-measure l_p."""
    return MetricSpec("LpCounting", p)


LINF = MetricSpec("Linf")
KYFAN = MetricSpec("KyFanL0")
HAMMING = MetricSpec("Hamming")
FROBENIUS = MetricSpec("LpCounting", 2.0)


@dataclass
class WeightedVector:
    entries: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        self.entries = np.asarray(self.entries).ravel()
        if self.entries.size == 0:
            raise DomainError("empty vector")
        if self.weights is None:
            self.weights = np.full(self.entries.size, 1.0 / self.entries.size)
        else:
            self.weights = check_weights(self.weights, self.entries.size)


def check_weights(weights, size: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float).ravel()
    if w.size != size:
        raise DomainError(f"weights have length {w.size}, expected {size}")
    if np.any(w <= 0):
        raise DomainError("weights must be strictly positive")
    if abs(math.fsum(w) - 1.0) > 1e-12:
        raise DomainError("weights must sum to 1")
    return w


def _as_weighted(x: Union[WeightedVector, np.ndarray]) -> WeightedVector:
    return x if isinstance(x, WeightedVector) else WeightedVector(x)


def kyfan_value(mags: np.ndarray, weights: np.ndarray) -> float:
    """sup{eps : mu(|f| >= eps) >= eps} for nonnegative magnitudes.

    Sort magnitudes decreasingly; on (a_(i+1), a_(i)] the level-set measure is
    the cumulative weight W_i of the top i entries, so the sup equals
    max_i min(a_(i), W_i).
    """
    order = np.argsort(-mags, kind="stable")
    a = mags[order]
    W = np.cumsum(weights[order])
    return float(np.max(np.minimum(a, W)))


def norm(x: Union[WeightedVector, np.ndarray], m: MetricSpec) -> float:
    wv = _as_weighted(x)
    mags = np.abs(wv.entries)
    w = wv.weights
    if m.kind in ("Hamming", "KyFanL0") and m.zero_threshold > 0:
        mags = np.where(mags <= m.zero_threshold, 0.0, mags)
    if m.kind == "Hamming":
        return float(w[mags > m.zero_threshold].sum())
    if m.kind == "KyFanL0":
        return kyfan_value(mags, w)
    if m.kind == "Linf":
        return float(mags.max())
    p = m.p
    if m.kind == "LpCounting":
        return _pnorm(mags, p)
    return float(np.sum(w * mags ** p) ** (1.0 / p))


def _pnorm(mags: np.ndarray, p: float) -> float:
    scale = mags.max()
    if scale == 0:
        return 0.0
    return float(scale * np.sum((mags / scale) ** p) ** (1.0 / p))


def matrix_distance(A, B, m: MetricSpec) -> float:
    """Distance between two same-shape matrices under the uniform product measure."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise DomainError(f"shape mismatch {A.shape} vs {B.shape}")
    return norm((A - B).ravel(), m)


def l0_width_conversion_bound(per_function_avg_error: float, direction: str) -> float:
    """Upper bound transferring an L_0 approximation error between the
    "system of functions" and "random vector" formulations.

    Both directions run the same Markov chain of thresholds: with
    ``delta = sqrt(eps)`` and ``gamma = sqrt(2 delta)`` the resulting error is
    at most ``2 gamma``.  Ky-Fan errors never exceed 1, so the result is capped.
    """
    eps = float(per_function_avg_error)
    if not (0.0 <= eps <= 1.0):
        raise DomainError("error must lie in [0, 1]")
    if direction not in ("functions_to_vector", "vector_to_functions"):
        raise DomainError(f"unknown direction {direction!r}")
    # functions_to_vector: delta = sqrt(eps) bounds the bad-coordinate count,
    #   gamma = sqrt(2 delta) bounds P(||xi - eta|| >= gamma) by gamma.
    # vector_to_functions: gamma' = sqrt(eps) via Markov on the vector error,
    #   E|Lambda_gamma'| <= 2 gamma' N, then delta' = sqrt(2 gamma') splits
    #   good/bad functions, average <= 2 delta'.
    first = math.sqrt(eps)
    second = math.sqrt(2.0 * first)
    return min(1.0, 2.0 * second)
