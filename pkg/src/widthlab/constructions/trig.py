"""Trigonometric approximation with sparse spectrum: Fejer kernels and
step-cover sets Lambda in Z_N."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ..metricspace import DomainError
from ..systems import substream
from .report import Report

LAMBDA_SET_C = 16


@dataclass
class TrigPolynomial:
    """sum_j c_j e(j x / N) for |j| <= m, stored by frequency."""

    coefficients: Dict[int, complex]

    def __post_init__(self):
        self.coefficients = {int(j): c for j, c in self.coefficients.items() if c != 0}

    @property
    def m(self) -> int:
        return max((abs(j) for j in self.coefficients), default=0)

    @property
    def c0(self):
        return self.coefficients.get(0, 0)

    def values(self, N: int, h: int = 1) -> np.ndarray:
        """T(h x) at x = 0..N-1; phases are reduced as exact integers mod N."""
        x = np.arange(N, dtype=np.int64)
        out = np.zeros(N, dtype=complex)
        for j, c in sorted(self.coefficients.items()):
            idx = (j * h * x) % N
            out += c * np.exp(2j * np.pi * idx / N)
        return out

    def norm(self, N: int, p: float, h: int = 1) -> float:
        return lp_norm(self.values(N, h), p)


def lp_norm(values: np.ndarray, p: float) -> float:
    """(N^-1 sum |f|^p)^(1/p), summed with fsum."""
    a = np.abs(values)
    if math.isinf(p):
        return float(a.max())
    return (math.fsum((a ** p).tolist()) / a.size) ** (1.0 / p)


def fejer_coefficients(m: int) -> TrigPolynomial:
    if m < 1:
        raise DomainError("m >= 1 required")
    return TrigPolynomial({j: 1 - abs(j) / m for j in range(-(m - 1), m)})


def fejer_values(m: int, x: np.ndarray) -> np.ndarray:
    """(1/m) (sin(pi m x) / sin(pi x))^2, with value m at integers."""
    x = np.asarray(x, dtype=float)
    d = np.abs(x - np.round(x))
    out = np.full(d.shape, float(m))
    nz = d > 0
    out[nz] = np.sin(np.pi * m * d[nz]) ** 2 / (m * np.sin(np.pi * d[nz]) ** 2)
    return out


def fejer_kernel(m: int, M_points: Optional[int] = None):
    """K_{m-1}: coefficients 1 - |j|/m for |j| < m and its samples on j/M_points."""
    if M_points is None:
        M_points = 8 * m
    if M_points < 8 * m:
        raise DomainError("need M_points >= 8 m")
    T = fejer_coefficients(m)
    grid = np.arange(M_points) / M_points
    return T, fejer_values(m, grid)


def fejer_pointwise_bound(m: int, x: np.ndarray) -> np.ndarray:
    """min(m, 1 / (4 m |x|^2)) with |x| the distance to the nearest integer."""
    d = np.abs(np.asarray(x, dtype=float) - np.round(x))
    with np.errstate(divide="ignore"):
        return np.minimum(float(m), 1.0 / (4 * m * d ** 2))


@dataclass
class StepCoverSet:
    lambda_set: np.ndarray
    m: int
    witness: np.ndarray
    tau: float
    N: int
    S: float
    continuous: bool = False
    attempts: int = 1
    domain: np.ndarray = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return int(self.lambda_set.size)

    @property
    def size_bound(self) -> float:
        """3 tau times the size of the sampled universe (N for Z_N, 4N+1 on the torus)."""
        return 3 * self.tau * (4 * self.N + 1 if self.continuous else self.N)

    def step(self, k: int) -> int:
        i = int(k) % self.N if not self.continuous else int(k) + self.N
        return int(self.witness[i])

    def verify(self) -> bool:
        """Independent scalar re-check of every witness."""
        members = set(int(v) for v in self.lambda_set)
        for i, k in enumerate(self.domain):
            h = int(self.witness[i])
            if h == 0:
                return False
            if self.continuous:
                if not _is_prime(h):
                    return False
                prog = [int(k) + s * l * h for l in range(1, self.m + 1) for s in (1, -1)]
            else:
                if math.gcd(h, self.N) != 1:
                    return False
                prog = [(int(k) + s * l * h) % self.N for l in range(1, self.m + 1) for s in (1, -1)]
            if any(v not in members for v in prog):
                return False
        return True


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, int(math.isqrt(n)) + 1))


def lambda_set_params(N: int, m: int, continuous: bool = False) -> tuple:
    """(S, tau) with S = N / (m^3 ln N) (N / (m ln N) for the torus) and
    tau = min(1, (ln(4N) / S)^(1/(2m)))."""
    S = N / ((m if continuous else m ** 3) * math.log(N))
    tau = min(1.0, (math.log(4 * N) / S) ** (1.0 / (2 * m)))
    return S, tau


def _scan_witnesses(inset: np.ndarray, ks: np.ndarray, steps: np.ndarray, m: int, N: int,
                    offset: int, modular: bool) -> np.ndarray:
    wit = np.zeros(ks.size, dtype=np.int64)
    todo = np.ones(ks.size, dtype=bool)
    for h in steps:
        if not todo.any():
            break
        kk = ks[todo]
        ok = np.ones(kk.size, dtype=bool)
        for l in range(1, m + 1):
            for s in (1, -1):
                v = kk + s * l * int(h)
                if modular:
                    ok &= inset[v % N]
                else:
                    ok &= inset[v + offset]
        idx = np.flatnonzero(todo)[ok]
        wit[idx] = h
        todo[idx] = False
    return wit


def lambda_set(N: int, m: int, seed: int = 0, max_retries: int = 20, continuous: bool = False,
               strict: bool = False) -> StepCoverSet:
    """Random Lambda with inclusion probability tau, kept only if every k has
    an admissible step and |Lambda| <= 3 tau N.

    Discrete case: Lambda in Z_N, steps in Z_N^*.  Continuous case: Lambda in
    {-2N..2N}, k in {-N..N}, prime steps in (m, N/m].
    """
    if N < 2 or m < 1:
        raise DomainError("need N >= 2 and m >= 1")
    if strict and N < LAMBDA_SET_C * m ** 4:
        raise DomainError(f"need N >= {LAMBDA_SET_C} m^4")
    S, tau = lambda_set_params(N, m, continuous)
    if continuous:
        steps = np.array([h for h in range(m + 1, N // m + 1) if _is_prime(h)], dtype=np.int64)
        ks = np.arange(-N, N + 1, dtype=np.int64)
        universe = np.arange(-2 * N, 2 * N + 1, dtype=np.int64)
    else:
        steps = np.array([h for h in range(1, N) if math.gcd(h, N) == 1], dtype=np.int64)
        ks = np.arange(N, dtype=np.int64)
        universe = ks
    failures = []
    for attempt in range(1, max_retries + 1):
        rng = substream(seed, attempt)
        inset = rng.random(universe.size) < tau
        if continuous:
            # progressions from |k| <= N with h <= N/m stay inside [-2N, 2N]
            wit = _scan_witnesses(inset, ks, steps, m, N, 2 * N, modular=False)
        else:
            wit = _scan_witnesses(inset, ks, steps, m, N, 0, modular=True)
        bad = int(np.sum(wit == 0))
        size = int(inset.sum())
        if bad == 0 and size <= 3 * tau * universe.size:
            cover = StepCoverSet(universe[inset], m, wit, tau, N, S, continuous, attempt, ks)
            return cover
        failures.append((bad, size))
    raise RuntimeError(f"no admissible Lambda after {max_retries} attempts; "
                       f"(bad k, |Lambda|) per attempt: {failures}")


def trig_approx(k: int, cover: StepCoverSet, T: TrigPolynomial, N: int, p: float) -> dict:
    """t(x) = e(kx/N) T(hx) with h the witness step of k.

    ``error`` is ||t||, the distance from e(k./N) to the approximant t - e(k./N),
    whose spectrum lies in Lambda.  ``correction`` is ||t - e(k./N)||.
    """
    if cover.continuous or cover.N != N:
        raise DomainError("need a discrete cover of Z_N")
    if T.c0 != 1:
        raise DomainError("T must have constant coefficient 1")
    h = cover.step(k) if T.m > 0 else 1
    if math.gcd(h, N) != 1:
        raise DomainError("step must be a unit of Z_N")
    members = set(int(v) for v in cover.lambda_set)
    spectrum = sorted({(k + l * h) % N for l, c in T.coefficients.items() if l != 0})
    if T.m > cover.m or any(s not in members for s in spectrum):
        raise AssertionError("approximant spectrum leaves {k} and Lambda")
    x = np.arange(N, dtype=np.int64)
    ek = np.exp(2j * np.pi * ((k * x) % N) / N)
    t = np.zeros(N, dtype=complex)
    for l, c in sorted(T.coefficients.items()):
        t += c * np.exp(2j * np.pi * (((k + l * h) * x) % N) / N)
    error = lp_norm(t, p)
    lhs, rhs = T.norm(N, p, h), T.norm(N, p)
    gap = abs(lhs - rhs)
    if gap > 1e-12 * max(rhs, 1.0):
        raise AssertionError(f"substitution identity off by {gap}")
    return {"k": k, "h": h, "error": error, "correction": lp_norm(t - ek, p),
            "identity_gap": gap, "spectrum": spectrum, "approximant": t}


def trig_width_report(N: int, m: int, p: float, seed: int = 0, ks=None) -> Report:
    """Worst approximation error over ks (default all of Z_N) with the Fejer kernel."""
    cover = lambda_set(N, m, seed)
    T = fejer_coefficients(m)
    ks = range(N) if ks is None else ks
    errs = [trig_approx(k, cover, T, N, p)["error"] for k in ks]
    return Report("trig_width", {"N": N, "m": m, "p": p, "seed": seed},
                  predicted=None, measured=max(errs), stderr=None,
                  rank_bound=int(3 * cover.tau * N), rank_measured=cover.size,
                  extra={"tau": cover.tau, "S": cover.S, "attempts": cover.attempts,
                         "kernel_norm": T.norm(N, p)})
