"""Function systems sampled on finite grids, random vector models, and the
WLAB1 matrix file format."""
from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .metricspace import DomainError, check_weights

MAX_ENTRIES = 2 ** 26
WALSH_MAX_K = 26


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based generator for the substream addressed by ``keys``.

    Streams depend only on (seed, keys), so work split across any number of
    workers draws exactly the numbers a serial run would.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def stream_seed(seed: int, *keys: int) -> int:
    """A 64-bit integer identifying a substream (for logging)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class FunctionSystem:
    """N functions sampled at M points: ``samples[i, k] = phi_k(point_i)``."""

    samples: np.ndarray
    weights: Optional[np.ndarray] = None
    labels: Optional[list] = None
    grid: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.samples.ndim != 2:
            raise DomainError("samples must be an M x N matrix")
        M, N = self.samples.shape
        if self.weights is None:
            self.weights = np.full(M, 1.0 / M)
        else:
            self.weights = check_weights(self.weights, M)
        if not np.all(np.isfinite(self.samples)):
            raise DomainError("samples must be finite")
        if self.labels is None:
            self.labels = [f"phi_{k}" for k in range(N)]
        elif len(self.labels) != N:
            raise DomainError("one label per column required")

    @property
    def num_points(self) -> int:
        return self.samples.shape[0]

    @property
    def num_functions(self) -> int:
        return self.samples.shape[1]

    def weighted_samples(self) -> np.ndarray:
        """Rows scaled by sqrt(weight): the L_2(mu) -> l_2 isometry."""
        return self.samples * np.sqrt(self.weights)[:, None]

    def gram(self) -> np.ndarray:
        S = self.weighted_samples()
        return S.conj().T @ S


def _guard(rows: int, cols: int):
    if rows * cols > MAX_ENTRIES:
        raise DomainError(f"{rows}x{cols} exceeds the materialization guard of 2^26 entries")


def _popcount(a: np.ndarray) -> np.ndarray:
    a = a.astype(np.uint64)
    c = np.zeros(a.shape, dtype=np.uint8)
    while np.any(a):
        c += (a & np.uint64(1)).astype(np.uint8)
        a = a >> np.uint64(1)
    return c


def popcount(a):
    """Population count, elementwise for arrays."""
    if np.isscalar(a):
        return bin(int(a)).count("1")
    return _popcount(np.asarray(a))


def walsh_system(k: int) -> FunctionSystem:
    """Characters W_x(y) = (-1)^<x,y> of Z_2^k.

    Column x is the Walsh function w_x in the Paley numeration; row y is the
    group element y, i.e. the dyadic point t = sum_j y_j 2^-j.
    """
    if not (1 <= k <= WALSH_MAX_K):
        raise DomainError(f"k must be in [1, {WALSH_MAX_K}]")
    size = 2 ** k
    _guard(size, size)
    idx = np.arange(size, dtype=np.uint64)
    parity = _popcount(idx[:, None] & idx[None, :]) & 1
    W = (1 - 2 * parity.astype(np.int8)).astype(np.int8)
    t = np.array([_bitrev(y, k) for y in range(size)]) / size
    return FunctionSystem(W, labels=[f"w_{x}" for x in range(size)],
                          grid={"domain": "Z_2^k", "k": k, "points": t.tolist()})


def _bitrev(y: int, k: int) -> int:
    return int(format(y, f"0{k}b")[::-1], 2) if k else 0


def walsh_entry(k: int, x: int, y: int) -> int:
    if not (0 <= x < 2 ** k and 0 <= y < 2 ** k):
        raise DomainError("index out of range")
    return -1 if bin(x & y).count("1") & 1 else 1


def dft_entry(N: int, x: int, y: int) -> complex:
    if not (0 <= x < N and 0 <= y < N):
        raise DomainError("index out of range")
    return complex(np.exp(2j * np.pi * ((x * y) % N) / N))


def dft_system(N: int) -> FunctionSystem:
    """Discrete Fourier characters y -> e(xy/N); column x, row y."""
    if N < 1:
        raise DomainError("N must be positive")
    _guard(N, N)
    idx = np.arange(N)
    F = np.exp(2j * np.pi * (np.outer(idx, idx) % N) / N)
    return FunctionSystem(F, labels=[f"e_{x}" for x in range(N)],
                          grid={"domain": "Z_N", "N": N})


def trig_grid_system(n_freq: int, m_points: int) -> FunctionSystem:
    """Harmonics e(kx), k = -n_freq..n_freq, at x_j = j/m_points."""
    if n_freq < 0 or m_points < 4 * n_freq + 1:
        raise DomainError("need m_points >= 4*n_freq + 1")
    _guard(m_points, 2 * n_freq + 1)
    x = np.arange(m_points) / m_points
    ks = np.arange(-n_freq, n_freq + 1)
    E = np.exp(2j * np.pi * np.outer(x, ks))
    return FunctionSystem(E, labels=[f"e({k}x)" for k in ks],
                          grid={"domain": "torus", "points": m_points, "frequencies": ks.tolist()})


def lacunary_frequencies(lam: float, count: int) -> list:
    """Greedy minimal lambda-lacunary sequence starting at 1."""
    if not lam > 1:
        raise DomainError("lacunarity must exceed 1")
    ks = [1]
    while len(ks) < count:
        nxt = max(ks[-1] + 1, math.ceil(lam * ks[-1] - 1e-12))
        ks.append(nxt)
    return ks[:count]


def lacunary_system(profile, lam: float, count: int, m_points: Optional[int] = None) -> FunctionSystem:
    """Dilates phi(k_j x) of a 1-periodic profile on a uniform torus grid.

    ``profile`` is either the samples of phi on the grid j/M or a callable.
    """
    ks = lacunary_frequencies(lam, count)
    if callable(profile):
        if m_points is None:
            raise DomainError("m_points required for a callable profile")
        M = m_points
        base = np.asarray(profile(np.arange(M) / M), dtype=float)
    else:
        base = np.asarray(profile, dtype=float).ravel()
        M = base.size
    if ks[-1] > M // 4:
        raise DomainError(f"grid of {M} points too coarse for frequency {ks[-1]} (need k_N <= M/4)")
    _guard(M, count)
    idx = np.arange(M)
    S = np.column_stack([base[(k * idx) % M] for k in ks])
    return FunctionSystem(S, labels=[f"phi({k}x)" for k in ks],
                          grid={"domain": "torus", "points": M, "frequencies": ks, "lambda": lam})


def orthonormal_system(m_points: int, n_funcs: int, seed=0) -> FunctionSystem:
    """Orthonormalized Gaussian columns, orthonormal in L_2 of the uniform
    probability measure on ``m_points`` points."""
    if n_funcs > m_points:
        raise DomainError("cannot fit more orthonormal functions than points")
    rng = substream(seed, 0)
    Qm, R = np.linalg.qr(rng.standard_normal((m_points, n_funcs)))
    Qm = Qm * np.sign(np.diag(R))
    return FunctionSystem(math.sqrt(m_points) * Qm, grid={"domain": "points", "points": m_points})


# --------------------------------------------------------------------------
# random vector models


def rademacher(rng, size):
    return rng.choice(np.array([-1.0, 1.0]), size=size)


def gaussian(rng, size):
    return rng.standard_normal(size)


def point_mass(value: float = 0.0):
    def law(rng, size):
        return np.full(size, float(value))
    law.name = f"point({value})"
    return law


def uniform(a: float = 0.0, b: float = 1.0):
    def law(rng, size):
        return rng.uniform(a, b, size)
    law.name = f"uniform({a},{b})"
    return law


rademacher.name = "rademacher"
gaussian.name = "gaussian"


@dataclass
class RandomVectorModel:
    kind: str
    dim: int
    laws: Sequence[Callable] = ()
    eps: Optional[float] = None
    p: Optional[float] = None
    system: Optional[FunctionSystem] = None

    KINDS = ("IndependentComponents", "RandomSigns", "SparseThreePoint", "UniformFromColumns")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise DomainError(f"unknown model kind {self.kind!r}")
        if self.kind == "IndependentComponents":
            if len(self.laws) == 1:
                self.laws = list(self.laws) * self.dim
            if len(self.laws) != self.dim:
                raise DomainError("one law per coordinate required")
        if self.kind == "SparseThreePoint":
            if self.eps is None or self.p is None or not (0 <= self.eps <= 1) or self.p <= 0:
                raise DomainError("SparseThreePoint needs 0 <= eps <= 1 and p > 0")
        if self.kind == "UniformFromColumns":
            if self.system is None or self.system.num_functions != self.dim:
                raise DomainError("UniformFromColumns needs a system with dim functions")

    @property
    def K(self) -> float:
        """Atom location with eps * K^p = 1 (E|xi_1|^p = 1)."""
        if self.kind != "SparseThreePoint":
            raise DomainError("K is defined for SparseThreePoint only")
        return math.inf if self.eps == 0 else self.eps ** (-1.0 / self.p)

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        N = self.dim
        if self.kind == "RandomSigns":
            return rademacher(rng, N)
        if self.kind == "IndependentComponents":
            return np.array([float(law(rng, 1)[0]) for law in self.laws])
        if self.kind == "SparseThreePoint":
            u = rng.random(N)
            s = rademacher(rng, N)
            if self.eps == 0:
                return np.zeros(N)
            return np.where(u < self.eps, s * self.K, 0.0)
        i = rng.choice(self.system.num_points, p=self.system.weights)
        return np.asarray(self.system.samples[i], dtype=float)


def random_signs(N: int) -> RandomVectorModel:
    return RandomVectorModel("RandomSigns", N)


def sparse_three_point(N: int, eps: float, p: float) -> RandomVectorModel:
    return RandomVectorModel("SparseThreePoint", N, eps=eps, p=p)


def sample(model: RandomVectorModel, trials: int, seed=0) -> np.ndarray:
    """trials x N realizations; row t comes from substream (seed, t)."""
    if trials < 0:
        raise DomainError("trials must be nonnegative")
    out = np.empty((trials, model.dim))
    for t in range(trials):
        out[t] = model.draw(substream(seed, t))
    return out


def piecewise_constant_random_system(N: int, delta: float, seed=0) -> FunctionSystem:
    """N random step functions on (0,1): phi_k = delta * eps_{k,j} on ((j-1)/N, j/N)."""
    if N < 1 or not delta > 0:
        raise DomainError("need N >= 1 and delta > 0")
    signs = np.empty((N, N))
    for k in range(N):
        signs[:, k] = rademacher(substream(seed, k), N)
    return FunctionSystem(delta * signs, grid={"domain": "D_N(0,1)", "N": N})


def orthonormal_completion(phi: FunctionSystem) -> FunctionSystem:
    """Extend a system on (0,1) with ||G|| <= 1 to an orthonormal system on (0,2).

    The extension on (1,2) is a step function system Psi in D_N(1,2) with Gram
    I - G.  The result is orthonormal in L_2 of the uniform probability on
    (0,2); its samples on (0,1) are phi scaled by sqrt(2) to account for the
    halved measure of that interval.
    """
    G = phi.gram().real if not np.iscomplexobj(phi.samples) else phi.gram()
    N = phi.num_functions
    G = (G + G.conj().T) / 2
    evals, evecs = np.linalg.eigh(np.eye(N) - G)
    if evals.min() < -1e-12:
        raise DomainError(
            f"completion infeasible: spectral norm of the Gram matrix is {1 - evals.min():.6g} > 1 "
            "(need max_|a|=1 ||sum a_k phi_k||_2 <= 1)")
    evals = np.clip(evals, 0.0, None)
    root = (evecs * np.sqrt(evals)) @ evecs.conj().T
    psi = math.sqrt(N) * root
    samples = math.sqrt(2.0) * np.vstack([phi.samples, psi])
    weights = np.concatenate([phi.weights / 2, np.full(N, 0.5 / N)])
    weights = weights / weights.sum()
    return FunctionSystem(samples, weights, labels=list(phi.labels),
                          grid={"domain": "(0,2)", "top": phi.num_points, "bottom": N})


def power_iteration_norm(A: np.ndarray, iters: int = 200, seed=0) -> float:
    """Spectral norm estimate by power iteration on A^T A."""
    rng = substream(seed, 0)
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    s = 0.0
    for _ in range(iters):
        u = A @ v
        v = A.conj().T @ u
        nv = np.linalg.norm(v)
        if nv == 0:
            return 0.0
        v /= nv
        s = math.sqrt(nv)
    return s


# --------------------------------------------------------------------------
# WLAB1 matrix files

MAGIC = b"WLAB1"
_DTYPES = {"f64": ("<f8", 0), "c128": ("<c16", 1), "i8": ("i1", 2)}
_CODES = {v[1]: k for k, v in _DTYPES.items()}
_HEADER = struct.Struct("<5sBQQ")


def _tag_for(A: np.ndarray) -> str:
    if np.iscomplexobj(A):
        return "c128"
    if A.dtype.kind in "iu" and A.size and A.min() >= -128 and A.max() <= 127:
        return "i8"
    return "f64"


def write_matrix(path, A, dtype: Optional[str] = None) -> None:
    """Header: magic 'WLAB1', u8 dtype code (0 f64, 1 c128, 2 i8), u64 rows,
    u64 cols, all little-endian; then the row-major payload."""
    A = np.asarray(A)
    if A.ndim != 2:
        raise DomainError("only 2-D matrices can be written")
    tag = dtype or _tag_for(A)
    np_dtype, code = _DTYPES[tag]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, code, A.shape[0], A.shape[1]))
        fh.write(np.ascontiguousarray(A, dtype=np_dtype).tobytes(order="C"))


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise DomainError("truncated WLAB1 header")
        magic, code, rows, cols = _HEADER.unpack(head)
        if magic != MAGIC:
            raise DomainError("not a WLAB1 file")
        if code not in _CODES:
            raise DomainError(f"unknown dtype code {code}")
        np_dtype = _DTYPES[_CODES[code]][0]
        payload = fh.read()
    expected = rows * cols * np.dtype(np_dtype).itemsize
    if len(payload) != expected:
        raise DomainError(f"payload has {len(payload)} bytes, expected {expected}")
    return np.frombuffer(payload, dtype=np_dtype).reshape(rows, cols).copy()


def write_csv(path, A) -> None:
    A = np.asarray(A)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in A:
            w.writerow([repr(complex(v)) if np.iscomplexobj(A) else repr(v.item()) for v in row])


def load_system(path) -> FunctionSystem:
    return FunctionSystem(read_matrix(path))
