"""Config-driven Monte-Carlo experiments with deterministic replay."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .constructions import dft_lowrank, trig_width_report, walsh_lowrank
from .constructions.sparse import sparse_trials
from .metricspace import KYFAN, DomainError, MetricSpec, kyfan_value, lp
from .subspace import HEURISTIC, Subspace, distance, mean_distance, random_subspace
from .systems import (FunctionSystem, RandomVectorModel, gaussian, orthonormal_system,
                      rademacher, random_signs, sample, stream_seed, substream)
from .widths import altmin_lowrank, gluskin_certificate

KINDS = ("L1Rigidity", "L0Rigidity", "RandomMatrixL0", "Lacunary", "GluskinP12", "SparseP",
         "WalshApprox", "DftApprox", "TrigWidth")

REQUIRED = {
    "L1Rigidity": ("N", "n"),
    "L0Rigidity": ("N", "n", "delta"),
    "RandomMatrixL0": ("N", "rank_fraction"),
    "Lacunary": ("lambdas", "N", "n"),
    "GluskinP12": ("N", "n", "p"),
    "SparseP": ("p", "N", "n", "eps"),
    "WalshApprox": ("k", "lam"),
    "DftApprox": ("k", "lam", "s0"),
    "TrigWidth": ("N", "m", "p"),
}

STRATEGIES = ("RandomSubspace", "AltMin", "SVDInit")
LACUNARY_PRIME = 2 ** 61 - 1
SEPARATION_GRID = 257


class ValidationError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    trials: int = 1
    output_path: Optional[str] = None
    threads: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.kind not in KINDS:
            raise ValidationError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        missing = [k for k in REQUIRED[self.kind] if k not in self.params]
        if missing:
            raise ValidationError(f"{self.kind} is missing required parameter(s): {', '.join(missing)}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ValidationError("trials must be a positive integer")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise ValidationError("seed must be an unsigned 64-bit integer")
        if int(self.threads) < 1:
            raise ValidationError("threads must be positive")
        strat = self.params.get("strategy")
        if strat is not None and strat not in STRATEGIES:
            raise ValidationError(f"unknown strategy {strat!r}")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("threads")
        return d

    @classmethod
    def from_dict(cls, d: dict, threads: int = 1) -> "ExperimentConfig":
        reserved = {"kind", "params", "seed", "trials", "output_path", "threads"}
        params = dict(d.get("params", {}))
        params.update({k: v for k, v in d.items() if k not in reserved})
        if "kind" not in d:
            raise ValidationError("configuration needs a 'kind'")
        return cls(d["kind"], params, int(d.get("seed", 0)), int(d.get("trials", 1)),
                   d.get("output_path"), int(d.get("threads", threads))).validate()

    @classmethod
    def from_toml(cls, path, threads: int = 1) -> "ExperimentConfig":
        import tomli

        with open(path, "rb") as fh:
            try:
                d = tomli.load(fh)
            except tomli.TOMLDecodeError as exc:
                raise ValidationError(f"cannot parse {path}: {exc}") from exc
        return cls.from_dict(d, threads)


@dataclass
class RunRecord:
    config: dict
    columns: list
    rows: list
    summary: dict
    wall_clock: float = 0.0
    version: str = __version__

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def write(self, path) -> tuple:
        """Write ``path`` (CSV) and ``path`` with suffix .json (summary)."""
        base, _ = os.path.splitext(str(path))
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())
        jpath = base + ".json"
        with open(jpath, "w") as fh:
            fh.write(self.json_text())
        return str(path), jpath

    def json_text(self) -> str:
        d = {"config": self.config, "summary": self.summary, "columns": self.columns,
             "wall_clock": self.wall_clock, "version": self.version}
        return json.dumps(_jsonable(d), indent=2, sort_keys=True)

    def values(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows], dtype=float)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def summarize(values: Sequence[float]) -> dict:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return {"mean": math.nan, "stderr": math.nan, "min": math.nan, "max": math.nan, "count": 0}
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return {"mean": float(v.mean()), "stderr": se, "min": float(v.min()), "max": float(v.max()),
            "count": int(v.size)}


def _map_trials(fn: Callable[[int], tuple], trials: int, threads: int = 1) -> list:
    """Evaluate fn(t) for t < trials; results come back in trial order."""
    if threads <= 1 or trials <= 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials)))


def _record(cfg: dict, aux_names: Sequence[str], results: list, seed: int, extra: dict,
            started: float) -> RunRecord:
    columns = ["trial", "seed", "value"] + [f"aux{i + 1}" for i in range(len(aux_names))]
    rows = [[t, stream_seed(seed, t), *res] for t, res in enumerate(results)]
    summary = summarize([r[2] for r in rows])
    summary["aux_names"] = list(aux_names)
    summary.update(extra)
    return RunRecord(cfg, columns, rows, summary, time.perf_counter() - started)


# --------------------------------------------------------------------------
# models


def make_model(name: str, N: int) -> RandomVectorModel:
    if name == "rademacher":
        return random_signs(N)
    if name == "gaussian":
        return RandomVectorModel("IndependentComponents", N, laws=[gaussian])
    if name == "symmetric_uniform":
        return RandomVectorModel("IndependentComponents", N,
                                 laws=[lambda rng, size: rng.uniform(-1.0, 1.0, size)])
    raise ValidationError(f"unknown model {name!r}")


def _adversarial_subspace(model, N, n, metric, strategy, seed, train=None, iters=1):
    """Subspace used against fresh draws: Haar (None here), SVD of a training
    batch, or altmin under ``metric`` started from that SVD."""
    if n == 0:
        return Subspace.zero(N)
    if n >= N:
        return Subspace(np.eye(N))
    T = train or N
    data = sample(model, T, seed=stream_seed(seed, 10 ** 6)).T
    U = np.linalg.svd(data, full_matrices=False)[0]
    if strategy == "SVDInit":
        return Subspace.span(U[:, :n])
    approx = altmin_lowrank(data, n, metric, restarts=1, iters=iters, seed=seed)
    Q = Subspace.span(approx.left)
    if Q.dim < n:
        Q = Subspace.span(np.column_stack([Q.basis, U[:, :n]]))
    return Q


# --------------------------------------------------------------------------
# experiments


def l1_rigidity_experiment(model: RandomVectorModel, N: int, n: int, trials: int,
                           strategy: str = "AltMin", seed: int = 0, threads: int = 1,
                           train: Optional[int] = None, iters: int = 1) -> RunRecord:
    """rho(xi, Q_n)_{l_1} / N per fresh draw of xi.

    value: distance to the strategy's subspace; aux1: distance to a fresh Haar
    subspace; aux2: 1 if both solves were certified convex solutions.
    """
    started = time.perf_counter()
    if model.dim != N or not (0 <= n <= N):
        raise DomainError("need model.dim == N and 0 <= n <= N")
    m = lp(1)
    Qs = None if strategy == "RandomSubspace" else _adversarial_subspace(
        model, N, n, m, strategy, seed, train, iters)

    def trial(t):
        xi = model.draw(substream(seed, t))
        Qh = random_subspace(N, n, seed=substream(seed, t, 1))
        rh = distance(xi, Qh, m, seed=t, certificate=False)
        rs = rh if Qs is None else distance(xi, Qs, m, seed=t, certificate=False)
        ok = rh.status != HEURISTIC and rs.status != HEURISTIC
        return rs.value / N, rh.value / N, int(ok)

    res = _map_trials(trial, trials, threads)
    cfg = {"experiment": "l1_rigidity", "N": N, "n": n, "strategy": strategy, "seed": seed,
           "trials": trials, "model": model.kind}
    vals = [r[0] for r in res]
    return _record(cfg, ["haar_value", "certified"], res, seed,
                   {"floor": float(min(vals)), "haar": summarize([r[1] for r in res]),
                    "all_certified": all(r[2] for r in res)}, started)


def l0_rigidity_experiment(model: RandomVectorModel, N: int, n: int, delta: float, trials: int,
                           seed: int = 0, strategy: str = "SVDInit", threads: int = 1,
                           train: Optional[int] = None) -> RunRecord:
    """Ky-Fan distance rho(xi, Q_n)_{L_0^N} per draw, its hit indicator
    {rho <= delta} and the Haar-subspace counterpart.

    The distances are heuristic upper bounds, so hit rates are lower estimates.
    """
    started = time.perf_counter()
    if model.dim != N or not (0 <= n <= N):
        raise DomainError("need model.dim == N and 0 <= n <= N")
    Qs = None if strategy == "RandomSubspace" else _adversarial_subspace(
        model, N, n, KYFAN, strategy, seed, train)

    def trial(t):
        xi = model.draw(substream(seed, t))
        Qh = random_subspace(N, n, seed=substream(seed, t, 1))
        vh = distance(xi, Qh, KYFAN, seed=t).value
        vs = vh if Qs is None else distance(xi, Qs, KYFAN, seed=t).value
        return vs, int(vs <= delta), vh, int(vh <= delta)

    res = _map_trials(trial, trials, threads)
    cfg = {"experiment": "l0_rigidity", "N": N, "n": n, "delta": delta, "strategy": strategy,
           "seed": seed, "trials": trials, "model": model.kind}
    hits = float(np.mean([r[1] for r in res]))
    hits_h = float(np.mean([r[3] for r in res]))
    return _record(cfg, ["hit", "haar_value", "haar_hit"], res, seed,
                   {"hit_rate": hits, "haar_hit_rate": hits_h,
                    "bound": 2 * math.exp(-delta * N), "floor": float(min(r[0] for r in res))},
                   started)


def empirical_l0_separation(samples, grid: int = SEPARATION_GRID) -> tuple:
    """min over c on a uniform grid of the sample range of ||zeta - c||_{L_0}
    under the empirical measure; returns (value, argmin c)."""
    z = np.asarray(samples, dtype=float).ravel()
    if z.size == 0:
        raise DomainError("no samples")
    w = np.full(z.size, 1.0 / z.size)
    cs = np.linspace(z.min(), z.max(), grid)
    vals = [kyfan_value(np.sort(np.abs(z - c))[::-1], w) for c in cs]
    i = int(np.argmin(vals))
    return float(vals[i]), float(cs[i])


def quantile_separation(samples, eps: float, tau: float) -> tuple:
    """(a, b) with P(z <= a) >= eps/3, P(z >= b) >= eps/3, P(a < z < b) <= tau
    and b - a >= tau eps / 2 on the empirical measure of ``samples``."""
    if not (0 < eps <= 1 and 0 < tau <= 1):
        raise DomainError("need eps, tau in (0, 1]")
    z = np.sort(np.asarray(samples, dtype=float).ravel())
    n = z.size
    sep, _ = empirical_l0_separation(z)
    if sep < eps:
        raise DomainError(f"separation hypothesis fails: inf_c ||z - c||_L0 ~ {sep:.6g} < {eps}")
    need = eps / 3
    # q_- : smallest sample value with F(x) >= eps/3; q_+ symmetric from above
    i_lo = max(math.ceil(need * n - 1e-12), 1) - 1
    q_lo = z[i_lo]
    q_hi = z[n - 1 - i_lo]
    k = math.ceil(1 / tau - 1e-12)
    edges = np.linspace(q_lo, q_hi, k + 1)
    mass = [int(np.sum((z > edges[j]) & (z < edges[j + 1]))) for j in range(k)]
    centre = (k - 1) / 2
    j = min(range(k), key=lambda j: (mass[j], abs(j - centre), j))
    a, b = float(edges[j]), float(edges[j + 1])
    checks = (np.sum(z <= a) >= need * n, np.sum(z >= b) >= need * n,
              np.sum((z > a) & (z < b)) <= tau * n, b - a >= tau * eps / 2)
    if not all(checks):
        raise DomainError(f"separation clauses fail on the empirical measure: {checks}")
    return a, b


def random_matrix_l0_experiment(N: int, rank_fraction: float, trials: int, seed: int = 0,
                                threads: int = 1, restarts: int = 2, iters: int = 10,
                                hamming: bool = False) -> RunRecord:
    """Achieved L_0 (Ky-Fan) errors of rank <= cN approximations of random sign
    matrices (upper bounds on the minimum).  With ``hamming`` the Hamming
    altmin (much slower) also runs; otherwise that column is NaN."""
    started = time.perf_counter()
    n = int(round(rank_fraction * N))
    if not (0 <= n <= N):
        raise DomainError("rank fraction must lie in [0, 1]")
    ham = MetricSpec("Hamming", zero_threshold=1e-9)

    def trial(t):
        E = rademacher(substream(seed, t), (N, N))
        a = altmin_lowrank(E, n, KYFAN, restarts=restarts, iters=iters, seed=t)
        if not hamming:
            return a.error, math.nan
        h = altmin_lowrank(E, n, ham, restarts=1, iters=min(iters, 3), seed=t, local_search=False)
        return a.error, h.error

    res = _map_trials(trial, trials, threads)
    cfg = {"experiment": "random_matrix_l0", "N": N, "rank_fraction": rank_fraction, "n": n,
           "seed": seed, "trials": trials}
    return _record(cfg, ["hamming_error"], res, seed,
                   {"floor": float(min(r[0] for r in res)),
                    "hamming_floor": float(min(r[1] for r in res))}, started)


PROFILES = {
    "cos": lambda u: np.cos(2 * np.pi * u),
    "sin": lambda u: np.sin(2 * np.pi * u),
    "sign": lambda u: np.where(np.cos(2 * np.pi * u) >= 0, 1.0, -1.0),
    "sawtooth": lambda u: u - 0.5,
}


def lacunary_random_points(profile: str, lam: float, N: int, points: int, seed: int) -> FunctionSystem:
    """phi(k_j x) at random x = a / P with P = 2^61 - 1, phases reduced exactly."""
    from .systems import lacunary_frequencies

    if profile not in PROFILES:
        raise ValidationError(f"unknown profile {profile!r}")
    ks = lacunary_frequencies(lam, N)
    a = substream(seed, 7).integers(0, LACUNARY_PRIME, points, dtype=np.int64)
    S = np.empty((points, N))
    for j, k in enumerate(ks):
        frac = np.array([(k * int(v)) % LACUNARY_PRIME for v in a], dtype=float) / LACUNARY_PRIME
        S[:, j] = PROFILES[profile](frac)
    return FunctionSystem(S, labels=[f"phi({k}x)" for k in ks],
                          grid={"domain": "torus-random", "points": points, "frequencies": ks})


def lacunary_experiment(profile: str, lambdas: Sequence[float], N: int, n: int, metric: MetricSpec,
                        trials: int, seed: int = 0, points: int = 256, strategy: str = "AltMin",
                        threads: int = 1) -> RunRecord:
    """Average distance of lacunary dilates to n-dimensional subspaces of L(T).

    Rows are (lambda, trial) pairs in lambda-major order; value is the
    strategy-subspace mean distance, aux1 the lambda index, aux2 lambda, aux3
    the Haar mean distance.
    """
    started = time.perf_counter()
    if not (0 <= n <= N):
        raise DomainError("need 0 <= n <= N")
    fm = lp(1) if metric.kind == "KyFanL0" else metric
    jobs = [(li, lam, t) for li, lam in enumerate(lambdas) for t in range(trials)]

    def job(i):
        li, lam, t = jobs[i]
        X = lacunary_random_points(profile, lam, N, points, stream_seed(seed, li, t))
        M = X.num_points
        Qh = random_subspace(M, n, seed=substream(seed, li, t, 1))
        vh, _ = mean_distance(X, Qh, metric, seed=t)
        if n == 0:
            Qs = Subspace.zero(M)
        elif strategy == "RandomSubspace":
            Qs = Qh
        elif n >= N:
            Qs = Subspace.span(X.samples)
        else:
            A = X.samples
            if strategy == "SVDInit":
                Qs = Subspace.span(np.linalg.svd(A, full_matrices=False)[0][:, :n])
            else:
                Qs = Subspace.span(altmin_lowrank(A, n, fm, restarts=1, iters=2, seed=t).left)
        vs, _ = mean_distance(X, Qs, metric, seed=t)
        return vs, li, float(lam), vh

    res = _map_trials(job, len(jobs), threads)
    rows_res = [(r[0], r[1], r[2], r[3]) for r in res]
    cfg = {"experiment": "lacunary", "profile": profile, "lambdas": list(lambdas), "N": N, "n": n,
           "metric": metric.label(), "seed": seed, "trials": trials, "points": points,
           "strategy": strategy}
    by_lam = {str(lam): summarize([r[0] for r in res if r[1] == li])
              for li, lam in enumerate(lambdas)}
    record = _record(cfg, ["lambda_index", "lambda", "haar_value"], rows_res, seed,
                     {"per_lambda": by_lam}, started)
    # rows are keyed by job index; keep the trial column meaningful
    for row, (li, lam, t) in zip(record.rows, jobs):
        row[0] = t
        row[1] = stream_seed(seed, li, t)
    return record


def gluskin_experiment(source: str, p: float, N: int, n: int, trials: int, seed: int = 0,
                       threads: int = 1, with_distance: bool = True) -> RunRecord:
    """Normalized certificates <xi, P xi> / ||P xi||_{p'} / N^(1/p) for fresh
    draws and Haar subspaces; aux1 is the convex l_p distance, same scaling."""
    started = time.perf_counter()
    if source == "orthonormal":
        sysm = orthonormal_system(N, N, seed=stream_seed(seed, 99))
        model = RandomVectorModel("UniformFromColumns", N,
                                  system=FunctionSystem(sysm.samples.T.copy()))
    else:
        model = make_model(source, N)
    scale = N ** (1.0 / p)

    def trial(t):
        xi = model.draw(substream(seed, t))
        Q = random_subspace(N, n, seed=substream(seed, t, 1))
        c = gluskin_certificate(xi, Q, p) / scale
        d = distance(xi, Q, lp(p), seed=t, certificate=False).value / scale if with_distance else math.nan
        return c, d

    res = _map_trials(trial, trials, threads)
    vals = np.array([r[0] for r in res])
    cfg = {"experiment": "gluskin", "source": source, "p": p, "N": N, "n": n, "seed": seed,
           "trials": trials}
    q = {f"q{int(100 * a)}": float(np.quantile(vals, a)) for a in (0.1, 0.25, 0.5, 0.75, 0.9)}
    sound = all(r[0] <= r[1] + 1e-6 for r in res) if with_distance else None
    return _record(cfg, ["distance"], res, seed, {"quantiles": q, "sound": sound}, started)


# --------------------------------------------------------------------------
# dispatch


def _metric(name: str) -> MetricSpec:
    try:
        return MetricSpec.parse(name)
    except DomainError as exc:
        raise ValidationError(str(exc)) from exc


def run(config: ExperimentConfig) -> RunRecord:
    cfg = config.validate()
    P, s, T, th = cfg.params, int(cfg.seed), cfg.trials, int(cfg.threads)
    started = time.perf_counter()
    try:
        if cfg.kind == "L1Rigidity":
            N = int(P["N"])
            rec = l1_rigidity_experiment(make_model(P.get("model", "rademacher"), N), N, int(P["n"]), T,
                                         P.get("strategy", "AltMin"), s, th, P.get("train"),
                                         int(P.get("iters", 1)))
        elif cfg.kind == "L0Rigidity":
            N = int(P["N"])
            rec = l0_rigidity_experiment(make_model(P.get("model", "rademacher"), N), N, int(P["n"]),
                                         float(P["delta"]), T, s, P.get("strategy", "SVDInit"), th,
                                         P.get("train"))
        elif cfg.kind == "RandomMatrixL0":
            rec = random_matrix_l0_experiment(int(P["N"]), float(P["rank_fraction"]), T, s, th,
                                              int(P.get("restarts", 2)), int(P.get("iters", 10)),
                                              bool(P.get("hamming", False)))
        elif cfg.kind == "Lacunary":
            lams = P["lambdas"]
            lams = [float(v) for v in (lams if isinstance(lams, (list, tuple)) else [lams])]
            rec = lacunary_experiment(P.get("profile", "cos"), lams, int(P["N"]), int(P["n"]),
                                      _metric(P.get("metric", "L1")), T, s, int(P.get("points", 256)),
                                      P.get("strategy", "AltMin"), th)
        elif cfg.kind == "GluskinP12":
            rec = gluskin_experiment(P.get("source", "rademacher"), float(P["p"]), int(P["N"]),
                                     int(P["n"]), T, s, th, bool(P.get("with_distance", True)))
        elif cfg.kind == "SparseP":
            rec = _sparse_record(P, T, s, th, started)
        elif cfg.kind in ("WalshApprox", "DftApprox"):
            rec = _construction_record(cfg.kind, P, s, started)
        else:
            rec = _trig_record(P, s, started)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"bad parameter for {cfg.kind}: {exc}") from exc
    rec.config = {"resolved": rec.config, **cfg.to_dict()}
    return rec


def _sparse_record(P, trials, seed, threads, started):
    p, N, eps = float(P["p"]), int(P["N"]), float(P["eps"])
    n = P["n"]
    n = int(round(N ** float(n[1:]))) if isinstance(n, str) and n.startswith("^") else int(n)
    vals, comp, rep = sparse_trials(p, N, n, eps, trials, seed, threads)
    res = [(v, c) for v, c in zip(vals, comp)]
    cfg = {"experiment": "sparse_nonrigidity", "p": p, "N": N, "n": n, "eps": eps, "seed": seed,
           "trials": trials}
    return _record(cfg, ["event"], res, seed, {"report": rep.to_dict()}, started)


def _construction_record(kind, P, seed, started):
    mode = P.get("mode", "sample")
    count = int(P.get("count", 10 ** 6))
    if kind == "WalshApprox":
        _, rep = walsh_lowrank(int(P["k"]), float(P["lam"]), mode, count, seed)
    else:
        _, rep = dft_lowrank(int(P["k"]), float(P["lam"]), int(P["s0"]), mode, count, seed)
    res = [(rep.measured, rep.predicted, rep.stderr, rep.rank_measured)]
    return _record({"experiment": rep.name, **rep.params}, ["predicted", "stderr", "rank_measured"],
                   res, seed, {"report": rep.to_dict()}, started)


def _trig_record(P, seed, started):
    ms = P["m"] if isinstance(P["m"], (list, tuple)) else [P["m"]]
    N, p = int(P["N"]), float(P["p"])
    res, reps = [], []
    for m in ms:
        rep = trig_width_report(N, int(m), p, seed)
        reps.append(rep.to_dict())
        res.append((rep.measured, int(m), rep.rank_measured, rep.extra["tau"]))
    return _record({"experiment": "trig_width", "N": N, "m": list(ms), "p": p},
                   ["m", "lambda_size", "tau"], res, seed, {"reports": reps}, started)


def replay(record: RunRecord, threads: int = 1) -> RunRecord:
    """Re-run the configuration echoed in ``record``."""
    cfg = dict(record.config)
    cfg.pop("resolved", None)
    return run(ExperimentConfig.from_dict(cfg, threads))


def write_config(cfg: ExperimentConfig, path) -> None:
    """Flat TOML: scalar keys at top level, params in a [params] table."""
    lines = [f"kind = {json.dumps(cfg.kind)}", f"seed = {int(cfg.seed)}", f"trials = {int(cfg.trials)}"]
    if cfg.output_path:
        lines.append(f"output_path = {json.dumps(str(cfg.output_path))}")
    lines.append("")
    lines.append("[params]")
    for k, v in cfg.params.items():
        lines.append(f"{k} = {_toml_value(v)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return json.dumps(str(v))
