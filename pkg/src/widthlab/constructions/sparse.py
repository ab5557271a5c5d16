"""Monte-Carlo probe of L_p non-rigidity (p > 2) for sparse three-point variables."""
from __future__ import annotations

import math

import numpy as np

from ..metricspace import LINF, DomainError
from ..subspace import distance, random_subspace
from ..systems import sparse_three_point, substream
from .report import Report


def sparse_trials(p: float, N: int, n: int, eps: float, trials: int = 2000, seed: int = 0,
                  threads: int = 1):
    """Per-trial values (1/N) sum_i |xi_i - eta_i|^p, event codes (number of
    nonzero coordinates capped at 2) and the summary report.

    eta = 0 unless exactly one coordinate of xi is nonzero; then eta is the
    best l_inf approximation of xi from a Haar random Q_n.  By symmetry the
    coordinate average has mean E|xi_1 - eta_1|^p.
    """
    if not p > 2:
        raise DomainError("need p > 2")
    if not (0 <= n < N):
        raise DomainError("need 0 <= n < N")
    if trials < 2:
        raise DomainError("need at least two trials")
    model = sparse_three_point(N, eps, p)
    Q = random_subspace(N, n, seed=substream(seed, 0, 1))
    draws = [model.draw(substream(seed, t)) for t in range(trials)]
    support = [np.flatnonzero(xi) for xi in draws]
    spikes = sorted({int(nz[0]) for nz in support if nz.size == 1})

    def solve(i):
        e = np.zeros(N)
        e[i] = 1.0
        if n == 0:
            return 1.0, 1.0
        res = distance(e, Q, LINF, seed=i, certificate=False)
        r = e - Q.basis @ res.minimizer
        return math.fsum((np.abs(r) ** p).tolist()), res.value

    if threads > 1 and len(spikes) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            solved = list(pool.map(solve, spikes))
    else:
        solved = [solve(i) for i in spikes]
    cost = dict(zip(spikes, solved))

    values = np.zeros(trials)
    events = np.zeros(trials, dtype=int)
    for t, (xi, nz) in enumerate(zip(draws, support)):
        events[t] = min(nz.size, 2)
        if nz.size == 1:
            # |xi - eta| = K |e_i - a_i| and K^p = 1/eps
            values[t] = cost[int(nz[0])][0] / (eps * N)
        elif nz.size >= 2:
            values[t] = math.fsum((np.abs(xi[nz]) ** p).tolist()) / N
    a1 = np.where(events == 1, values, 0.0)
    a2 = np.where(events == 2, values, 0.0)
    se = lambda v: float(v.std(ddof=1) / math.sqrt(trials))
    q = 1 - eps
    p_a1 = N * eps * q ** (N - 1)
    extra = {"K": model.K,
             "component_single": float(a1.mean()), "component_multi": float(a2.mean()),
             "stderr_single": se(a1), "stderr_multi": se(a2),
             "prob_single": p_a1, "prob_multi": 1 - q ** N - p_a1,
             "multi_term_exact": 1 - q ** (N - 1) if eps > 0 else 0.0,
             "max_spike_linf_distance": max((c[1] for c in solved), default=float("nan")),
             "spikes_solved": len(spikes)}
    params = {"p": p, "N": N, "n": n, "eps": eps, "trials": trials, "seed": seed}
    report = Report("sparse_nonrigidity", params, predicted=None, measured=float(values.mean()),
                    stderr=se(values), rank_bound=n, rank_measured=n, extra=extra)
    return values, events, report


def sparse_nonrigidity_sim(p: float, N: int, n: int, eps: float, trials: int = 2000, seed: int = 0,
                           threads: int = 1) -> Report:
    """Monte-Carlo estimate of E|xi_1 - eta_1|^p (``measured``) with stderr;
    ``extra`` splits it into the single-spike and multi-spike events."""
    return sparse_trials(p, N, n, eps, trials, seed, threads)[2]
