"""Monte Carlo ensembles, moment curves and exponent estimates."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.stats

from .chain import GeneratorMatrix, occupation_fractions, sample_path, stationary_distribution
from .constants import CHUNK_PATHS
from .errors import AllPathsBlewUp, NonpositiveCurve, NoUsablePaths
from .models import SwitchingModel
from .rng import StreamRole, stream
from .simulator import ControlLaw, SimConfig, run_path


def pairwise_sum(v: np.ndarray) -> np.ndarray:
    """Sum over axis 0 by a fixed binary tree (adjacent pairs, odd tail carried)."""
    v = np.asarray(v, dtype=float)
    if v.shape[0] == 0:
        return np.zeros(v.shape[1:])
    while v.shape[0] > 1:
        half = v.shape[0] // 2
        paired = v[0:2 * half:2] + v[1:2 * half:2]
        v = np.concatenate([paired, v[2 * half:]]) if v.shape[0] % 2 else paired
    return v[0]


@dataclass
class EnsembleStats:
    times: np.ndarray
    moment_curves: dict[float, np.ndarray]
    per_path_terminal_rates: np.ndarray  # NaN for paths that blew up
    n_paths: int
    n_blowups: int
    path_norms: np.ndarray               # (M, K), NaN after blowup
    survivors: np.ndarray                # (K,) paths still finite at each time

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def to_csv(self, path: str | Path) -> None:
        qs = sorted(self.moment_curves)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"q={q:g}" for q in qs])
            for k, t in enumerate(self.times):
                w.writerow([f"{t:.17g}"] + [f"{self.moment_curves[q][k]:.17g}" for q in qs])


def moment_curve(norms: np.ndarray, q: float) -> tuple[np.ndarray, np.ndarray]:
    """Mean of ``norms**q`` over the finite entries of each column."""
    alive = np.isfinite(norms)
    powered = np.where(alive, np.where(alive, norms, 0.0) ** q, 0.0)
    count = alive.sum(axis=0)
    total = pairwise_sum(powered)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(count > 0, total / np.maximum(count, 1), np.nan), count


def run_ensemble(model: SwitchingModel, law: ControlLaw | None, cfg: SimConfig, n_paths: int,
                 q_list: Sequence[float], threads: int = 1, engine: str = "auto") -> EnsembleStats:
    """Simulate ``n_paths`` independent paths (path ``p`` uses streams keyed
    by ``(cfg.seed, p)``) and average ``|x|^q`` over the surviving paths.

    Work is split into fixed chunks of paths and the reduction order is fixed,
    so the result does not depend on ``threads``.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    qs = [float(q) for q in q_list]
    if not qs or any(q < 1 for q in qs):
        raise ValueError("q_list must be nonempty with entries >= 1")
    norms = np.empty((n_paths, cfg.n_records))
    blown = np.zeros(n_paths, dtype=bool)

    def work(start: int):
        for p in range(start, min(start + CHUNK_PATHS, n_paths)):
            rec = run_path(model, law, cfg, p, engine)
            norms[p] = np.linalg.norm(rec.states, axis=1)
            blown[p] = rec.blowup_step is not None

    starts = range(0, n_paths, CHUNK_PATHS)
    if threads <= 1:
        for s in starts:
            work(s)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, starts))

    n_blow = int(blown.sum())
    if n_blow == n_paths:
        raise AllPathsBlewUp(f"all {n_paths} paths blew up")
    times = np.arange(cfg.n_records) * (cfg.record_stride * cfg.dt)
    curves = {}
    survivors = None
    for q in qs:
        curves[q], survivors = moment_curve(norms, q)
    with np.errstate(divide="ignore"):
        rates = np.log(norms[:, -1]) / times[-1]
    return EnsembleStats(times, curves, rates, n_paths, n_blow, norms, survivors)


@dataclass(frozen=True)
class ExponentEstimate:
    slope: float
    stderr: float
    window: tuple[float, float]
    q: float | None
    n_points: int
    n_paths: int
    n_blowups: int

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "slope": self.slope,
            "stderr": self.stderr,
            "window": list(self.window),
            "n_paths": self.n_paths,
            "n_blowups": self.n_blowups,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _window_mask(times: np.ndarray, window) -> np.ndarray:
    lo, hi = window
    if not lo < hi:
        raise ValueError("window must satisfy t_min < t_max")
    slack = 1e-9 * max(1.0, abs(hi))
    return (times >= lo - slack) & (times <= hi + slack)


def estimate_ms_exponent(stats: EnsembleStats, q: float = 2.0, window=None) -> ExponentEstimate:
    """OLS slope of ``log E|x(t)|^q`` against ``t`` (log of the mean, not mean of logs).

    The default window ``[T/4, T]`` skips the transient of the initial segment.
    """
    q = float(q)
    if q not in stats.moment_curves:
        raise KeyError(f"no moment curve for q = {q:g}")
    T = stats.horizon
    window = (T / 4, T) if window is None else (float(window[0]), float(window[1]))
    mask = _window_mask(stats.times, window)
    t = stats.times[mask]
    y = stats.moment_curves[q][mask]
    if t.size < 3:
        raise ValueError("window holds fewer than 3 recorded points")
    bad = ~(y > 0) | ~np.isfinite(y)
    if bad.any():
        first = float(t[np.flatnonzero(bad)[0]])
        raise NonpositiveCurve(f"moment curve q={q:g} is not positive on the window", first)
    fit = scipy.stats.linregress(t, np.log(y))
    return ExponentEstimate(float(fit.slope), float(fit.stderr), window, q, int(t.size),
                            stats.n_paths, stats.n_blowups)


def estimate_as_exponent(stats: EnsembleStats) -> ExponentEstimate:
    """Mean over finite paths of ``(1/T) log|x(T)|`` with its standard error."""
    r = stats.per_path_terminal_rates
    r = r[np.isfinite(r)]
    if r.size == 0:
        raise NoUsablePaths("no path ends finite and nonzero")
    se = float(np.std(r, ddof=1) / math.sqrt(r.size)) if r.size > 1 else 0.0
    return ExponentEstimate(float(np.mean(r)), se, (0.0, stats.horizon), None, int(r.size),
                            stats.n_paths, stats.n_blowups)


@dataclass(frozen=True)
class IntegralMoment:
    exponent: float
    value: float
    tail_slope: float
    tail_convergent: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def integral_moment(stats: EnsembleStats, exponent: float) -> IntegralMoment:
    """Trapezoidal ``int_0^T E|x|^exponent dt`` plus a tail flag.

    The tail counts as convergent when the log curve over the last tenth of
    the horizon has a negative least-squares slope.
    """
    exponent = float(exponent)
    if exponent < 1:
        raise ValueError("exponent must be at least 1")
    if exponent not in stats.moment_curves:
        raise KeyError(f"no moment curve for q = {exponent:g}; add it to q_list")
    y = stats.moment_curves[exponent]
    value = float(np.trapezoid(y, stats.times))
    T = stats.horizon
    mask = stats.times >= 0.9 * T
    ty, tt = y[mask], stats.times[mask]
    slope = math.nan
    if tt.size >= 3 and np.all(ty > 0):
        slope = float(scipy.stats.linregress(tt, np.log(ty)).slope)
    return IntegralMoment(exponent, value, slope, bool(slope < 0))


@dataclass
class OccupationReport:
    pi: np.ndarray
    seeds: list[int]
    fractions: np.ndarray  # (len(seeds), N)
    deviations: np.ndarray

    @property
    def max_deviation(self) -> float:
        return float(self.deviations.max())

    def to_dict(self) -> dict:
        return {
            "pi": self.pi.tolist(),
            "seeds": list(self.seeds),
            "fractions": self.fractions.tolist(),
            "deviations": self.deviations.tolist(),
            "max_deviation": self.max_deviation,
        }


def occupation_check(G: GeneratorMatrix, horizon: float, seeds: Sequence[int], i0: int = 0) -> OccupationReport:
    """Time fractions spent in each mode versus the stationary distribution."""
    pi = stationary_distribution(G)
    fr = np.array([
        occupation_fractions(sample_path(G, i0, horizon, stream(s, 0, StreamRole.CHAIN)), G.n_states)
        for s in seeds
    ])
    dev = np.abs(fr - pi).max(axis=1)
    return OccupationReport(pi, [int(s) for s in seeds], fr, dev)
