"""Euler-Maruyama simulation of switching diffusions with sampled, delayed feedback.

The switching signal is an exact chain path read right-continuously on the
grid ``t_k = k * dt``; the coefficients use the mode at the left endpoint of
each step.  The feedback ``u = -alpha(r(nu(t) - tau0)) x(nu(t) - tau0)`` is
refreshed at sampling instants only and read from a ring buffer of past grid
states, so ``tau`` and ``tau0`` must both be multiples of ``dt``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _kernel
from .chain import modes_on_grid, sample_path
from .constants import BLOWUP_THRESHOLD, GRID_RTOL, NOISE_BLOCK
from .designer import ControlGains
from .errors import GridMisaligned
from .models import PolynomialModel, SwitchingModel
from .rng import StreamRole, stream


def _floor_div(t: float, tau: float) -> int:
    k = math.floor(t / tau)
    # repair the quotient when t/tau rounds across an integer
    if (k + 1) * tau <= t:
        k += 1
    elif k * tau > t:
        k -= 1
    return k


def nu(t: float, tau: float) -> float:
    """Last sampling instant ``floor(t/tau) * tau``."""
    if t < 0 or not tau > 0:
        raise ValueError("need t >= 0 and tau > 0")
    return _floor_div(t, tau) * tau


@dataclass(frozen=True)
class ControlLaw:
    gains: ControlGains
    tau: float
    tau0: float = 0.0

    def __post_init__(self):
        if not isinstance(self.gains, ControlGains):
            object.__setattr__(self, "gains", ControlGains(self.gains))
        if not self.tau > 0 or not self.tau0 >= 0:
            raise ValueError("need tau > 0 and tau0 >= 0")

    @property
    def n0(self) -> int:
        return _floor_div(self.tau0, self.tau)

    @property
    def delta(self) -> float:
        return (self.n0 + 1) * self.tau - self.tau0


@dataclass(frozen=True, eq=False)
class SimConfig:
    dt: float
    horizon: float
    x0: np.ndarray
    i0: int = 0
    seed: int = 0
    record_stride: int = 1

    def __post_init__(self):
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if x0.ndim != 1 or not np.all(np.isfinite(x0)):
            raise ValueError("x0 must be a finite vector")
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)
        if not self.dt > 0 or not self.horizon > 0:
            raise ValueError("dt and horizon must be positive")
        if int(self.record_stride) < 1:
            raise ValueError("record_stride must be a positive integer")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")
        self.n_steps  # validates the horizon

    @property
    def n_steps(self) -> int:
        n = round(self.horizon / self.dt)
        if n < 1 or abs(n * self.dt - self.horizon) > GRID_RTOL * self.horizon:
            raise ValueError(f"horizon {self.horizon:g} is not a multiple of dt {self.dt:g}")
        return int(n)

    @property
    def n_records(self) -> int:
        return self.n_steps // self.record_stride + 1


def _grid_multiple(value: float, dt: float, name: str) -> int:
    n = round(value / dt)
    if abs(n * dt - value) > GRID_RTOL * max(value, dt):
        raise GridMisaligned(f"{name} = {value:g} is not a multiple of dt = {dt:g} ({value / dt:.6g} steps)")
    return int(n)


def grid_steps(law: ControlLaw, dt: float) -> tuple[int, int]:
    """``(tau/dt, tau0/dt)`` as integers; raises :class:`GridMisaligned`."""
    s = _grid_multiple(law.tau, dt, "tau")
    s0 = _grid_multiple(law.tau0, dt, "tau0")
    if s < 1:
        raise GridMisaligned(f"tau = {law.tau:g} is shorter than dt = {dt:g}")
    return s, s0


def snap_to_grid(law: ControlLaw, dt: float) -> ControlLaw:
    """Round ``tau0`` down onto the ``dt`` grid (``tau`` must already be on it)."""
    _grid_multiple(law.tau, dt, "tau")
    n = math.floor(law.tau0 / dt * (1 + GRID_RTOL))
    return replace(law, tau0=n * dt)


def observation_index(k: int, s: int, s0: int) -> int:
    """Grid index of the state the feedback uses at step ``k``:
    ``(nu(t_k) - tau0) / dt``; negative means the initial segment."""
    return (k // s) * s - s0


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray           # (K, n)
    modes: np.ndarray            # (K,), 0-based
    applied_control: np.ndarray  # (K, n)
    blowup: bool = False
    blowup_time: float | None = None
    noise_count: int = 0
    noise_mean: float = 0.0
    noise_var: float = 0.0
    seed: int = 0
    path_index: int = 0

    def to_csv(self, path: str | Path) -> None:
        n = self.states.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "mode"] + [f"x{j + 1}" for j in range(n)] + [f"u{j + 1}" for j in range(n)])
            for t, m, x, u in zip(self.times, self.modes, self.states, self.applied_control):
                w.writerow([f"{t:.17g}", int(m) + 1] + [f"{v:.17g}" for v in x] + [f"{v:.17g}" for v in u])


@dataclass
class PathRecord:
    """Raw output of one path: recorded arrays (NaN after a blowup)."""

    states: np.ndarray
    modes: np.ndarray
    control: np.ndarray
    blowup_step: int | None
    noise_count: int
    noise_sum: float
    noise_sumsq: float
    observations: list | None = field(default=None, repr=False)


def _check_inputs(model: SwitchingModel, law: ControlLaw | None, cfg: SimConfig):
    if cfg.x0.shape[0] != model.dim_x:
        raise ValueError(f"x0 has {cfg.x0.shape[0]} components, model has {model.dim_x}")
    if not 0 <= cfg.i0 < model.n_modes:
        raise ValueError(f"initial mode {cfg.i0} outside 0..{model.n_modes - 1}")
    if law is None:
        return 1, 0
    if law.gains.alpha.shape[0] != model.n_modes:
        raise ValueError("need one gain per mode")
    return grid_steps(law, cfg.dt)


def run_path(model: SwitchingModel, law: ControlLaw | None, cfg: SimConfig, path_index: int = 0,
             engine: str = "auto", trace: bool = False) -> PathRecord:
    """Simulate one path with streams keyed by ``(cfg.seed, path_index)``.

    ``engine`` is ``"compiled"`` (polynomial models only), ``"numpy"`` or
    ``"auto"``.  ``trace`` records ``(k, observation index)`` at every
    feedback refresh (numpy engine).
    """
    s, s0 = _check_inputs(model, law, cfg)
    if engine == "auto":
        engine = "compiled" if isinstance(model, PolynomialModel) and not trace else "numpy"
    if engine == "compiled" and not isinstance(model, PolynomialModel):
        raise ValueError("the compiled engine needs a PolynomialModel")
    n_steps = cfg.n_steps
    chain = sample_path(model.generator, cfg.i0, cfg.horizon,
                        stream(cfg.seed, path_index, StreamRole.CHAIN))
    noise = stream(cfg.seed, path_index, StreamRole.BROWNIAN)
    if engine == "compiled":
        return _run_compiled(model, law, cfg, s, s0, n_steps, chain, noise)
    if engine == "numpy":
        return _run_numpy(model, law, cfg, s, s0, n_steps, chain, noise, trace)
    raise ValueError(f"unknown engine {engine!r}")


def _blocks(n_steps: int):
    k0 = 0
    while k0 <= n_steps:
        length = min(NOISE_BLOCK, n_steps + 1 - k0)
        yield k0, length, min(length, n_steps - k0)
        k0 += length


def _mask_after(rec: np.ndarray, stride: int, blowup_step: int | None):
    if blowup_step is not None:
        first_bad = -(-blowup_step // stride)
        rec[first_bad:] = np.nan


def _run_compiled(model: PolynomialModel, law, cfg, s, s0, n_steps, chain, noise) -> PathRecord:
    controlled = law is not None
    depth = s + s0 + 1
    alpha = law.gains.alpha.copy() if controlled else np.zeros(model.n_modes)
    x0 = float(cfg.x0[0])
    fstate = np.array([x0, x0, 0.0, 0.0])
    istate = np.array([cfg.i0, -1], dtype=np.int64)
    ring_x = np.zeros(depth)
    ring_m = np.zeros(depth, dtype=np.int64)
    n_rec = cfg.n_records
    rec_x = np.full(n_rec, np.nan)
    rec_u = np.full(n_rec, np.nan)
    rec_m = np.full(n_rec, -1, dtype=np.int64)
    dc, dp, da = model.drift_table
    gc, gp, ga = model.diffusion_table
    sqdt = math.sqrt(cfg.dt)
    drawn = 0
    for k0, length, n_noise in _blocks(n_steps):
        modes = modes_on_grid(chain, (k0 + np.arange(length)) * cfg.dt).astype(np.int64)
        z = noise.standard_normal(n_noise)
        drawn += n_noise
        _kernel.advance_scalar(k0, n_steps, modes, z, fstate, istate, ring_x, ring_m,
                               cfg.dt, sqdt, s, s0, controlled, alpha, x0, cfg.i0,
                               dc, dp, da, gc, gp, ga, cfg.record_stride, BLOWUP_THRESHOLD,
                               rec_x, rec_u, rec_m)
        if istate[1] >= 0:
            drawn = int(istate[1])
            break
    blow = int(istate[1]) if istate[1] >= 0 else None
    _mask_after(rec_x, cfg.record_stride, blow)
    _mask_after(rec_u, cfg.record_stride, blow)
    return PathRecord(rec_x[:, None], rec_m, rec_u[:, None], blow, drawn, float(fstate[2]), float(fstate[3]))


def _run_numpy(model: SwitchingModel, law, cfg, s, s0, n_steps, chain, noise, trace) -> PathRecord:
    controlled = law is not None
    n, m = model.dim_x, model.dim_w
    depth = s + s0 + 1
    ring_x = np.zeros((depth, n))
    ring_m = np.zeros(depth, dtype=np.int64)
    n_rec = cfg.n_records
    rec_x = np.full((n_rec, n), np.nan)
    rec_u = np.full((n_rec, n), np.nan)
    rec_m = np.full(n_rec, -1, dtype=np.int64)
    x = cfg.x0.copy()
    hx, hm = cfg.x0.copy(), cfg.i0
    zero_u = np.zeros(n)
    sqdt = math.sqrt(cfg.dt)
    stride = cfg.record_stride
    obs = [] if trace else None
    zs = zq = 0.0
    drawn = 0
    blow = None
    for k0, length, n_noise in _blocks(n_steps):
        modes = modes_on_grid(chain, (k0 + np.arange(length)) * cfg.dt)
        z = noise.standard_normal((n_noise, m))
        for b in range(length):
            k = k0 + b
            i = int(modes[b])
            ring_x[k % depth] = x
            ring_m[k % depth] = i
            u = zero_u
            if controlled:
                if k % s == 0:
                    j = observation_index(k, s, s0)
                    if obs is not None:
                        obs.append((k, j))
                    if j < 0:
                        hx, hm = cfg.x0, cfg.i0
                    else:
                        hx, hm = ring_x[j % depth].copy(), int(ring_m[j % depth])
                u = 0.0 - law.gains.alpha[hm] * hx
            if k % stride == 0:
                r = k // stride
                rec_x[r], rec_u[r], rec_m[r] = x, u, i
            if k == n_steps:
                break
            t = k * cfg.dt
            zk = z[b]
            zs += float(zk.sum())
            zq += float(zk @ zk)
            drawn += m
            xa = x[None, :]
            ma = np.array([i])
            f = model.drift(xa, ma, t)[0]
            g = model.diffusion(xa, ma, t)[0]
            x = x + (f + u) * cfg.dt + g @ (sqdt * zk)
            if not np.all(np.abs(x) <= BLOWUP_THRESHOLD):
                blow = k + 1
                break
        if blow is not None:
            break
    _mask_after(rec_x, stride, blow)
    _mask_after(rec_u, stride, blow)
    return PathRecord(rec_x, rec_m, rec_u, blow, drawn, zs, zq, obs)


def _trajectory(rec: PathRecord, cfg: SimConfig, path_index: int) -> Trajectory:
    times = np.arange(cfg.n_records) * (cfg.record_stride * cfg.dt)
    keep = cfg.n_records
    if rec.blowup_step is not None:
        keep = -(-rec.blowup_step // cfg.record_stride)
    cnt = rec.noise_count
    mean = rec.noise_sum / cnt if cnt else 0.0
    var = rec.noise_sumsq / cnt - mean * mean if cnt else 0.0
    return Trajectory(
        times=times[:keep],
        states=rec.states[:keep],
        modes=rec.modes[:keep],
        applied_control=rec.control[:keep],
        blowup=rec.blowup_step is not None,
        blowup_time=None if rec.blowup_step is None else rec.blowup_step * cfg.dt,
        noise_count=cnt,
        noise_mean=mean,
        noise_var=var,
        seed=int(cfg.seed),
        path_index=path_index,
    )


def simulate_uncontrolled(model: SwitchingModel, cfg: SimConfig, path_index: int = 0,
                          engine: str = "auto") -> Trajectory:
    return _trajectory(run_path(model, None, cfg, path_index, engine), cfg, path_index)


def simulate_controlled(model: SwitchingModel, law: ControlLaw, cfg: SimConfig, path_index: int = 0,
                        engine: str = "auto") -> Trajectory:
    return _trajectory(run_path(model, law, cfg, path_index, engine), cfg, path_index)
