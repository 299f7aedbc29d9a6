"""Continuous-time Markov chains on a finite state space.

Modes are 0-based integers throughout the Python API.  File formats (config
JSON, CSV) use the 1-based labels of the mathematical convention; the
conversion happens at the I/O boundary only.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .constants import ROW_SUM_TOL, STATIONARY_RESIDUAL_TOL, STOCHASTIC_ROW_TOL
from .errors import (
    NegativeOffDiagonal,
    NonConservative,
    OutOfHorizon,
    Reducible,
    SingularSystem,
)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """A validated conservative, irreducible rate matrix.  Build with
    :func:`validate_generator`."""

    rates: np.ndarray

    @property
    def n_states(self) -> int:
        return self.rates.shape[0]

    @property
    def exit_rates(self) -> np.ndarray:
        return -np.diag(self.rates)

    @property
    def max_exit_rate(self) -> float:
        return float(self.exit_rates.max())


@dataclass(frozen=True, eq=False)
class ModePath:
    """Piecewise-constant sample path: ``modes[k]`` holds on
    ``[jump_times[k], jump_times[k+1])``; the last segment runs to ``horizon``."""

    jump_times: np.ndarray
    modes: np.ndarray
    horizon: float

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_jump", "mode"])
            for t, m in zip(self.jump_times, self.modes):
                w.writerow([f"{t:.17g}", int(m) + 1])


def _strongly_connected(adj: np.ndarray) -> bool:
    n = adj.shape[0]

    def reach(a: np.ndarray) -> int:
        seen = np.zeros(n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(a[i]):
                if not seen[j]:
                    seen[j] = True
                    stack.append(j)
        return int(seen.sum())

    return reach(adj) == n and reach(adj.T) == n


def validate_generator(raw) -> GeneratorMatrix:
    """Check the generator invariants and wrap ``raw``.

    Raises the subclass of :class:`~switchstab.errors.InvalidGenerator` naming
    the first violated invariant.
    """
    g = np.array(raw, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 1:
        raise ValueError(f"generator must be a nonempty square matrix, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise ValueError("generator has non-finite entries")
    off = g - np.diag(np.diag(g))
    if np.any(off < 0):
        i, j = np.argwhere(off < 0)[0]
        raise NegativeOffDiagonal(f"rate ({i}, {j}) = {g[i, j]} is negative")
    rows = g.sum(axis=1)
    scale = np.maximum(1.0, np.abs(g).max(axis=1))
    bad = np.abs(rows) > ROW_SUM_TOL * scale
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise NonConservative(f"row {i} sums to {rows[i]:.3e}")
    if not _strongly_connected(off > 0):
        raise Reducible("positive-rate graph is not strongly connected")
    return GeneratorMatrix(_frozen(g))


def stationary_distribution(G: GeneratorMatrix) -> np.ndarray:
    """Solve ``pi G = 0``, ``sum(pi) = 1``.

    The last balance equation is swapped for the normalisation row, giving a
    square system solved by LU with partial pivoting.
    """
    n = G.n_states
    a = G.rates.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if np.linalg.cond(a) > 1e12:
        raise SingularSystem(f"normalised balance system is ill-conditioned (cond={np.linalg.cond(a):.2e})")
    # one refinement step against the full system
    r = b - a @ pi
    pi = pi + np.linalg.solve(a, r)
    resid = np.abs(pi @ G.rates).max()
    if resid > STATIONARY_RESIDUAL_TOL * max(1.0, np.abs(G.rates).max()) or np.any(pi <= 0):
        raise SingularSystem(f"stationary solve failed (residual {resid:.2e}, min pi {pi.min():.2e})")
    return pi


def sample_path(G: GeneratorMatrix, i0: int, horizon: float, rng: np.random.Generator) -> ModePath:
    """Exact path on ``[0, horizon)`` by exponential holding times."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    n = G.n_states
    if not 0 <= i0 < n:
        raise ValueError(f"initial mode {i0} outside 0..{n - 1}")
    q = G.rates
    times = [0.0]
    modes = [int(i0)]
    t = 0.0
    j = int(i0)
    while True:
        rate = -q[j, j]
        if rate <= 0.0:
            break
        t += rng.exponential(1.0 / rate)
        if t >= horizon:
            break
        cum = np.cumsum(np.where(np.arange(n) == j, 0.0, q[j]))
        u = rng.random() * rate
        nxt = int(np.searchsorted(cum, u, side="right"))
        if nxt >= n:
            # u rounded up onto the top edge
            nxt = int(np.flatnonzero((q[j] > 0) & (np.arange(n) != j))[-1])
        j = nxt
        times.append(t)
        modes.append(j)
    return ModePath(_frozen(times), np.array(modes, dtype=np.int64), float(horizon))


def mode_at(path: ModePath, t: float) -> int:
    """Right-continuous lookup: at a jump instant the post-jump mode is returned."""
    if not 0.0 <= t < path.horizon:
        raise OutOfHorizon(f"t={t} outside [0, {path.horizon})")
    k = int(np.searchsorted(path.jump_times, t, side="right")) - 1
    return int(path.modes[k])


def modes_on_grid(path: ModePath, times: np.ndarray) -> np.ndarray:
    """Vectorised :func:`mode_at` without the horizon check."""
    k = np.searchsorted(path.jump_times, times, side="right") - 1
    return path.modes[k]


def occupation_fractions(path: ModePath, n_states: int) -> np.ndarray:
    ends = np.append(path.jump_times[1:], path.horizon)
    occ = np.zeros(n_states)
    np.add.at(occ, path.modes, ends - path.jump_times)
    return occ / path.horizon


def skeleton_transition_matrix(G: GeneratorMatrix, tau: float) -> np.ndarray:
    """Transition matrix ``exp(tau G)`` of the chain sampled every ``tau``."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    p = scipy.linalg.expm(tau * G.rates)
    # expm can leave entries of order -1e-17
    p[(p < 0) & (p > -1e-14)] = 0.0
    if np.any(p < 0) or np.abs(p.sum(axis=1) - 1.0).max() > STOCHASTIC_ROW_TOL:
        raise ArithmeticError("matrix exponential is not stochastic to tolerance")
    return p
