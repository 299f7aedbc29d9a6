"""Switching diffusion models.

A model bundles the chain generator with drift and diffusion coefficients.
Coefficients are evaluated in batches: ``drift(x, modes, t)`` takes ``x`` of
shape ``(P, n)`` and integer ``modes`` of shape ``(P,)`` and returns
``(P, n)``; ``diffusion`` returns ``(P, n, m)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .chain import GeneratorMatrix, validate_generator


class SwitchingModel:
    """Base class.  Subclasses set the attributes and implement the two
    coefficient methods."""

    generator: GeneratorMatrix
    dim_x: int
    dim_w: int
    declared_bounds = None

    @property
    def n_modes(self) -> int:
        return self.generator.n_states

    def drift(self, x: np.ndarray, modes: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError

    def diffusion(self, x: np.ndarray, modes: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError


class FunctionModel(SwitchingModel):
    """Model from pointwise per-mode callables ``f_i(x, t) -> (n,)`` and
    ``g_i(x, t) -> (n, m)``."""

    def __init__(self, generator, drifts: Sequence[Callable], diffusions: Sequence[Callable],
                 dim_x: int, dim_w: int, declared_bounds=None):
        self.generator = generator if isinstance(generator, GeneratorMatrix) else validate_generator(generator)
        if len(drifts) != self.n_modes or len(diffusions) != self.n_modes:
            raise ValueError("need one drift and one diffusion per mode")
        self._f = list(drifts)
        self._g = list(diffusions)
        self.dim_x = int(dim_x)
        self.dim_w = int(dim_w)
        self.declared_bounds = declared_bounds

    def drift(self, x, modes, t):
        out = np.empty((x.shape[0], self.dim_x))
        for p in range(x.shape[0]):
            out[p] = self._f[int(modes[p])](x[p], t)
        return out

    def diffusion(self, x, modes, t):
        out = np.empty((x.shape[0], self.dim_x, self.dim_w))
        for p in range(x.shape[0]):
            out[p] = np.reshape(self._g[int(modes[p])](x[p], t), (self.dim_x, self.dim_w))
        return out


@dataclass(frozen=True)
class Term:
    """``coef * x**power``, or ``coef * |x|**power`` when ``absolute``."""

    coef: float
    power: float
    absolute: bool = False

    def __post_init__(self):
        if self.power < 0:
            raise ValueError("powers must be nonnegative")
        if not self.absolute and self.power != int(self.power):
            raise ValueError(f"signed term needs an integer power, got {self.power}")


def _table(terms_per_mode: Sequence[Sequence[Term]], n_modes: int):
    if len(terms_per_mode) != n_modes:
        raise ValueError("need one term list per mode")
    width = max(1, max(len(ts) for ts in terms_per_mode))
    coef = np.zeros((n_modes, width))
    power = np.zeros((n_modes, width))
    absolute = np.zeros((n_modes, width), dtype=np.bool_)
    for i, ts in enumerate(terms_per_mode):
        for j, t in enumerate(ts):
            t = t if isinstance(t, Term) else Term(*t)
            coef[i, j], power[i, j], absolute[i, j] = t.coef, t.power, t.absolute
    for a in (coef, power, absolute):
        a.setflags(write=False)
    return coef, power, absolute


@dataclass(frozen=True, eq=False)
class PolynomialModel(SwitchingModel):
    """Scalar model whose coefficients are sums of :class:`Term` per mode.

    Runs on the compiled stepping kernel.
    """

    generator: GeneratorMatrix
    drift_terms: tuple
    diffusion_terms: tuple
    declared_bounds: object = None
    name: str = "polynomial"
    dim_x: int = field(default=1, init=False)
    dim_w: int = field(default=1, init=False)

    def __post_init__(self):
        if not isinstance(self.generator, GeneratorMatrix):
            object.__setattr__(self, "generator", validate_generator(self.generator))
        n = self.generator.n_states
        object.__setattr__(self, "drift_table", _table(self.drift_terms, n))
        object.__setattr__(self, "diffusion_table", _table(self.diffusion_terms, n))

    @staticmethod
    def _eval(table, x, modes):
        coef, power, absolute = (a[modes] for a in table)
        base = np.where(absolute, np.abs(x), x)
        return np.sum(coef * base ** power, axis=1, keepdims=True)

    def drift(self, x, modes, t):
        return self._eval(self.drift_table, np.asarray(x, dtype=float).reshape(-1, 1), modes)

    def diffusion(self, x, modes, t):
        return self._eval(self.diffusion_table, np.asarray(x, dtype=float).reshape(-1, 1), modes)[:, :, None]


SEC5_GENERATOR = ((-10.0, 10.0), (20.0, -20.0))


def two_mode_model() -> PolynomialModel:
    """Two-mode scalar example: mode 1 has drift x(1 - 3x^2) and diffusion
    |x|^(3/2), mode 2 has drift x(1 - 2x^2) and diffusion x."""
    from .designer import NonlinearBounds

    return PolynomialModel(
        generator=validate_generator(SEC5_GENERATOR),
        drift_terms=((Term(1.0, 1), Term(-3.0, 3)), (Term(1.0, 1), Term(-2.0, 3))),
        diffusion_terms=((Term(1.0, 1.5, True),), (Term(1.0, 1),)),
        declared_bounds=NonlinearBounds(k=3.0, q1=3.0, q2=1.5, p=7.0, theta=4.0,
                                        A=(2.5, 4.0), B=(1.5, 2.0)),
        name="sec5",
    )


BUILTIN_MODELS = {"sec5": two_mode_model}
