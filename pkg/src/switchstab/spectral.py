"""Spectral quantities of the weighted generator ``G - l diag(mu)``.

``eta(l)`` is minus the spectral abscissa; it is the exponential decay rate of
``E exp(-l * int_0^t mu(r(s)) ds)``.  ``kappa`` is the point where it changes
sign.  ``tau_bar`` and ``zeta`` turn these into an admissible sampling interval
and a guaranteed decay rate for sampled feedback.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .chain import GeneratorMatrix, stationary_distribution
from .constants import KAPPA_BRACKET_PAD, KAPPA_MAX_ITER, KAPPA_RTOL
from .errors import BracketFailure, EigenFailure, HypothesisViolated


class Variant(str, enum.Enum):
    """Exponent used in ``Lambda_tau``.

    FORMULA_A divides the exponent by epsilon; FORMULA_B does not.  They agree
    whenever epsilon == 1.
    """

    FORMULA_A = "formula_a"
    FORMULA_B = "formula_b"


@dataclass(frozen=True, eq=False)
class SpectralQuery:
    generator: GeneratorMatrix
    mu: np.ndarray
    l: float

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.shape != (self.generator.n_states,) or not np.all(np.isfinite(mu)):
            raise ValueError("mu must be a finite vector with one entry per mode")
        if not self.l > 0:
            raise ValueError("l must be positive")
        object.__setattr__(self, "mu", mu)

    def eta(self) -> float:
        return eta(self.generator, self.mu, self.l)


@dataclass(frozen=True)
class ZetaResult:
    l: float
    tau: float
    kappa: float
    epsilon: float
    eta_boosted: float
    lambda_tau: float
    tau_bar: float
    zeta: float
    variant: Variant

    @property
    def positive(self) -> bool:
        return self.zeta > 0

    def to_dict(self) -> dict:
        return {
            "l": self.l,
            "tau": self.tau,
            "kappa": self.kappa,
            "epsilon": self.epsilon,
            "eta": self.eta_boosted,
            "lambda_tau": self.lambda_tau,
            "tau_bar": self.tau_bar,
            "zeta": self.zeta,
            "zeta_positive": self.positive,
            "variant": self.variant.value,
        }


def _abscissa_2x2(m: np.ndarray) -> float:
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    half_tr = 0.5 * (a + d)
    # off-diagonals are nonnegative, so the discriminant is too
    root = math.sqrt(max((0.5 * (a - d)) ** 2 + b * c, 0.0))
    if half_tr >= 0:
        return half_tr + root
    lam_min = half_tr - root
    return (a * d - b * c) / lam_min


def spectral_abscissa(m: np.ndarray) -> float:
    n = m.shape[0]
    if n == 1:
        return float(m[0, 0])
    if n == 2:
        return float(_abscissa_2x2(m))
    try:
        ev = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    if not np.all(np.isfinite(ev)):
        raise EigenFailure("non-finite eigenvalues")
    return float(ev.real.max())


def eta(G: GeneratorMatrix, mu, l: float) -> float:
    """``-max Re spec(G - l diag(mu))``."""
    mu = np.asarray(mu, dtype=float)
    return -spectral_abscissa(G.rates - l * np.diag(mu))


def kappa(G: GeneratorMatrix, mu) -> float:
    """Critical ``l`` where ``eta(l)`` changes sign; ``inf`` if ``mu >= 0``.

    Requires ``pi . mu > 0``.  Bisection runs inside the bracket
    ``(0, min_{mu_i<0} G_ii / mu_i)``, which is known to contain the root.
    """
    mu = np.asarray(mu, dtype=float)
    pi = stationary_distribution(G)
    if not pi @ mu > 0:
        raise HypothesisViolated("pi.mu > 0", f"pi.mu = {pi @ mu:.6g}")
    neg = mu < 0
    if not neg.any():
        return math.inf
    diag = np.diag(G.rates)
    hi = float(np.min(diag[neg] / mu[neg])) - KAPPA_BRACKET_PAD
    lo = KAPPA_BRACKET_PAD
    # eta'(0) = pi.mu > 0, so eta > 0 just right of the origin; only the
    # upper end needs a numerical sign check
    if not eta(G, mu, hi) < 0:
        raise BracketFailure(f"eta does not change sign on ({lo:g}, {hi:g})")
    for _ in range(KAPPA_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if eta(G, mu, mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= KAPPA_RTOL * hi:
            break
    return 0.5 * (lo + hi)


def epsilon_for(kappa_value: float, l: float) -> float:
    if math.isinf(kappa_value):
        return 1.0
    return min((kappa_value - l) / (2.0 * l), 1.0)


def exponent_coefficient(l: float, alpha_max: float, epsilon: float, variant: Variant) -> float:
    c = l * alpha_max * (1.0 + epsilon)
    if Variant(variant) is Variant.FORMULA_A:
        c /= epsilon
    return c


def lambda_tau(l: float, tau: float, alpha_max: float, epsilon: float,
               max_exit_rate: float, variant: Variant = Variant.FORMULA_B) -> float:
    """``max_j(-G_jj) * (exp(c tau) - 1)`` with ``c`` from :func:`exponent_coefficient`."""
    if tau < 0 or not l > 0 or not 0 < epsilon <= 1:
        raise ValueError("need tau >= 0, l > 0 and 0 < epsilon <= 1")
    c = exponent_coefficient(l, alpha_max, epsilon, variant)
    return max_exit_rate * math.expm1(c * tau)


def _check_gap(G: GeneratorMatrix, alpha, h) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    h = np.asarray(h, dtype=float)
    pi = stationary_distribution(G)
    if not pi @ alpha > pi @ h:
        raise HypothesisViolated("pi.alpha > pi.h", f"pi.alpha = {pi @ alpha:.6g}, pi.h = {pi @ h:.6g}")
    return alpha - h


def _boosted(G: GeneratorMatrix, alpha, h, l: float) -> tuple[float, float, float]:
    if not l > 0:
        raise ValueError("l must be positive")
    mu = _check_gap(G, alpha, h)
    k = kappa(G, mu)
    if not l < k:
        raise HypothesisViolated("l < kappa", f"l = {l:g}, kappa = {k:.6g}")
    eps = epsilon_for(k, l)
    eb = eta(G, mu, l * (1.0 + eps))
    if not eb > 0:
        raise HypothesisViolated("eta_{l(1+eps)} > 0", f"eta = {eb:.6g}")
    return k, eps, eb


def _tau_bar_from(eps: float, eb: float, G: GeneratorMatrix, alpha_max: float, l: float,
                  variant: Variant) -> float:
    c = exponent_coefficient(l, alpha_max, eps, variant)
    rate = G.max_exit_rate
    if c == 0 or rate == 0:
        return math.inf
    return math.log1p(eb / (eps * rate)) / c


def tau_bar(G: GeneratorMatrix, alpha, h, l: float, variant: Variant = Variant.FORMULA_B) -> float:
    """Largest sampling interval for which ``zeta`` stays positive (closed form)."""
    _, eps, eb = _boosted(G, alpha, h, l)
    return _tau_bar_from(eps, eb, G, float(np.max(alpha)), l, variant)


def zeta(G: GeneratorMatrix, alpha, h, l: float, tau: float,
         variant: Variant = Variant.FORMULA_B) -> ZetaResult:
    """Decay rate ``(eta_{l(1+eps)} - eps * Lambda_tau) / (1 + eps)``.

    Returned even when ``tau >= tau_bar`` (``zeta <= 0`` then); check
    :attr:`ZetaResult.positive`.
    """
    variant = Variant(variant)
    k, eps, eb = _boosted(G, alpha, h, l)
    amax = float(np.max(alpha))
    lam = lambda_tau(l, tau, amax, eps, G.max_exit_rate, variant)
    return ZetaResult(
        l=float(l),
        tau=float(tau),
        kappa=k,
        epsilon=eps,
        eta_boosted=eb,
        lambda_tau=lam,
        tau_bar=_tau_bar_from(eps, eb, G, amax, l, variant),
        zeta=(eb - eps * lam) / (1.0 + eps),
        variant=variant,
    )
