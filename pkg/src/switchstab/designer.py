"""Admissible sampling/lag bounds and predicted Lyapunov exponents.

Every bound is the smallest positive root of one or more increasing
polynomials ``beta(y) = target``.  The designers below collect the spectral
ingredients (``tau_bar``, ``zeta``), evaluate the theorem-specific targets,
solve for the roots and package everything, including a checklist of the
hypotheses that were verified, into a :class:`DesignReport`.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .chain import GeneratorMatrix, stationary_distribution
from .constants import ROOT_MAX_ITER, ROOT_RESIDUAL_TOL, ROOT_RTOL, ROOT_START
from .errors import HypothesisViolated, QOutOfRange, SigmaOutOfRange, UnknownFamily
from .spectral import Variant, kappa, zeta


# ---------------------------------------------------------------------------
# inputs

def _vec(v, n: int | None, name: str) -> np.ndarray | None:
    if v is None:
        return None
    a = np.atleast_1d(np.asarray(v, dtype=float))
    if a.ndim != 1 or (n is not None and a.shape[0] != n) or not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be a finite vector" + (f" of length {n}" if n else ""))
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ControlGains:
    """Per-mode feedback gains ``alpha`` of ``u = -alpha(i) x``."""

    alpha: np.ndarray

    def __post_init__(self):
        a = _vec(self.alpha, None, "alpha")
        if np.any(a < 0):
            raise ValueError("gains must be nonnegative")
        object.__setattr__(self, "alpha", a)

    @property
    def alpha_max(self) -> float:
        return float(self.alpha.max())


@dataclass(frozen=True, eq=False)
class QuasiLinearBounds:
    """Linear-growth constant and one-sided per-mode coefficients.

    ``D``/``E`` bound ``x.f + |g|^2/2`` from above by ``E_i + D_i |x|^2``;
    ``d``/``e`` bound it from below by ``d_i |x|^2 + e_i``.  Leaving both
    ``E`` and ``e`` unset selects the homogeneous forms (no constant terms and
    growth ``|f| v |g| <= k_bar |x|``) used by the stability results.
    """

    k_bar: float
    D: np.ndarray | None = None
    E: np.ndarray | None = None
    d: np.ndarray | None = None
    e: np.ndarray | None = None

    def __post_init__(self):
        if not self.k_bar > 0:
            raise ValueError("k_bar must be positive")
        n = None
        for name in ("D", "E", "d", "e"):
            v = _vec(getattr(self, name), n, name)
            if v is not None:
                n = v.shape[0]
            object.__setattr__(self, name, v)

    @property
    def homogeneous(self) -> bool:
        return self.E is None and self.e is None


@dataclass(frozen=True, eq=False)
class NonlinearBounds:
    """Polynomial growth and Khasminskii-type coefficients.

    ``|f| <= k(|x| + |x|^q1)``, ``|g| <= k(|x| + |x|^q2)`` and
    ``x.f + (p-1)/2 |g|^2 <= A_i |x|^2 - B_i |x|^theta``.  ``c`` is the
    optional additive constant of the weaker boundedness condition.
    """

    k: float
    q1: float
    q2: float
    p: float
    theta: float
    A: np.ndarray
    B: np.ndarray
    c: float = 0.0

    def __post_init__(self):
        A = _vec(self.A, None, "A")
        B = _vec(self.B, A.shape[0], "B")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        qmax = max(self.q1, self.q2)
        if not (self.k > 0 and self.q1 >= 1 and self.q2 >= 1 and self.theta > 2):
            raise ValueError("need k > 0, q1, q2 >= 1 and theta > 2")
        if self.p < 2 * qmax:
            raise ValueError("need p >= 2 max(q1, q2)")
        if self.theta < qmax + 1:
            raise ValueError("need theta >= max(q1, q2) + 1")
        if np.any(A <= 0) or np.any(B <= 0) or self.c < 0:
            raise ValueError("A and B must be positive, c nonnegative")

    @property
    def rho(self) -> float:
        return min(self.p, self.theta)


# ---------------------------------------------------------------------------
# threshold polynomials

class Family(str, enum.Enum):
    BAR1 = "bar1"      # 2y[2y(K^2+a^2)+K^2]
    BAR2 = "bar2"      # 2ay(4ay+1)
    BAR3 = "bar3"      # y(8a^2 y + 2a + 3u/2)
    BAR4 = "bar4"      # y^2[3y(K^2+a^2)|x0|^2 + 2K^2|x0|^2 + K^2(3y+2)]
    TILDE1 = "tilde1"  # y[3y(K^2+a^2)+K^2]
    TILDE2 = "tilde2"  # 2ay(3ay+1)
    TILDE3 = "tilde3"  # 2y(3a^2 y + a + s)
    TILDE4 = "tilde4"  # y^2[2y(K^2+a^2)|x0|^2 + K^2|x0|^2]
    NL1 = "nl1"        # 2y[3y(K^2+a^2)+2K^2]
    NL2 = "nl2"        # K^2 y(3y+2)
    NL3 = "nl3"        # 2ay(1+6ay)


@dataclass(frozen=True)
class BetaParams:
    """Constants a family may use: ``k`` is the growth constant (K-bar or K),
    ``upsilon`` and ``sigma`` the margins, ``x0_sq`` the squared initial norm."""

    alpha_max: float
    k: float = 0.0
    upsilon: float = 0.0
    sigma: float = 0.0
    x0_sq: float = 0.0


def beta_eval(family: Family | str, y: float, params: BetaParams) -> float:
    try:
        fam = Family(family)
    except ValueError:
        raise UnknownFamily(family) from None
    if y < 0:
        raise ValueError("y must be nonnegative")
    a, k2 = params.alpha_max, params.k ** 2
    a2 = a * a
    x2 = params.x0_sq
    if fam is Family.BAR1:
        return 2 * y * (2 * y * (k2 + a2) + k2)
    if fam is Family.BAR2:
        return 2 * a * y * (4 * a * y + 1)
    if fam is Family.BAR3:
        return y * (8 * a2 * y + 2 * a + 1.5 * params.upsilon)
    if fam is Family.BAR4:
        return y * y * (3 * y * (k2 + a2) * x2 + 2 * k2 * x2 + k2 * (3 * y + 2))
    if fam is Family.TILDE1:
        return y * (3 * y * (k2 + a2) + k2)
    if fam is Family.TILDE2:
        return 2 * a * y * (3 * a * y + 1)
    if fam is Family.TILDE3:
        return 2 * y * (3 * a2 * y + a + params.sigma)
    if fam is Family.TILDE4:
        return y * y * (2 * y * (k2 + a2) * x2 + k2 * x2)
    if fam is Family.NL1:
        return 2 * y * (3 * y * (k2 + a2) + 2 * k2)
    if fam is Family.NL2:
        return k2 * y * (3 * y + 2)
    return 2 * a * y * (1 + 6 * a * y)


def solve_threshold(family: Family | str, target: float, params: BetaParams) -> float:
    """Unique ``y > 0`` with ``beta(y) == target``.

    Geometric bracketing from ``y = 1e-8`` followed by bisection to a relative
    width of 1e-12.
    """
    if not target > 0 or not math.isfinite(target):
        raise ValueError(f"target must be positive and finite, got {target!r}")

    def f(y):
        return beta_eval(family, y, params)

    hi = ROOT_START
    # the float exponent range bounds both searches
    for _ in range(2200):
        if f(hi) >= target:
            break
        hi *= 2.0
    else:
        raise ArithmeticError(f"{family}: beta never reaches {target:g}; is it identically zero?")
    lo = hi / 2.0
    for _ in range(2200):
        if f(lo) < target or lo == 0.0:
            break
        hi, lo = lo, lo / 2.0
    for _ in range(ROOT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= ROOT_RTOL * hi:
            break
    y = 0.5 * (lo + hi)
    return y


def _root(name: str, family: Family, target: float, params: BetaParams) -> dict:
    y = solve_threshold(family, target, params)
    value = beta_eval(family, y, params)
    resid = abs(value - target) / target
    if resid > ROOT_RESIDUAL_TOL:
        raise ArithmeticError(f"root {name} residual {resid:.2e} exceeds tolerance")
    return {"name": name, "family": family.value, "target": target, "root": y, "residual": resid}


# ---------------------------------------------------------------------------
# report

class Scenario(str, enum.Enum):
    QL_BOUNDED = "ql_bounded"
    QL_UNBOUNDED = "ql_unbounded"
    QL_STABLE = "ql_stable"
    QL_UNSTABLE = "ql_unstable"
    NL_STABLE = "nl_stable"
    NL_STABLE_P_GE_THETA = "nl_stable_p_ge_theta"


@dataclass
class DesignReport:
    scenario: Scenario
    variant: Variant | None = None
    sigma: float | None = None
    tau_sampling_max: float | None = None
    tau_plus_lag_max: float | None = None
    zeta: float | None = None
    exponents: dict[str, float] = field(default_factory=dict)
    divergence_rate: float | None = None
    roots: list[dict] = field(default_factory=list)
    hypotheses: dict[str, bool] = field(default_factory=dict)
    intermediate: dict[str, Any] = field(default_factory=dict)
    admissible: bool | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, enum.Enum):
                return v.value
            if isinstance(v, dict):
                return {str(k): clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, np.generic):
                return v.item()
            if isinstance(v, float) and math.isinf(v):
                return "inf" if v > 0 else "-inf"
            return v

        return clean({
            "scenario": self.scenario,
            "variant": self.variant,
            "sigma": self.sigma,
            "tau_sampling_max": self.tau_sampling_max,
            "tau_plus_lag_max": self.tau_plus_lag_max,
            "zeta": self.zeta,
            "exponents": self.exponents,
            "divergence_rate": self.divergence_rate,
            "roots": self.roots,
            "hypotheses": self.hypotheses,
            "intermediate": self.intermediate,
            "admissible": self.admissible,
            "notes": self.notes,
        })

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


class _Checks:
    """Hypothesis checklist; a failure raises with the checklist attached."""

    def __init__(self):
        self.results: dict[str, bool] = {}

    def require(self, condition: str, ok: bool, detail: str = "", exc=HypothesisViolated):
        self.results[condition] = bool(ok)
        if not ok:
            err = exc(condition, detail)
            err.checks = dict(self.results)
            raise err


def _pi_dot(G: GeneratorMatrix, v: np.ndarray) -> float:
    return float(stationary_distribution(G) @ v)


def _stable_core(G, gains: ControlGains, h: np.ndarray, hname: str, checks: _Checks,
                 variant: Variant) -> tuple[float, Any]:
    """Check ``pi.alpha > pi.h`` and ``kappa_{alpha-h} > 2``; return the
    half-interval ``tau_bar(2, alpha-h)/2`` and ``zeta`` there."""
    if h.shape[0] != G.n_states or gains.alpha.shape[0] != G.n_states:
        raise ValueError("gain and coefficient vectors need one entry per mode")
    pa, ph = _pi_dot(G, gains.alpha), _pi_dot(G, h)
    checks.require(f"pi.alpha > pi.{hname}", pa > ph, f"pi.alpha = {pa:.6g}, pi.{hname} = {ph:.6g}")
    k = kappa(G, gains.alpha - h)
    checks.require(f"kappa_(alpha-{hname}) > 2", k > 2, f"kappa = {k:.6g}")
    probe = zeta(G, gains.alpha, h, 2.0, 0.0, variant)
    half = probe.tau_bar / 2.0
    return half, zeta(G, gains.alpha, h, 2.0, half, variant)


def _spectral_block(z) -> dict:
    d = z.to_dict()
    d.pop("tau")
    return d


def _x0_sq(x0) -> float:
    return float(np.sum(np.asarray(x0, dtype=float) ** 2))


def _sigma_in(checks: _Checks, sigma: float, upper: float, label: str):
    checks.require(f"0 < sigma < {label}", 0 < sigma < upper,
                   f"sigma = {sigma:g}, {label} = {upper:.6g}", exc=SigmaOutOfRange)


def _user_tau(checks: _Checks, tau: float | None, tau_max: float, label: str) -> float:
    if tau is None:
        return tau_max
    checks.require(f"0 < tau <= {label}", 0 < tau <= tau_max * (1 + 1e-12),
                   f"tau = {tau:g}, {label} = {tau_max:.6g}")
    return float(tau)


# ---------------------------------------------------------------------------
# quasi-linear systems

def design_ql_bounded(G: GeneratorMatrix, gains: ControlGains, bounds: QuasiLinearBounds,
                      variant: Variant = Variant.FORMULA_B) -> DesignReport:
    """Bounds under which ``sup_t E|x(t)|^2 < inf`` (upper coefficients ``D``)."""
    if bounds.D is None:
        raise ValueError("bounded-moment design needs the upper coefficients D")
    checks = _Checks()
    variant = Variant(variant)
    tau_tilde, z = _stable_core(G, gains, bounds.D, "D", checks, variant)
    a = gains.alpha_max
    zt = z.zeta
    params = BetaParams(alpha_max=a, k=bounds.k_bar)
    den = 8 * a * a + zt * zt
    roots = [
        _root("y1", Family.BAR1, zt * zt / (2 * den), params),
        _root("y2", Family.BAR2, zt * zt / den, params),
    ]
    return DesignReport(
        scenario=Scenario.QL_BOUNDED,
        variant=variant,
        tau_sampling_max=tau_tilde,
        tau_plus_lag_max=min(r["root"] for r in roots),
        zeta=zt,
        roots=roots,
        hypotheses=checks.results,
        intermediate=_spectral_block(z),
        admissible=True,
    )


def design_ql_unbounded(G: GeneratorMatrix, gains: ControlGains, bounds: QuasiLinearBounds,
                        x0=1.0) -> DesignReport:
    """Lag bound under which weak gains leave ``E|x(t)|^2`` unbounded."""
    if bounds.d is None or bounds.e is None:
        raise ValueError("unbounded-moment design needs the lower coefficients d and e")
    checks = _Checks()
    ups = _pi_dot(G, bounds.d) - _pi_dot(G, gains.alpha)
    checks.require("upsilon = pi.d - pi.alpha > 0", ups > 0, f"upsilon = {ups:.6g}")
    e_min, d_max = float(bounds.e.min()), float(bounds.d.max())
    checks.require("min e > 0", e_min > 0)
    checks.require("max d > 0", d_max > 0)
    a = gains.alpha_max
    x2 = _x0_sq(x0)
    den = 2 * a * a + ups * ups
    params = BetaParams(alpha_max=a, k=bounds.k_bar, upsilon=ups, x0_sq=x2)
    roots = [
        _root("y3", Family.BAR1, ups * min(e_min, ups / 2) / den, params),
        _root("y4", Family.BAR3, ups * ups / den, params),
        _root("y5", Family.BAR4, ups * (e_min / (2 * d_max) + x2) / den, params),
    ]
    return DesignReport(
        scenario=Scenario.QL_UNBOUNDED,
        tau_plus_lag_max=min(r["root"] for r in roots),
        divergence_rate=ups / 4,
        roots=roots,
        hypotheses=checks.results,
        intermediate={"upsilon": ups, "e_min": e_min, "d_max": d_max, "x0_sq": x2},
        admissible=True,
    )


def design_ql_stable(G: GeneratorMatrix, gains: ControlGains, bounds: QuasiLinearBounds,
                     sigma: float, tau: float | None = None, tau0: float | None = None,
                     variant: Variant = Variant.FORMULA_B) -> DesignReport:
    """Mean-square and almost-sure exponential stability bounds.

    ``tau`` defaults to the largest admissible sampling interval.
    """
    if bounds.D is None:
        raise ValueError("stability design needs the upper coefficients D")
    checks = _Checks()
    variant = Variant(variant)
    tau_tilde, z_max = _stable_core(G, gains, bounds.D, "D", checks, variant)
    _sigma_in(checks, sigma, z_max.zeta, "zeta(tau_tilde)")
    tau = _user_tau(checks, tau, tau_tilde, "tau_tilde")
    z = zeta(G, gains.alpha, bounds.D, 2.0, tau, variant)
    a = gains.alpha_max
    target = sigma * sigma / (8 * a * a + sigma * sigma)
    params = BetaParams(alpha_max=a, k=bounds.k_bar)
    roots = [_root("y6", Family.TILDE1, target, params), _root("y7", Family.TILDE2, target, params)]
    tau_star = min(r["root"] for r in roots)
    rate = z.zeta - sigma
    rep = DesignReport(
        scenario=Scenario.QL_STABLE,
        variant=variant,
        sigma=sigma,
        tau_sampling_max=tau_tilde,
        tau_plus_lag_max=tau_star,
        zeta=z.zeta,
        exponents={"ms": -rate, "as": -rate / 2},
        roots=roots,
        hypotheses=checks.results,
        intermediate={**_spectral_block(z), "tau": tau, "zeta_at_tau_max": z_max.zeta},
    )
    rep.admissible = True if tau0 is None else tau + tau0 <= tau_star
    return rep


def design_ql_unstable(G: GeneratorMatrix, gains: ControlGains, bounds: QuasiLinearBounds,
                       sigma: float, x0=1.0) -> DesignReport:
    """Lag bound under which ``E|x(t)|^2`` grows at least like ``exp(2(pi.d - pi.alpha - sigma) t)``."""
    if bounds.d is None:
        raise ValueError("instability design needs the lower coefficients d")
    checks = _Checks()
    gap = _pi_dot(G, bounds.d) - _pi_dot(G, gains.alpha)
    checks.require("pi.alpha < pi.d", gap > 0, f"pi.d - pi.alpha = {gap:.6g}")
    _sigma_in(checks, sigma, gap, "pi.d - pi.alpha")
    a = gains.alpha_max
    x2 = _x0_sq(x0)
    den = 2 * a * a + sigma * sigma
    params = BetaParams(alpha_max=a, k=bounds.k_bar, sigma=sigma, x0_sq=x2)
    roots = [
        _root("y8", Family.TILDE1, sigma * sigma / den, params),
        _root("y9", Family.TILDE3, sigma * sigma / den, params),
    ]
    notes = []
    if x2 == 0:
        roots.append({"name": "y10", "family": Family.TILDE4.value, "target": 0.0, "root": 0.0,
                      "residual": 0.0})
        notes.append("x0 = 0: the trivial solution stays at the origin, the lag bound degenerates to 0")
    else:
        roots.append(_root("y10", Family.TILDE4, sigma * x2 / den, params))
    tau_star = min(r["root"] for r in roots)
    return DesignReport(
        scenario=Scenario.QL_UNSTABLE,
        sigma=sigma,
        tau_plus_lag_max=tau_star,
        divergence_rate=2 * (gap - sigma),
        roots=roots,
        hypotheses=checks.results,
        intermediate={"pi_d_minus_pi_alpha": gap, "x0_sq": x2},
        admissible=tau_star > 0,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# nonlinear systems

def vartheta(sigma: float, alpha_max: float, rho: float, a_max: float) -> float:
    """Weight of the delay functional in the general nonlinear design."""
    if not sigma > 0 or rho < 2:
        raise ValueError("need sigma > 0 and rho >= 2")
    return sigma / 2 + alpha_max ** 2 * ((5 * rho + 4) * sigma + 8 * (rho - 2) * a_max) / sigma ** 2


def vartheta_p_ge_theta(sigma: float, alpha_max: float, theta: float, a_max: float, b_min: float) -> float:
    """Weight of the delay functional when ``p >= theta``."""
    return sigma / 2 + alpha_max ** 2 * (theta * b_min + 2 * (theta - 2) * a_max) / (sigma * b_min)


def lambda_coef(sigma: float, rho: float, a_max: float) -> float:
    return 1 + rho + 2 * (rho - 2) * a_max / sigma


def moment_exponent_ladder(zeta_value: float, sigma: float, p: float, rho: float,
                           qs: Iterable[float]) -> dict[float, float]:
    """Decay-rate bound for ``E|x|^q``, ``2 <= q < p``.

    For ``q`` in ``(2, rho)`` with ``rho < p`` the linear interpolation
    ``-(q/rho)(zeta - sigma)`` is used as well; see :func:`ladder_is_extension`.
    """
    if not 0 < sigma < zeta_value:
        raise ValueError("need 0 < sigma < zeta")
    gap = zeta_value - sigma
    out = {}
    for q in qs:
        q = float(q)
        if not 2 <= q < p:
            raise QOutOfRange(f"q = {q:g} outside [2, {p:g})")
        if q == 2:
            out[q] = -gap
        elif q <= rho:
            out[q] = -(q / rho) * gap
        else:
            out[q] = -((p - q) / (p - rho)) * gap
    return out


def ladder_is_extension(q: float, p: float, rho: float) -> bool:
    return 2 < q < rho and rho < p


def _ladder_qs(p: float, rho: float) -> list[float]:
    qs = {2.0, float(rho)} | {float(q) for q in range(3, math.ceil(p)) if q < p}
    return sorted(q for q in qs if 2 <= q < p)


def _nl_common(G, gains: ControlGains, bounds: NonlinearBounds, sigma: float, tau, tau0,
               variant: Variant, checks: _Checks) -> tuple[float, Any, Any]:
    if bounds.A.shape[0] != G.n_states:
        raise ValueError("A and B need one entry per mode")
    tau_prime, z_max = _stable_core(G, gains, bounds.A, "A", checks, variant)
    b_min = float(bounds.B.min())
    upper = min(z_max.zeta, 2 * b_min)
    _sigma_in(checks, sigma, upper, "min(zeta(tau'), 2 min B)")
    tau = _user_tau(checks, tau, tau_prime, "tau'")
    z = zeta(G, gains.alpha, bounds.A, 2.0, tau, variant)
    return tau_prime, z_max, z


def _nl_exponents(z, sigma: float, bounds: NonlinearBounds, rho: float, notes: list[str]) -> dict:
    rate = z.zeta - sigma
    ex = {"ms_q2": -rate, f"ms_q{rho:g}": -rate, "as": -rate / 2}
    ladder = moment_exponent_ladder(z.zeta, sigma, bounds.p, rho, _ladder_qs(bounds.p, rho))
    for q, v in ladder.items():
        ex[f"xi_q{q:g}"] = v
        if ladder_is_extension(q, bounds.p, rho):
            notes.append(f"xi_q{q:g}: interpolated on (2, rho) although rho < p (extension)")
    v = 2 * max(bounds.q1, bounds.q2)
    if bounds.p > v:
        xi_v = moment_exponent_ladder(z.zeta, sigma, bounds.p, rho, [v])[v]
        ex["xi_v"] = xi_v
        notes.append(f"almost-sure rate from the moment ladder at v = {v:g} is xi_v = {xi_v:.6g}; "
                     "the headline 'as' rate uses the halving rule -(zeta - sigma)/2")
    return ex


def design_nl_stable(G: GeneratorMatrix, gains: ControlGains, bounds: NonlinearBounds,
                     sigma: float, tau: float | None = None, tau0: float | None = None,
                     variant: Variant = Variant.FORMULA_B) -> DesignReport:
    """Exponential stability of the controlled highly nonlinear system.

    ``tau`` defaults to ``tau' = tau_bar(2, alpha - A)/2``.  When ``tau0`` is
    given, ``admissible`` reports whether ``tau + tau0 < tau**(sigma)``.
    """
    checks = _Checks()
    variant = Variant(variant)
    tau_prime, z_max, z = _nl_common(G, gains, bounds, sigma, tau, tau0, variant, checks)
    rho = bounds.rho
    a = gains.alpha_max
    a_max, b_min = float(bounds.A.max()), float(bounds.B.min())
    th = vartheta(sigma, a, rho, a_max)
    lam = lambda_coef(sigma, rho, a_max)
    params = BetaParams(alpha_max=a, k=bounds.k)
    roots = [
        _root("ybar1", Family.NL1, sigma / (2 * th), params),
        _root("ybar2", Family.NL2, rho * (2 * b_min - sigma) / (2 * th), params),
        _root("ybar3", Family.NL3, sigma / (2 * th), params),
    ]
    tau_ss = min(r["root"] for r in roots)
    notes: list[str] = []
    rep = DesignReport(
        scenario=Scenario.NL_STABLE,
        variant=variant,
        sigma=sigma,
        tau_sampling_max=tau_prime,
        tau_plus_lag_max=tau_ss,
        zeta=z.zeta,
        roots=roots,
        hypotheses=checks.results,
        intermediate={
            **_spectral_block(z),
            "tau": z.tau,
            "zeta_at_tau_max": z_max.zeta,
            "rho": rho,
            "vartheta": th,
            "lambda": lam,
            "integral_moment_order": rho + bounds.theta - 2,
        },
        notes=notes,
    )
    rep.exponents = _nl_exponents(z, sigma, bounds, rho, notes)
    rep.admissible = True if tau0 is None else z.tau + tau0 < tau_ss
    rep.intermediate["integral_finite"] = rep.admissible
    return rep


def design_nl_stable_p_ge_theta(G: GeneratorMatrix, gains: ControlGains, bounds: NonlinearBounds,
                                sigma: float, tau: float | None = None, tau0: float | None = None,
                                variant: Variant = Variant.FORMULA_B) -> DesignReport:
    """As :func:`design_nl_stable` with the sharper weight available when ``p >= theta``."""
    checks = _Checks()
    variant = Variant(variant)
    checks.require("p >= theta", bounds.p >= bounds.theta, f"p = {bounds.p:g}, theta = {bounds.theta:g}")
    tau_prime, z_max, z = _nl_common(G, gains, bounds, sigma, tau, tau0, variant, checks)
    theta = bounds.theta
    a = gains.alpha_max
    a_max, b_min = float(bounds.A.max()), float(bounds.B.min())
    th1 = vartheta_p_ge_theta(sigma, a, theta, a_max, b_min)
    params = BetaParams(alpha_max=a, k=bounds.k)
    roots = [
        _root("ybar1'", Family.NL1, sigma * (theta - 2) * a_max / (4 * b_min * th1), params),
        _root("ybar2'", Family.NL2, theta * (2 * b_min - sigma) / (2 * th1), params),
        _root("ybar3'", Family.NL3, sigma / (2 * th1), params),
    ]
    tau_ss = min(r["root"] for r in roots)
    notes: list[str] = []
    rep = DesignReport(
        scenario=Scenario.NL_STABLE_P_GE_THETA,
        variant=variant,
        sigma=sigma,
        tau_sampling_max=tau_prime,
        tau_plus_lag_max=tau_ss,
        zeta=z.zeta,
        roots=roots,
        hypotheses=checks.results,
        intermediate={
            **_spectral_block(z),
            "tau": z.tau,
            "zeta_at_tau_max": z_max.zeta,
            "rho": theta,
            "vartheta1": th1,
            "integral_moment_order": 2 * theta - 2,
        },
        notes=notes,
    )
    rep.exponents = _nl_exponents(z, sigma, bounds, theta, notes)
    rep.admissible = True if tau0 is None else z.tau + tau0 < tau_ss
    rep.intermediate["integral_finite"] = rep.admissible
    return rep


# ---------------------------------------------------------------------------
# numeric spot check of the coefficient assumptions

@dataclass
class InequalityCheck:
    name: str
    n_samples: int
    n_violations: int
    worst_margin: float
    worst_at: tuple[float, int, float] | None  # (|x|, mode, t)

    @property
    def ok(self) -> bool:
        return self.n_violations == 0


@dataclass
class AssumptionReport:
    checks: list[InequalityCheck]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def n_violations(self) -> int:
        return sum(c.n_violations for c in self.checks)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": [c.__dict__ | {"ok": c.ok} for c in self.checks]}


def verify_assumptions(model, bounds: QuasiLinearBounds | NonlinearBounds, xs,
                       modes: Sequence[int] | None = None, times: Sequence[float] = (0.0,)) -> AssumptionReport:
    """Evaluate every inequality implied by ``bounds`` at each ``(x, mode, t)``.

    ``xs`` is an array of states, shape ``(K,)`` for scalar systems or
    ``(K, n)``.  Violations are reported, never raised.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 1:
        xs = xs[:, None]
    n_modes = model.n_modes
    modes = range(n_modes) if modes is None else modes
    acc: dict[str, list] = {}

    def record(name, margin, nx, mode, t):
        slot = acc.setdefault(name, [0, 0, math.inf, None])
        slot[0] += margin.size
        slot[1] += int(np.count_nonzero(margin < 0))
        k = int(np.argmin(margin))
        if margin[k] < slot[2]:
            slot[2] = float(margin[k])
            slot[3] = (float(nx[k]), int(mode), float(t))

    for t in times:
        for i in modes:
            mvec = np.full(xs.shape[0], i, dtype=np.int64)
            f = model.drift(xs, mvec, t)
            g = model.diffusion(xs, mvec, t)
            nx = np.linalg.norm(xs, axis=1)
            nf = np.linalg.norm(f, axis=1)
            ng2 = np.sum(g.reshape(g.shape[0], -1) ** 2, axis=1)
            xf = np.sum(xs * f, axis=1)

            def margin(lhs, rhs):
                slack = 1e-9 * (1.0 + np.abs(lhs) + np.abs(rhs))
                return rhs - lhs + slack

            if isinstance(bounds, NonlinearBounds):
                b = bounds
                record("growth_f", margin(nf, b.k * (nx + nx ** b.q1)), nx, i, t)
                record("growth_g", margin(np.sqrt(ng2), b.k * (nx + nx ** b.q2)), nx, i, t)
                lhs = xf + 0.5 * (b.p - 1) * ng2
                rhs = b.A[i] * nx ** 2 - b.B[i] * nx ** b.theta
                record("khasminskii", margin(lhs, rhs), nx, i, t)
                if b.c > 0:
                    record("khasminskii_with_constant", margin(lhs, b.c + rhs), nx, i, t)
            else:
                b = bounds
                cap = b.k_bar * (nx if b.homogeneous else 1.0 + nx)
                record("growth", margin(np.maximum(nf, np.sqrt(ng2)), cap), nx, i, t)
                lhs = xf + 0.5 * ng2
                if b.D is not None:
                    e = 0.0 if b.E is None else b.E[i]
                    record("upper", margin(lhs, e + b.D[i] * nx ** 2), nx, i, t)
                if b.d is not None:
                    e = 0.0 if b.e is None else b.e[i]
                    record("lower", margin(b.d[i] * nx ** 2 + e, lhs), nx, i, t)
    return AssumptionReport([InequalityCheck(k, *v) for k, v in acc.items()])
