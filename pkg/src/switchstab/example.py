"""Reproduction of the two-mode scalar example: design values and desk-scale Monte Carlo."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .chain import stationary_distribution
from .designer import ControlGains, design_nl_stable, design_nl_stable_p_ge_theta
from .estimator import estimate_ms_exponent, occupation_check, run_ensemble
from .models import two_mode_model
from .simulator import ControlLaw, SimConfig
from .spectral import Variant, kappa

CASES = {
    # gains, sigma, tau, tau0
    1: ((6.0, 6.0), 2.0, 1e-4, 1.7e-4),
    2: ((9.0, 0.0), 0.5, 3e-6, 2.8e-6),
}

# reference values: tau', zeta(tau'), zeta(tau), ms rate, a.s. rate, tau**
REFERENCE = {
    1: {"tau_prime": 9.6e-3, "zeta_tau_prime": 3.265, "zeta_tau": 5.8345, "ms": -3.8345, "as": -1.9172,
        "tau_ss": 2.78e-4},
    2: {"tau_prime": 3.73e-3, "zeta_tau_prime": 0.5626, "zeta_tau": 1.0747, "ms": -0.5747, "as": -0.2874,
        "tau_ss": 5.83e-6},
}
TOLERANCES = {"tau_prime": 0.01, "zeta_tau_prime": {1: 0.005, 2: 0.01}, "zeta_tau": 0.001, "ms": 0.001,
              "as": 0.001}

X0 = 1.0
I0 = 1  # second mode, 0-based


@dataclass
class Row:
    name: str
    value: float
    expected: float | None
    tol: float | None
    kind: str  # "rel", "abs", "le", "ge" or "info"

    @property
    def passed(self) -> bool | None:
        if self.kind == "info" or self.expected is None:
            return None
        if not math.isfinite(self.value):
            return False
        if self.kind == "rel":
            return abs(self.value - self.expected) <= self.tol * abs(self.expected)
        if self.kind == "abs":
            return abs(self.value - self.expected) <= self.tol
        if self.kind == "le":
            return self.value <= self.expected
        return self.value >= self.expected

    @property
    def deviation(self) -> float | None:
        if self.kind in ("le", "ge") or self.expected in (None, 0) or not math.isfinite(self.value):
            return None
        return (self.value - self.expected) / abs(self.expected)

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "expected": self.expected, "tol": self.tol,
                "kind": self.kind, "passed": self.passed, "deviation": self.deviation}


def case_reports(case: int, variant: Variant = Variant.FORMULA_B):
    model = two_mode_model()
    alpha, sigma, tau, tau0 = CASES[case]
    gains = ControlGains(alpha)
    general = design_nl_stable(model.generator, gains, model.declared_bounds, sigma, tau, tau0, variant)
    sharp = design_nl_stable_p_ge_theta(model.generator, gains, model.declared_bounds, sigma, tau, tau0, variant)
    return general, sharp


def design_rows(variant: Variant = Variant.FORMULA_B) -> list[Row]:
    model = two_mode_model()
    G = model.generator
    pi = stationary_distribution(G)
    rows = [
        Row("pi_1", float(pi[0]), 2 / 3, 1e-12, "abs"),
        Row("pi_2", float(pi[1]), 1 / 3, 1e-12, "abs"),
        Row("|pi G|_inf", float(np.abs(pi @ G.rates).max()), 1e-12, None, "le"),
        Row("pi.A", float(pi @ model.declared_bounds.A), 3.0, 1e-12, "abs"),
        Row("kappa(6.5, -4)", kappa(G, [6.5, -4.0]), 3.4615, 1e-3, "abs"),
    ]
    for case in (1, 2):
        general, sharp = case_reports(case, variant)
        pub = REFERENCE[case]
        got = {
            "tau_prime": general.tau_sampling_max,
            "zeta_tau_prime": general.intermediate["zeta_at_tau_max"],
            "zeta_tau": general.zeta,
            "ms": general.exponents["ms_q2"],
            "as": general.exponents["as"],
        }
        for key, value in got.items():
            tol = TOLERANCES[key]
            tol = tol[case] if isinstance(tol, dict) else tol
            rows.append(Row(f"case{case} {key}", value, pub[key], tol, "rel"))
        rows.append(Row(f"case{case} tau** general (reference {pub['tau_ss']:g})",
                        general.tau_plus_lag_max, pub["tau_ss"], None, "info"))
        rows.append(Row(f"case{case} tau** p>=theta (reference {pub['tau_ss']:g})",
                        sharp.tau_plus_lag_max, pub["tau_ss"], None, "info"))
    return rows


def pi_dot_a_is_three() -> bool:
    """Exact rational check of ``pi.A`` for the example."""
    pi = (Fraction(2, 3), Fraction(1, 3))
    return pi[0] * Fraction(5, 2) + pi[1] * 4 == 3


def controlled_ensemble(seed: int, threads: int = 1, n_paths: int = 200):
    model = two_mode_model()
    alpha, _, tau, tau0 = CASES[1]
    cfg = SimConfig(dt=1e-5, horizon=4.0, x0=[X0], i0=I0, seed=seed, record_stride=100)
    return run_ensemble(model, ControlLaw(alpha, tau, tau0), cfg, n_paths, [2.0, 6.0], threads)


def uncontrolled_ensemble(seed: int, threads: int = 1, n_paths: int = 200):
    cfg = SimConfig(dt=1e-4, horizon=10.0, x0=[X0], i0=I0, seed=seed, record_stride=10)
    return run_ensemble(two_mode_model(), None, cfg, n_paths, [2.0, 4.0], threads)


def case2_full_ensemble(seed: int, threads: int = 1, n_paths: int = 50, horizon: float = 2.0):
    # tau0 = 2.8e-6 needs a step dividing both 3e-6 and 2.8e-6
    alpha, _, tau, tau0 = CASES[2]
    cfg = SimConfig(dt=2e-7, horizon=horizon, x0=[X0], i0=I0, seed=seed, record_stride=500)
    return run_ensemble(two_mode_model(), ControlLaw(alpha, tau, tau0), cfg, n_paths, [2.0], threads)


def monte_carlo_rows(seed: int = 0, threads: int = 1, full: bool = False) -> list[Row]:
    model = two_mode_model()
    occ = occupation_check(model.generator, 1e3, range(seed, seed + 10))
    rows = [Row("occupation max deviation (10 seeds)", occ.max_deviation, 0.03, None, "le")]
    st = controlled_ensemble(seed, threads)
    est = estimate_ms_exponent(st, 2.0, (1.0, 4.0))
    rows += [
        Row("case1 MC slope log E|x|^2 on [1,4]", est.slope, -1.5, None, "le"),
        Row("case1 MC E|x(4)|^2", float(st.moment_curves[2.0][-1]), 1e-2, None, "le"),
    ]
    su = uncontrolled_ensemble(seed, threads)
    rows += [
        Row("uncontrolled MC max E|x|^4", float(np.max(su.moment_curves[4.0])), 20.0, None, "le"),
        Row("uncontrolled MC E|x(10)|^2", float(su.moment_curves[2.0][-1]), 1e-3, None, "ge"),
    ]
    if full:
        print("warning: case 2 ensemble at dt = 2e-7 takes minutes", file=sys.stderr)
        s2 = case2_full_ensemble(seed, threads)
        e2 = estimate_ms_exponent(s2, 2.0)
        rows.append(Row("case2 MC slope log E|x|^2 on [T/4,T]", e2.slope, 0.0, None, "le"))
    return rows


def format_table(rows: list[Row]) -> str:
    lines = [f"{'check':<48} {'value':>14} {'expected':>12} {'dev':>9}  result"]
    for r in rows:
        exp = "" if r.expected is None else f"{r.expected:.6g}"
        dev = "" if r.deviation is None else f"{100 * r.deviation:+.3f}%"
        verdict = {True: "pass", False: "FAIL", None: "info"}[r.passed]
        lines.append(f"{r.name:<48} {r.value:>14.6g} {exp:>12} {dev:>9}  {verdict}")
    return "\n".join(lines)
