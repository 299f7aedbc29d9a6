from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from switchstab.chain import validate_generator
from switchstab.designer import (
    BetaParams,
    ControlGains,
    Family,
    NonlinearBounds,
    QuasiLinearBounds,
    beta_eval,
    design_nl_stable,
    design_nl_stable_p_ge_theta,
    design_ql_bounded,
    design_ql_stable,
    design_ql_unbounded,
    design_ql_unstable,
    lambda_coef,
    moment_exponent_ladder,
    solve_threshold,
    vartheta,
    vartheta_p_ge_theta,
    verify_assumptions,
)
from switchstab.errors import HypothesisViolated, QOutOfRange, SigmaOutOfRange, UnknownFamily
from switchstab.models import FunctionModel
from switchstab.spectral import zeta

P = BetaParams(alpha_max=2.0, k=3.0, upsilon=0.5, sigma=0.25, x0_sq=4.0)

# hand evaluations at y = 0.5 with a = 2, K = 3, u = 0.5, s = 0.25, |x0|^2 = 4
HAND = {
    Family.BAR1: 2 * 0.5 * (2 * 0.5 * 13 + 9),            # 22
    Family.BAR2: 2 * 2 * 0.5 * (4 * 2 * 0.5 + 1),          # 10
    Family.BAR3: 0.5 * (8 * 4 * 0.5 + 4 + 0.75),           # 10.375
    Family.BAR4: 0.25 * (3 * 0.5 * 13 * 4 + 2 * 9 * 4 + 9 * 3.5),
    Family.TILDE1: 0.5 * (3 * 0.5 * 13 + 9),
    Family.TILDE2: 2 * 2 * 0.5 * (3 * 2 * 0.5 + 1),
    Family.TILDE3: 2 * 0.5 * (3 * 4 * 0.5 + 2 + 0.25),
    Family.TILDE4: 0.25 * (2 * 0.5 * 13 * 4 + 9 * 4),
    Family.NL1: 2 * 0.5 * (3 * 0.5 * 13 + 18),
    Family.NL2: 9 * 0.5 * (1.5 + 2),
    Family.NL3: 2 * 2 * 0.5 * (1 + 6 * 2 * 0.5),
}


@pytest.mark.parametrize("family", list(Family))
def test_beta_hand_values(family):
    assert beta_eval(family, 0.5, P) == pytest.approx(HAND[family], rel=1e-15)
    assert beta_eval(family, 0.0, P) == 0.0


def test_unknown_family():
    with pytest.raises(UnknownFamily):
        beta_eval("bar9", 1.0, P)


@settings(max_examples=300, deadline=None)
@given(family=st.sampled_from(list(Family)), log_y=st.floats(-12, 3))
def test_threshold_round_trip(family, log_y):
    y = 10.0 ** log_y
    assert solve_threshold(family, beta_eval(family, y, P), P) == pytest.approx(y, rel=1e-10)


def test_threshold_tiny_target():
    y = solve_threshold(Family.NL3, 1e-300, P)
    assert y > 0
    assert beta_eval(Family.NL3, y, P) == pytest.approx(1e-300, rel=1e-10)


def test_threshold_rejects_bad_targets():
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(ValueError):
            solve_threshold(Family.BAR1, bad, P)
    with pytest.raises(ArithmeticError):
        solve_threshold(Family.BAR2, 1.0, BetaParams(alpha_max=0.0, k=1.0))


def test_vartheta_values():
    assert vartheta_p_ge_theta(1.0, 2.0, 4.0, 1.0, 1.0) == pytest.approx(32.5)
    # example case 1: 1 + 36 * (24 * 2 + 8 * 2 * 4) / 4
    assert vartheta(2.0, 6.0, 4.0, 4.0) == pytest.approx(1009.0)
    assert lambda_coef(2.0, 4.0, 4.0) == pytest.approx(13.0)


def test_synthetic_p_equals_theta_roots():
    G = validate_generator([[-1.0, 1.0], [1.0, -1.0]])
    nb = NonlinearBounds(k=1.0, q1=1.0, q2=1.0, p=4.0, theta=4.0, A=(1.0, 1.0), B=(1.0, 1.0))
    rep = design_nl_stable_p_ge_theta(G, ControlGains([2.0, 2.0]), nb, 1.0)
    assert rep.intermediate["vartheta1"] == pytest.approx(32.5)
    assert rep.intermediate["rho"] == 4.0
    for r in rep.roots:
        assert r["residual"] <= 1e-10
    gen = design_nl_stable(G, ControlGains([2.0, 2.0]), nb, 1.0)
    assert gen.intermediate["rho"] == 4.0 and gen.tau_plus_lag_max != rep.tau_plus_lag_max


def test_p_ge_theta_lag_bound_shrinks_with_theta():
    G = validate_generator([[-1.0, 1.0], [1.0, -1.0]])
    gains = ControlGains([2.0, 2.0])
    vals = []
    for theta in (2.5, 2.1, 2.01, 2.001):
        nb = NonlinearBounds(k=1.0, q1=1.0, q2=1.0, p=4.0, theta=theta, A=(1.0, 1.0), B=(1.0, 1.0))
        rep = design_nl_stable_p_ge_theta(G, gains, nb, 1.0)
        vals.append(next(r["root"] for r in rep.roots if r["name"] == "ybar1'"))
    assert all(a > b for a, b in zip(vals, vals[1:])) and vals[-1] < 1e-3


def test_ladder_branches():
    lad = moment_exponent_ladder(5.8345, 2.0, 7.0, 4.0, [2, 4, 6])
    assert lad[2.0] == pytest.approx(-3.8345)
    assert lad[4.0] == pytest.approx(-3.8345)
    assert lad[6.0] == pytest.approx(-3.8345 / 3, rel=1e-12)
    # continuity at rho from both sides
    left = moment_exponent_ladder(5.8345, 2.0, 7.0, 4.0, [4.0 - 1e-9])[4.0 - 1e-9]
    right = moment_exponent_ladder(5.8345, 2.0, 7.0, 4.0, [4.0 + 1e-9])[4.0 + 1e-9]
    assert left == pytest.approx(right, abs=1e-8)
    upper = moment_exponent_ladder(5.8345, 2.0, 7.0, 4.0, np.linspace(4.0, 6.9, 30))
    assert np.all(np.diff(list(upper.values())) >= 0)


@pytest.mark.parametrize("q", [1.5, 7.0, 8.0])
def test_ladder_out_of_range(q):
    with pytest.raises(QOutOfRange):
        moment_exponent_ladder(5.0, 1.0, 7.0, 4.0, [q])


def test_case1_general_report(gamma, example_model):
    rep = design_nl_stable(gamma, ControlGains([6, 6]), example_model.declared_bounds, 2.0, 1e-4, 1.7e-4)
    assert rep.zeta == pytest.approx(5.8345, rel=1e-3)
    assert rep.exponents["ms_q2"] == pytest.approx(2 * rep.exponents["as"], rel=1e-15)
    assert rep.exponents["xi_q6"] == pytest.approx(-rep.exponents["ms_q2"] * -1 / 3, rel=1e-12)
    assert rep.exponents["xi_v"] == rep.exponents["xi_q6"]
    assert rep.intermediate["integral_moment_order"] == 6
    assert all(r["residual"] <= 1e-10 for r in rep.roots)
    # the general weight is much larger than the p >= theta one, so tau** is
    # about ten times smaller and the chosen lag is not covered by it
    assert rep.tau_plus_lag_max == pytest.approx(2.7524e-5, rel=1e-4)
    assert rep.admissible is False
    assert any("extension" in n for n in rep.notes)


def test_p_ge_theta_reproduces_reference_lag_bounds(gamma, example_model):
    c1 = design_nl_stable_p_ge_theta(gamma, ControlGains([6, 6]), example_model.declared_bounds, 2.0, 1e-4, 1.7e-4)
    c2 = design_nl_stable_p_ge_theta(gamma, ControlGains([9, 0]), example_model.declared_bounds, 0.5, 3e-6, 2.8e-6)
    assert c1.tau_plus_lag_max == pytest.approx(2.78e-4, rel=5e-3)
    assert c2.tau_plus_lag_max == pytest.approx(5.83e-6, rel=5e-3)
    assert c1.admissible and c2.admissible


def test_nl_hypothesis_failures(gamma, example_model):
    b = example_model.declared_bounds
    with pytest.raises(HypothesisViolated, match="pi.alpha > pi.A") as ei:
        design_nl_stable(gamma, ControlGains([1, 1]), b, 0.5)
    assert ei.value.checks == {"pi.alpha > pi.A": False}
    with pytest.raises(SigmaOutOfRange):
        design_nl_stable(gamma, ControlGains([6, 6]), b, 3.5)
    with pytest.raises(HypothesisViolated, match="tau"):
        design_nl_stable(gamma, ControlGains([6, 6]), b, 2.0, tau=0.02)
    # alpha = (5, 0) keeps pi.alpha = 10/3 > 3 but kappa_(alpha-A) = 1
    with pytest.raises(HypothesisViolated, match="kappa") as ei:
        design_nl_stable(gamma, ControlGains([5, 0]), b, 0.1)
    assert ei.value.checks == {"pi.alpha > pi.A": True, "kappa_(alpha-A) > 2": False}


def test_p_below_theta_rejected_by_p_ge_theta_design(gamma):
    nb = NonlinearBounds(k=3.0, q1=1.0, q2=1.0, p=3.0, theta=4.0, A=(2.5, 4.0), B=(1.5, 2.0))
    with pytest.raises(HypothesisViolated, match="p >= theta"):
        design_nl_stable_p_ge_theta(gamma, ControlGains([6, 6]), nb, 1.0)


def test_nonlinear_bounds_validation():
    with pytest.raises(ValueError):
        NonlinearBounds(k=1, q1=3, q2=1, p=5, theta=4, A=(1,), B=(1,))  # p < 2 max q
    with pytest.raises(ValueError):
        NonlinearBounds(k=1, q1=3, q2=1, p=7, theta=3.5, A=(1,), B=(1,))  # theta < q + 1
    with pytest.raises(ValueError):
        NonlinearBounds(k=1, q1=1, q2=1, p=4, theta=3, A=(1, 1), B=(1,))


QL_G = validate_generator([[-2.0, 2.0], [1.0, -1.0]])


def test_ql_bounded_targets_and_roots():
    qb = QuasiLinearBounds(k_bar=2.0, D=(1.0, 0.5))
    rep = design_ql_bounded(QL_G, ControlGains([4.0, 3.0]), qb)
    z = zeta(QL_G, [4.0, 3.0], [1.0, 0.5], 2.0, rep.tau_sampling_max)
    assert rep.zeta == pytest.approx(z.zeta)
    assert rep.tau_sampling_max == pytest.approx(z.tau_bar / 2)
    den = 8 * 16 + z.zeta ** 2
    assert rep.roots[0]["target"] == pytest.approx(z.zeta ** 2 / (2 * den))
    assert rep.roots[1]["target"] == pytest.approx(z.zeta ** 2 / den)
    assert rep.tau_plus_lag_max == min(r["root"] for r in rep.roots)


def test_ql_stable_monotone_in_sigma():
    qb = QuasiLinearBounds(k_bar=2.0, D=(1.0, 0.5))
    gains = ControlGains([4.0, 3.0])
    top = design_ql_bounded(QL_G, gains, qb).zeta
    sig = np.linspace(0.05, 0.95, 10) * top
    taus = [design_ql_stable(QL_G, gains, qb, s).tau_plus_lag_max for s in sig]
    assert np.all(np.diff(taus) > 0) and taus[0] > 0
    rep = design_ql_stable(QL_G, gains, qb, sig[3], tau=1e-3)
    assert rep.exponents["ms"] == 2 * rep.exponents["as"] < 0
    with pytest.raises(SigmaOutOfRange):
        design_ql_stable(QL_G, gains, qb, 1.01 * top)


def test_nl_lag_bound_monotone_in_sigma(gamma, example_model):
    taus = [design_nl_stable(gamma, ControlGains([6, 6]), example_model.declared_bounds, s).tau_plus_lag_max
            for s in np.linspace(0.05, 1.5, 12)]
    # near sigma = 2 min B the second target shrinks again, so only the
    # approach to 0 is monotone
    assert np.all(np.diff(taus) > 0)


def test_ql_unbounded_and_unstable():
    qb = QuasiLinearBounds(k_bar=3.0, d=(3.0, 2.0), e=(0.5, 0.2))
    gains = ControlGains([1.0, 0.5])
    rep = design_ql_unbounded(QL_G, gains, qb, x0=[1.0])
    ups = (1 / 3) * 3 + (2 / 3) * 2 - ((1 / 3) * 1 + (2 / 3) * 0.5)
    assert rep.intermediate["upsilon"] == pytest.approx(ups)
    assert rep.divergence_rate == pytest.approx(ups / 4)
    assert all(r["residual"] <= 1e-10 for r in rep.roots)

    rep2 = design_ql_unstable(QL_G, gains, QuasiLinearBounds(k_bar=3.0, d=(3.0, 2.0)), 0.5, x0=2.0)
    assert rep2.divergence_rate == pytest.approx(2 * (ups - 0.5))
    assert rep2.roots[2]["target"] == pytest.approx(0.5 * 4.0 / (2 * 1.0 + 0.25))
    zero = design_ql_unstable(QL_G, gains, QuasiLinearBounds(k_bar=3.0, d=(3.0, 2.0)), 0.5, x0=0.0)
    assert zero.tau_plus_lag_max == 0.0 and zero.admissible is False and zero.notes
    with pytest.raises(HypothesisViolated):
        design_ql_unbounded(QL_G, ControlGains([9.0, 9.0]), qb)


def test_report_serialises(gamma, example_model):
    import json
    rep = design_nl_stable(gamma, ControlGains([6, 6]), example_model.declared_bounds, 2.0)
    d = json.loads(rep.to_json())
    assert d["intermediate"]["kappa"] == "inf"
    assert d["hypotheses"] and all(d["hypotheses"].values())


def test_assumptions_hold_for_example(example_model):
    rep = verify_assumptions(example_model, example_model.declared_bounds, np.linspace(-5, 5, 1000))
    assert rep.ok, rep.to_dict()
    assert {c.name for c in rep.checks} == {"growth_f", "growth_g", "khasminskii"}


def test_wrong_coefficients_are_reported(example_model):
    b = example_model.declared_bounds
    wrong = NonlinearBounds(k=b.k, q1=b.q1, q2=b.q2, p=b.p, theta=b.theta, A=(1.0, 1.0), B=b.B)
    rep = verify_assumptions(example_model, wrong, np.linspace(-5, 5, 1000))
    kh = next(c for c in rep.checks if c.name == "khasminskii")
    assert kh.n_violations > 0 and kh.worst_margin < 0
    # at x = 1 in mode 1: x f + 3 g^2 = -2 + 3 = 1 > A - B = -0.5
    at_one = verify_assumptions(example_model, wrong, [1.0], modes=[0])
    assert not at_one.ok
    assert verify_assumptions(example_model, b, [1.0], modes=[0]).ok


def test_zero_model_satisfies_bounds():
    zero = FunctionModel(QL_G, [lambda x, t: np.zeros(1)] * 2, [lambda x, t: np.zeros((1, 1))] * 2, 1, 1)
    nb = NonlinearBounds(k=1.0, q1=1.0, q2=1.0, p=2.0, theta=2.5, A=(1.0, 1.0), B=(1e-9, 1e-9))
    assert verify_assumptions(zero, nb, np.linspace(-1, 1, 11)).ok
    qb = QuasiLinearBounds(k_bar=1.0, D=(0.0, 0.0), d=(0.0, 0.0))
    assert verify_assumptions(zero, qb, np.linspace(-1, 1, 11)).ok
