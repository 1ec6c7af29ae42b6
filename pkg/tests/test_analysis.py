import math

import numpy as np
import pytest

from camplab.analysis import (calibrate_lambda, minimax_risk, noise_sensitivity, phase_transition,
                              phase_transition_asymptote, phase_transition_curve,
                              phase_transition_parametric, real_lasso_asymptote, rho_mse,
                              rho_of_tau_delta)
from camplab.core import chi2
from camplab.ensembles import amplitude_distribution
from camplab.errors import AbovePhaseTransitionError, DomainError
from camplab.optimize import bisect, golden_section_minimize, scan_minimize
from camplab.state_evolution import (AmplitudeDistribution, SEParams, mse_map,
                                     mse_map_derivative_at_zero, se_fixed_point)


# -- phase transition -------------------------------------------------------------

def test_phase_transition_against_dense_grid(frozen):
    ref = frozen["rho_se_0.5"]
    pt = phase_transition(0.5)
    # grid maximum can only be below the true supremum
    assert pt.rho_se >= ref["rho"] - 1e-15
    assert pt.rho_se - ref["rho"] < 1e-8
    assert abs(pt.tau_star - ref["tau"]) < 2 * ref["grid_step"]


@pytest.mark.parametrize("delta", [0.05, 0.1, 0.25, 0.5, 0.75, 0.9])
def test_phase_transition_is_where_the_derivative_hits_one(delta):
    pt = phase_transition(delta)
    assert mse_map_derivative_at_zero(delta, pt.rho_se, pt.tau_star) == pytest.approx(1.0, abs=1e-12)
    # any other threshold gives a smaller recoverable rho
    for t in (0.5 * pt.tau_star, 1.5 * pt.tau_star + 0.1):
        assert rho_of_tau_delta(t, delta) < pt.rho_se


def test_phase_transition_curve_is_increasing_and_bounded():
    deltas = np.linspace(0.02, 0.98, 25)
    rho = np.array([p.rho_se for p in phase_transition_curve(deltas)])
    assert np.all(np.diff(rho) > 0)
    assert np.all((rho > 0) & (rho < 1))


def test_phase_transition_endpoints():
    pt = phase_transition(1.0)
    assert pt.rho_se == pytest.approx(1.0, abs=1e-9)
    assert phase_transition(1e-6).rho_se > 0
    with pytest.raises(DomainError):
        phase_transition(1e-7)
    with pytest.raises(DomainError):
        phase_transition(1.5)


def test_rho_of_tau_delta_vectorised_and_tau_zero():
    taus = np.linspace(0.1, 3, 7)
    vec = rho_of_tau_delta(taus, 0.4)
    assert np.allclose(vec, [rho_of_tau_delta(t, 0.4) for t in taus])
    assert rho_of_tau_delta(0.0, 1.0) == 1.0
    assert rho_of_tau_delta(0.0, 0.5) == -math.inf


def test_parametric_form_agrees_with_the_maximisation():
    for delta in (0.1, 0.25, 0.5, 0.9):
        pt = phase_transition(delta)
        d, r = phase_transition_parametric(pt.tau_star)
        assert d == pytest.approx(delta, abs=1e-7)
        assert r == pytest.approx(pt.rho_se, abs=1e-7)


def test_statement_variant_of_parametric_form_does_not_match():
    # the 4 chi2 denominator drifts away from the optimisation result
    gaps = []
    for delta in (0.1, 0.25, 0.5):
        tau = phase_transition(delta).tau_star
        d, _ = phase_transition_parametric(tau, variant="statement")
        gaps.append(d - delta)
    assert all(g > 1e-3 for g in gaps)
    with pytest.raises(DomainError):
        phase_transition_parametric(phase_transition(0.9).tau_star, variant="statement")


def test_asymptote_ratio_monotone_towards_one():
    deltas = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
    ratios = [phase_transition(d).rho_se / phase_transition_asymptote(d) for d in deltas]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    assert all(r < 1 for r in ratios)


def test_real_lasso_curve_below_complex_curve():
    for d in (1e-3, 1e-2, 0.1):
        assert real_lasso_asymptote(d) < phase_transition_asymptote(d)


# -- minimax and noise sensitivity ---------------------------------------------------

def test_minimax_against_dense_grid(frozen):
    m, tau = minimax_risk(0.1)
    ref = frozen["minimax_0.1"]
    assert m <= ref["m"] + 1e-15
    assert ref["m"] - m < 1e-8
    assert tau == pytest.approx(ref["tau"], abs=5e-4)


def test_minimax_risk_increasing_in_eps_and_limits():
    eps = np.linspace(0.01, 0.99, 30)
    m = np.array([minimax_risk(e)[0] for e in eps])
    assert np.all(np.diff(m) > 0)
    assert minimax_risk(0.0) == (0.0, math.inf)
    assert minimax_risk(1.0)[0] == pytest.approx(1.0, abs=1e-9)


def test_rho_mse_equals_rho_se(frozen):
    assert rho_mse(0.25) == pytest.approx(frozen["rho_mse_0.25"], abs=1e-9)
    for delta in (0.1, 0.5, 0.9):
        assert rho_mse(delta) == pytest.approx(phase_transition(delta).rho_se, abs=1e-8)


def test_noise_sensitivity_value_and_monotonicity():
    res = noise_sensitivity(0.25, 0.2)
    m, _ = minimax_risk(0.05)
    assert res.value == pytest.approx(m / (1 - m / 0.25), rel=1e-12)
    vals = [noise_sensitivity(0.25, r).value for r in np.linspace(0.02, 0.33, 12)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert noise_sensitivity(0.25, 0.4).value == math.inf


def test_noise_sensitivity_is_attained_by_a_far_point_mass():
    # least-favourable input at the minimax threshold: formal MSE / sigma^2 -> NS
    delta, rho, sigma = 0.25, 0.2, 1e-2
    ns = noise_sensitivity(delta, rho)
    _, tau = minimax_risk(rho * delta)
    p = SEParams(delta=delta, rho=rho, sigma=sigma, tau=tau, amp_dist=AmplitudeDistribution.point_mass(1e3))
    assert se_fixed_point(p) / sigma ** 2 == pytest.approx(ns.value, rel=1e-3)


def _candidate_distributions():
    out = [AmplitudeDistribution.point_mass(g) for g in (0.1, 0.3, 0.5, 1, 2, 3, 5, 10, 30, 100)]
    out += [amplitude_distribution(k) for k in ("ga", "uf")]
    rng = np.random.default_rng(5)
    for _ in range(8):
        size = rng.integers(2, 6)
        out.append(AmplitudeDistribution.grid(rng.uniform(0.05, 20, size), rng.uniform(0.1, 1, size)))
    return out


def test_least_favourable_distribution_dominates_twenty_candidates():
    cands = _candidate_distributions()
    assert len(cands) == 20
    eps = 0.05
    m_flat, tau = minimax_risk(eps)
    for G in cands:
        # per-unit-npi risk of the eps-mixture, measured at unit npi
        risk = (1 - eps) * 2 * chi2(tau) + eps * G.expect(lambda mu: __import__("camplab").soft_risk(mu, tau))
        assert risk <= m_flat + 1e-10
        p = SEParams(delta=0.25, rho=eps / 0.25, sigma=0.1, tau=tau, amp_dist=G)
        for m in (1e-3, 1e-2, 0.1):
            assert mse_map(m, p) <= p.npi(m) * m_flat + 1e-12


# -- calibration ------------------------------------------------------------------

def test_calibration_against_monte_carlo(frozen):
    ref = frozen["onsager_calibration"]
    cal = calibrate_lambda(2.0, SEParams(delta=0.25, rho=0.1, sigma=0.1))
    assert cal.scale == pytest.approx(ref["scale"], rel=1e-9)
    assert abs(cal.onsager_expectation - ref["mean"]) < 4 * ref["se"]
    assert abs(cal.lam - ref["lambda"]) < 4 * ref["lambda_se"]
    assert cal.lambda_ == cal.lam


def test_calibration_scale_choice_and_errors():
    p = SEParams(delta=0.25, rho=0.1, sigma=0.1)
    a = calibrate_lambda(2.0, p)
    b = calibrate_lambda(2.0, p, scale="m")
    assert b.scale == pytest.approx(math.sqrt(a.m_star), rel=1e-12)
    assert b.lam < a.lam
    with pytest.raises(DomainError):
        calibrate_lambda(2.0, p, scale="bogus")
    with pytest.raises(AbovePhaseTransitionError):
        calibrate_lambda(2.0, SEParams(delta=0.25, rho=0.6))


def test_calibrated_lambda_positive_across_tau():
    p = SEParams(delta=0.25, rho=0.1, sigma=0.1)
    lams = [calibrate_lambda(t, p).lam for t in (1.5, 2.0, 2.5, 3.0)]
    assert all(l > 0 for l in lams)
    assert all(b > a for a, b in zip(lams, lams[1:]))


# -- optimisation helpers -----------------------------------------------------------

def test_golden_section_and_scan():
    x, fx = golden_section_minimize(lambda t: (t - 1.234) ** 2, 0, 3)
    assert x == pytest.approx(1.234, abs=1e-8) and fx < 1e-15
    # minimum at an endpoint
    x, _ = golden_section_minimize(lambda t: t, 0, 1)
    assert x == 0
    x, _ = scan_minimize(lambda t: np.cos(3 * t) + 0.1 * t, 0, 5)
    assert x == pytest.approx((math.pi - math.asin(1 / 30)) / 3, abs=1e-8)


def test_bisect_requires_sign_change():
    assert bisect(lambda t: t * t - 2, 0, 2) == pytest.approx(math.sqrt(2), abs=1e-12)
    with pytest.raises(DomainError):
        bisect(lambda t: t * t + 1, -1, 1)
