"""Analytic curves derived from state evolution.

* noise-free phase transition ``rho_SE(delta)`` and its small-delta asymptote,
* minimax risk ``M(eps)`` of complex soft thresholding,
* noise sensitivity ``NS(delta, rho)`` and the boundary ``rho_MSE(delta)``,
* the map from the threshold ratio ``tau`` to the LASSO weight ``lambda``.

The phase transition comes from maximising over ``tau`` the ``rho`` at which
``dPsi/dm`` at zero equals one::

    rho(tau, delta) = (delta - 2 chi2) / (delta (1 + tau^2 - 2 chi2))
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import chi1, chi2, onsager_expectation_unit
from .errors import DomainError
from .optimize import bisect, scan_minimize
from .state_evolution import se_fixed_point

__all__ = [
    "PhaseTransitionPoint",
    "NoiseSensitivityResult",
    "CalibrationResult",
    "rho_of_tau_delta",
    "phase_transition",
    "phase_transition_curve",
    "phase_transition_parametric",
    "phase_transition_asymptote",
    "real_lasso_asymptote",
    "minimax_risk",
    "noise_sensitivity",
    "rho_mse",
    "calibrate_lambda",
]

TAU_MAX = 20.0
DELTA_MIN = 1e-6


@dataclass(frozen=True)
class PhaseTransitionPoint:
    delta: float
    rho_se: float
    tau_star: float


@dataclass(frozen=True)
class NoiseSensitivityResult:
    value: float
    m_flat: float
    rho_boundary: float


@dataclass(frozen=True)
class CalibrationResult:
    tau: float
    lam: float
    m_star: float
    onsager_expectation: float
    scale: float

    @property
    def lambda_(self):
        return self.lam


def _check_delta(delta):
    delta = float(delta)
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"delta must lie in (0, 1], got {delta}")
    return delta


def rho_of_tau_delta(tau, delta):
    """Sparsity at which ``dPsi/dm`` at zero equals one for threshold ``tau``.

    Non-positive values mean the threshold recovers nothing at this ``delta``.
    At ``tau = 0`` the expression is ``0/0`` for ``delta = 1`` (limit 1) and
    ``-inf`` otherwise. Accepts arrays of ``tau``.
    """
    delta = _check_delta(delta)
    tau_a = np.asarray(tau, dtype=float)
    c2 = 2.0 * chi2(tau_a)
    num = delta - c2
    den = delta * (1.0 + tau_a * tau_a - c2)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    zero = tau_a == 0.0
    if np.any(zero):
        out = np.where(zero, 1.0 if delta == 1.0 else -np.inf, out)
    return float(out) if np.ndim(out) == 0 else out


def phase_transition(delta):
    """``rho_SE(delta) = sup_tau rho(tau, delta)`` and the maximiser ``tau*``.

    A 512-point scan of ``tau`` on ``[0, 20]`` is refined by golden-section to
    ``1e-10``. The result does not involve the amplitude law at all.
    """
    delta = _check_delta(delta)
    if delta < DELTA_MIN:
        raise DomainError(f"delta below the supported range [{DELTA_MIN}, 1]: {delta}")
    neg = lambda t: -rho_of_tau_delta(t, delta)
    tau, val = scan_minimize(neg, 0.0, TAU_MAX, vector_f=neg)
    return PhaseTransitionPoint(delta=delta, rho_se=-val, tau_star=tau)


def phase_transition_curve(deltas, workers=1):
    """``phase_transition`` over a grid; output ordered like the input."""
    deltas = [float(d) for d in deltas]
    if workers <= 1 or len(deltas) < 2:
        return [phase_transition(d) for d in deltas]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(phase_transition, deltas))


def phase_transition_parametric(tau, variant="proof"):
    """``(delta, rho)`` on the transition curve as explicit functions of ``tau*``.

    ``rho = chi1 / ((1 + tau^2) chi1 - tau chi2)`` and
    ``delta = (4 (1 + tau^2) chi1 - 4 tau chi2) / (D)`` where the denominator is
    ``D = 4 chi1 - 2 tau``, obtained from the stationarity condition
    ``d rho(tau, delta) / d tau = 0`` using ``chi2' = 2 chi1``.

    ``variant="statement"`` swaps ``D`` for ``4 chi2 - 2 tau``, a form that has
    circulated for the same curve. It does not satisfy the stationarity
    condition and is kept only so the two can be compared.

    Raises
    ------
    DomainError
        If the resulting ``delta`` falls outside ``(0, 1]``.
    """
    tau = float(tau)
    if not (math.isfinite(tau) and tau > 0):
        raise DomainError(f"tau must be finite and positive, got {tau}")
    c1, c2 = chi1(tau), chi2(tau)
    num = 4.0 * (1.0 + tau * tau) * c1 - 4.0 * tau * c2
    if variant == "proof":
        den = 4.0 * c1 - 2.0 * tau
    elif variant == "statement":
        den = 4.0 * c2 - 2.0 * tau
    else:
        raise DomainError(f"unknown variant {variant!r}")
    delta = num / den
    rho = c1 / ((1.0 + tau * tau) * c1 - tau * c2)
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"tau={tau} maps to delta={delta} outside (0, 1]")
    return delta, rho


def phase_transition_asymptote(delta):
    """Leading small-``delta`` behaviour ``1 / log(1 / (2 delta))``."""
    delta = float(delta)
    if not 0.0 < delta < 0.5:
        raise DomainError(f"asymptote defined for delta in (0, 1/2), got {delta}")
    return 1.0 / math.log(1.0 / (2.0 * delta))


def real_lasso_asymptote(delta):
    """Real-valued LASSO comparison curve ``1 / (2 log(1/delta))``."""
    delta = float(delta)
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    return 1.0 / (2.0 * math.log(1.0 / delta))


def minimax_risk(eps):
    """Minimax risk ``M(eps) = inf_tau 2 (1 - eps) chi2(tau) + eps (1 + tau^2)``.

    Returns
    -------
    (m_flat, tau_star) : tuple of float
        ``eps = 0`` gives ``(0, inf)`` since the infimum is approached only
        as ``tau`` grows without bound.
    """
    eps = float(eps)
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"eps must lie in [0, 1], got {eps}")
    if eps == 0.0:
        return 0.0, math.inf
    f = lambda t: 2.0 * (1.0 - eps) * chi2(t) + eps * (1.0 + t * t)
    tau, val = scan_minimize(f, 0.0, TAU_MAX, vector_f=f)
    return val, tau


def rho_mse(delta):
    """Root in ``rho`` of ``M(rho delta) = delta`` (``M`` increases with ``eps``)."""
    delta = _check_delta(delta)
    g = lambda rho: minimax_risk(rho * delta)[0] - delta
    return bisect(g, 0.0, 1.0 / delta)


def noise_sensitivity(delta, rho):
    """``NS = M(rho delta) / (1 - M(rho delta)/delta)``, infinite from ``rho_MSE`` on."""
    delta = _check_delta(delta)
    rho = float(rho)
    if rho < 0:
        raise DomainError(f"rho must be non-negative, got {rho}")
    boundary = rho_mse(delta)
    eps = rho * delta
    m_flat = minimax_risk(eps)[0] if eps <= 1.0 else math.nan
    if rho >= boundary:
        return NoiseSensitivityResult(value=math.inf, m_flat=m_flat, rho_boundary=boundary)
    return NoiseSensitivityResult(value=m_flat / (1.0 - m_flat / delta), m_flat=m_flat,
                                  rho_boundary=boundary)


def calibrate_lambda(tau, p, scale="npi"):
    """LASSO weight matching threshold ratio ``tau``.

    ``lambda = tau s (1 - E[d1R + d2I] / (2 delta))`` where the expectation is
    over ``X + s Z`` thresholded at ``tau s`` and ``s`` is ``sqrt(npi*)``
    (default) or ``sqrt(m*)`` with ``scale="m"``. ``m*`` is the SE fixed
    point of ``p`` with its threshold ratio replaced by ``tau``.

    Parameters
    ----------
    tau : float
        Threshold ratio.
    p : SEParams
        Problem parameters; ``p.tau`` is ignored.
    scale : {"npi", "m"}
        Which effective noise level sets the scale.

    Raises
    ------
    AbovePhaseTransitionError
        Noise-free and above the transition for ``tau``.
    """
    p = p.replace(tau=float(tau))
    m_star = se_fixed_point(p)
    if scale == "npi":
        s = math.sqrt(p.npi(m_star))
    elif scale == "m":
        s = math.sqrt(m_star)
    else:
        raise DomainError(f"scale must be 'npi' or 'm', got {scale!r}")
    eps = p.epsilon
    noise_part = float(onsager_expectation_unit(0.0, p.tau))
    if s == 0.0:
        # every nonzero is far outside the threshold disc and contributes 2
        expect = (1.0 - eps) * noise_part + eps * 2.0
        return CalibrationResult(tau=p.tau, lam=0.0, m_star=m_star, onsager_expectation=expect, scale=s)
    sig = float(p.amp_dist.expect(lambda mu: onsager_expectation_unit(mu / s, p.tau)))
    expect = (1.0 - eps) * noise_part + eps * sig
    lam = p.tau * s * (1.0 - expect / (2.0 * p.delta))
    return CalibrationResult(tau=p.tau, lam=lam, m_star=m_star, onsager_expectation=expect, scale=s)
