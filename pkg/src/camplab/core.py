r"""Complex soft thresholding and the scalar integrals built on it.

Every routine here is a pure function of its arguments. The conventions are

* ``Z = Z1 + i Z2`` with ``Z1, Z2 ~ N(0, 1/2)`` independent, so ``E|Z|^2 = 1``;
* ``eta(x; tau) = x (1 - tau/|x|)_+`` is complex soft thresholding;
* the amplitude of ``mu + Z`` is Rice distributed with density
  ``2 a exp(-a^2 - mu^2) I0(2 a mu)``.

The risk and the Onsager expectation reduce the two-dimensional Gaussian
expectation to a one-dimensional integral over that amplitude. The angular
average enters through the Bessel ratio ``I1/I0``, evaluated with
exponentially scaled Bessel functions so large ``mu`` never overflows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError, OnBoundaryError

__all__ = [
    "SoftThresholdJacobian",
    "ChiPair",
    "soft_threshold",
    "soft_threshold_jacobian",
    "chi1",
    "chi2",
    "chi_pair",
    "chi_pair_quad",
    "eta_zero_risk",
    "soft_risk",
    "rice_pdf",
    "onsager_expectation_unit",
    "one_minus_bessel_ratio",
]

SQRT_PI = math.sqrt(math.pi)

#: Half-width of the amplitude window used by the Rice integrals.
RICE_WINDOW = 12.0

CHI_TOL = 1e-10
RISK_TOL = 1e-8
BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class SoftThresholdJacobian:
    """Partial derivatives of ``eta`` viewed as a map of the plane.

    ``d1R = d(eta^R)/dx``, ``d2R = d(eta^R)/dy``, ``d1I = d(eta^I)/dx`` and
    ``d2I = d(eta^I)/dy``. Fields are floats or arrays of a common shape.
    """

    d1R: np.ndarray
    d2R: np.ndarray
    d1I: np.ndarray
    d2I: np.ndarray

    @property
    def divergence(self):
        """``d1R + d2I``, the quantity entering the Onsager correction."""
        return self.d1R + self.d2I


@dataclass(frozen=True)
class ChiPair:
    chi1: float
    chi2: float


def _check_tau(tau):
    tau = np.asarray(tau, dtype=float)
    if not np.all(np.isfinite(tau)) or np.any(tau < 0):
        raise DomainError(f"threshold must be finite and non-negative, got {tau}")
    return tau


def soft_threshold(x, tau):
    """Complex soft thresholding ``x (1 - tau/|x|)_+``.

    Parameters
    ----------
    x : complex or array_like of complex
        Input sample(s). Real input is promoted to complex.
    tau : float or array_like
        Non-negative threshold, broadcast against ``x``.

    Returns
    -------
    complex or numpy.ndarray
        Shrunk sample(s); the phase is kept on the active set
        ``|x| > tau`` and the output is exactly zero elsewhere.

    Raises
    ------
    DomainError
        If ``tau`` is negative or any input is not finite.
    """
    tau = _check_tau(tau)
    xa = np.asarray(x, dtype=complex)
    if not np.all(np.isfinite(xa)):
        raise DomainError("soft_threshold input must be finite")
    amp = np.abs(xa)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(amp > tau, 1.0 - tau / np.where(amp > 0, amp, 1.0), 0.0)
    out = xa * scale
    if np.ndim(out) == 0:
        return complex(out)
    return out


def _soft_threshold_unchecked(x, tau):
    # hot path for the solvers: x is a complex ndarray, tau a float >= 0
    amp = np.abs(x)
    active = amp > tau
    scale = np.zeros_like(amp)
    np.divide(tau, amp, out=scale, where=active)
    np.subtract(1.0, scale, out=scale, where=active)
    return x * scale, amp, active


def soft_threshold_jacobian(x, tau, boundary_tol=BOUNDARY_TOL):
    """Four partial derivatives of ``eta`` at ``x = u + iv``.

    On ``|x| > tau`` with ``A = |x|``::

        d1R = 1 - tau v^2 / A^3
        d2I = 1 - tau u^2 / A^3
        d2R = d1I = tau u v / A^3

    and all four vanish inside the threshold disc. The derivative does not
    exist on the circle ``|x| = tau``; points closer than ``boundary_tol``
    raise :class:`OnBoundaryError`.
    """
    tau = _check_tau(tau)
    xa = np.asarray(x, dtype=complex)
    if not np.all(np.isfinite(xa)):
        raise DomainError("soft_threshold_jacobian input must be finite")
    amp = np.abs(xa)
    if np.any(np.abs(amp - tau) < boundary_tol):
        raise OnBoundaryError("Jacobian undefined on the threshold circle |x| = tau")
    u, v = xa.real, xa.imag
    active = amp > tau
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(active, tau / np.where(active, amp, 1.0) ** 3, 0.0)
    d1R = np.where(active, 1.0 - c * v * v, 0.0)
    d2I = np.where(active, 1.0 - c * u * u, 0.0)
    off = np.where(active, c * u * v, 0.0)
    if np.ndim(d1R) == 0:
        d1R, d2I, off = float(d1R), float(d2I), float(off)
    return SoftThresholdJacobian(d1R=d1R, d2R=off, d1I=off, d2I=d2I)


# -- chi integrals ----------------------------------------------------------

def chi1(tau):
    r"""``\int_{w >= tau} w (tau - w) exp(-w^2) dw = -(sqrt(pi)/4) erfc(tau)``."""
    tau = _check_tau(tau)
    out = -0.25 * SQRT_PI * special.erfc(tau)
    return float(out) if out.ndim == 0 else out


def chi2(tau):
    r"""``\int_{w > tau} w (w - tau)^2 exp(-w^2) dw``.

    Closed form ``exp(-tau^2) [1/2 - (tau sqrt(pi)/2) erfcx(tau)]``; the scaled
    complementary error function keeps the bracket free of underflow.
    """
    tau = _check_tau(tau)
    out = np.exp(-tau * tau) * (0.5 - 0.5 * SQRT_PI * tau * special.erfcx(tau))
    return float(out) if out.ndim == 0 else out


def chi_pair(tau):
    """Closed-form ``(chi1, chi2)`` for a scalar threshold."""
    return ChiPair(chi1=chi1(float(tau)), chi2=chi2(float(tau)))


def chi_pair_quad(tau, tol=CHI_TOL):
    """Adaptive-quadrature evaluation of ``(chi1, chi2)``.

    Used to cross-check :func:`chi_pair`; substitutes ``w = tau + s`` so the
    Gaussian factor is centred at the lower limit.
    """
    tau = float(_check_tau(tau))
    scale = math.exp(-tau * tau)
    f1 = lambda s: (s + tau) * (-s) * math.exp(-s * s - 2.0 * s * tau)
    f2 = lambda s: (s + tau) * s * s * math.exp(-s * s - 2.0 * s * tau)
    opts = dict(epsabs=tol * 1e-3, epsrel=1e-13, limit=200)
    c1 = integrate.quad(f1, 0.0, np.inf, **opts)[0]
    c2 = integrate.quad(f2, 0.0, np.inf, **opts)[0]
    return ChiPair(chi1=scale * c1, chi2=scale * c2)


def eta_zero_risk(tau):
    """``E|eta(Z; tau)|^2 = 2 chi2(tau)`` for pure complex Gaussian input."""
    return 2.0 * chi2(tau)


# -- Bessel ratio and Rice integrals ----------------------------------------

def _asymptotic_coefficients(order, terms):
    # (-1)^k a_k(nu) of I_nu(x) e^{-x} sqrt(2 pi x) ~ sum_k (-1)^k a_k(nu) x^-k
    out = [1.0]
    c = 1.0
    for k in range(1, terms):
        c *= (4.0 * order * order - (2 * k - 1) ** 2) / (k * 8.0)
        out.append((-1) ** k * c)
    return np.array(out)


_ASYM_TERMS = 20
_ASYM_I0 = _asymptotic_coefficients(0, _ASYM_TERMS)
_ASYM_DIFF = _ASYM_I0 - _asymptotic_coefficients(1, _ASYM_TERMS)
_ASYM_SWITCH = 40.0


def one_minus_bessel_ratio(x):
    """``1 - I1(x)/I0(x)`` for ``x >= 0`` without cancellation at large ``x``.

    Below ``x = 40`` the exponentially scaled Bessel functions are used
    directly; above, the ratio of the two Hankel asymptotic series (whose
    difference is summed term by term) gives full relative precision.
    """
    if isinstance(x, float):
        if x < _ASYM_SWITCH:
            i0 = special.i0e(x)
            return (i0 - special.i1e(x)) / i0
        r = 1.0 / x
        num = den = 0.0
        for k in range(_ASYM_TERMS - 1, -1, -1):
            num = num * r + _ASYM_DIFF[k]
            den = den * r + _ASYM_I0[k]
        return num / den
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < _ASYM_SWITCH
    xs = x[small]
    i0 = special.i0e(xs)
    out[small] = (i0 - special.i1e(xs)) / i0
    xl = x[~small]
    if xl.size:
        powers = np.power.outer(1.0 / xl, np.arange(_ASYM_TERMS))
        out[~small] = (powers @ _ASYM_DIFF) / (powers @ _ASYM_I0)
    return float(out) if out.ndim == 0 else out


def rice_pdf(a, mu):
    """Density of ``|mu + Z|``: ``2 a exp(-(a-mu)^2) I0e(2 a mu)``."""
    a = np.asarray(a, dtype=float)
    return 2.0 * a * np.exp(-(a - mu) ** 2) * special.i0e(2.0 * a * mu)


def _rice_pdf_offset(s, mu):
    # density at a = mu + s; the offset keeps full precision when mu is huge
    a = mu + s
    return 2.0 * a * math.exp(-s * s) * special.i0e(2.0 * a * mu)


def _offset_window(mu):
    return max(-mu, -RICE_WINDOW), RICE_WINDOW


def soft_risk(mu, tau, tol=RISK_TOL):
    r"""Risk ``r(mu, tau) = E|eta(mu e^{i theta} + Z; tau) - mu e^{i theta}|^2``.

    The risk does not depend on ``theta``. Writing ``A = |mu + Z|`` and
    ``phi`` for its phase, the squared error on ``A > tau`` is
    ``(A - tau - mu)^2 + 2 mu (A - tau)(1 - cos phi)`` and
    ``E[cos phi | A = a] = I1(2 a mu)/I0(2 a mu)``; on ``A <= tau`` it is
    ``mu^2``. Both pieces are integrated against the Rice density in the
    offset ``s = A - mu`` over ``[-12, 12]``.

    Parameters
    ----------
    mu : float
        Signal amplitude, ``mu >= 0``.
    tau : float
        Threshold, ``tau >= 0``.
    tol : float
        Absolute quadrature tolerance.
    """
    mu = float(mu)
    tau = float(_check_tau(tau))
    if not math.isfinite(mu) or mu < 0:
        raise DomainError(f"amplitude must be finite and non-negative, got {mu}")
    lo, hi = _offset_window(mu)
    cut = tau - mu
    opts = dict(epsabs=tol * 1e-2, epsrel=1e-12, limit=200)

    inactive = 0.0
    if mu > 0 and cut > lo:
        inactive = mu * mu * integrate.quad(_rice_pdf_offset, lo, min(cut, hi), args=(mu,), **opts)[0]

    active = 0.0
    s0 = max(cut, lo)
    if s0 < hi:
        def integrand(s):
            a = mu + s
            bend = 2.0 * mu * (a - tau) * one_minus_bessel_ratio(2.0 * a * mu) if mu > 0 else 0.0
            return ((s - tau) ** 2 + bend) * _rice_pdf_offset(s, mu)

        pts = [0.0] if s0 < 0.0 else None
        active = integrate.quad(integrand, s0, hi, points=pts, **opts)[0]
    return inactive + active


def onsager_expectation_unit(mu, tau, tol=RISK_TOL):
    """``E[(d1R + d2I)(mu + Z; tau)] = E[(2 - tau/A) 1(A > tau)]``, ``A = |mu + Z|``.

    For ``mu = 0`` the amplitude is Rayleigh and the closed form
    ``2 exp(-tau^2) - tau sqrt(pi) erfc(tau)`` is returned.
    """
    mu = float(mu)
    tau = float(_check_tau(tau))
    if mu == 0.0:
        return 2.0 * math.exp(-tau * tau) - tau * SQRT_PI * special.erfc(tau)
    lo, hi = _offset_window(mu)
    s0 = max(tau - mu, lo)
    if s0 >= hi:
        return 0.0

    def integrand(s):
        a = mu + s
        return (4.0 * a - 2.0 * tau) * math.exp(-s * s) * special.i0e(2.0 * a * mu)

    pts = [0.0] if s0 < 0.0 else None
    return integrate.quad(integrand, s0, hi, points=pts, epsabs=tol * 1e-2, epsrel=1e-12, limit=200)[0]
