"""State evolution for CAMP: the MSE map, trajectories and fixed points.

The MSE map with threshold policy ``tau * sqrt(npi)`` is

    Psi(m) = npi * [(1 - eps) 2 chi2(tau) + eps E_{mu ~ G} r(mu / sqrt(npi), tau)]

with ``npi = sigma^2 + m / delta`` and ``eps = rho * delta``. Only the amplitude
marginal ``G`` matters (the risk is phase free), and ``G`` is carried as a
finite set of atoms so every expectation is an exact weighted sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import RISK_TOL, chi2, soft_risk
from .errors import AbovePhaseTransitionError, DomainError

__all__ = [
    "AmplitudeDistribution",
    "SEParams",
    "SETrajectory",
    "mse_map",
    "se_trajectory",
    "se_fixed_point",
    "mse_map_derivative_at_zero",
    "convergence_bound",
]

DEFAULT_TOL = 1e-10
DEFAULT_T_MAX = 10_000
DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class AmplitudeDistribution:
    """Discrete law ``G`` of the amplitudes of the nonzero coefficients.

    Continuous laws must be discretized by the caller (see
    :func:`camplab.ensembles.amplitude_distribution` for the coefficient
    ensembles).
    """

    values: tuple
    weights: tuple
    kind: str = "grid"

    def __post_init__(self):
        values = tuple(float(v) for v in np.atleast_1d(self.values))
        weights = tuple(float(w) for w in np.atleast_1d(self.weights))
        if len(values) != len(weights) or not values:
            raise DomainError("amplitude distribution needs matching, non-empty values/weights")
        if any(v <= 0 or not math.isfinite(v) for v in values):
            raise DomainError("amplitude atoms must be finite and strictly positive")
        if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-9:
            raise DomainError("amplitude weights must be non-negative and sum to 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def point_mass(cls, gamma=1.0):
        return cls((gamma,), (1.0,), kind="point_mass")

    @classmethod
    def unit(cls):
        return cls((1.0,), (1.0,), kind="unit")

    @classmethod
    def grid(cls, values, weights=None):
        values = np.atleast_1d(np.asarray(values, dtype=float))
        if weights is None:
            weights = np.full(values.shape, 1.0 / values.size)
        weights = np.asarray(weights, dtype=float)
        return cls(tuple(values), tuple(weights / weights.sum()), kind="grid")

    @property
    def second_moment(self):
        return float(np.dot(self.weights, np.square(self.values)))

    def expect(self, fn):
        return sum(w * fn(v) for v, w in zip(self.values, self.weights) if w > 0)


@dataclass(frozen=True)
class SEParams:
    """State of the recursion: ``(delta, rho, sigma, G)`` plus the threshold ratio."""

    delta: float
    rho: float
    sigma: float = 0.0
    tau: float = 2.0
    amp_dist: AmplitudeDistribution = field(default_factory=AmplitudeDistribution.unit)

    def __post_init__(self):
        if not 0.0 < self.delta <= 1.0:
            raise DomainError(f"delta must lie in (0, 1], got {self.delta}")
        if not self.rho > 0:
            raise DomainError(f"rho must be positive, got {self.rho}")
        if not 0.0 < self.epsilon < 1.0 + 1e-12:
            raise DomainError(f"epsilon = rho*delta must lie in (0, 1], got {self.epsilon}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise DomainError(f"sigma must be finite and non-negative, got {self.sigma}")
        if not (math.isfinite(self.tau) and self.tau >= 0):
            raise DomainError(f"tau must be finite and non-negative, got {self.tau}")

    @property
    def epsilon(self):
        return self.rho * self.delta

    @property
    def m0(self):
        """Initial MSE ``E|X|^2 = eps E_G(mu^2)``."""
        return self.epsilon * self.amp_dist.second_moment

    def npi(self, m):
        return self.sigma ** 2 + m / self.delta

    def replace(self, **changes):
        kw = dict(delta=self.delta, rho=self.rho, sigma=self.sigma, tau=self.tau, amp_dist=self.amp_dist)
        kw.update(changes)
        return SEParams(**kw)


@dataclass
class SETrajectory:
    m_values: list
    npi_values: list
    converged: bool
    fixed_point: float

    @property
    def iterations(self):
        return len(self.m_values) - 1


def mse_map(m, p, tol=RISK_TOL):
    """One application of the MSE map ``Psi(m)``."""
    if m < 0:
        raise DomainError(f"MSE must be non-negative, got {m}")
    npi = p.npi(m)
    if npi == 0.0:
        return 0.0
    nu = math.sqrt(npi)
    eps = p.epsilon
    signal = p.amp_dist.expect(lambda mu: soft_risk(mu / nu, p.tau, tol=tol))
    return npi * ((1.0 - eps) * 2.0 * chi2(p.tau) + eps * signal)


def se_trajectory(p, t_max=DEFAULT_T_MAX, tol=DEFAULT_TOL, m0=None):
    """Iterate ``m_{t+1} = Psi(m_t)`` from ``m0`` (default ``E|X|^2``).

    Stops once ``|m_{t+1} - m_t| < tol * max(m_t, 1e-30)`` or after ``t_max``
    steps; non-convergence is reported through ``converged`` rather than
    raised. ``tol = 0`` forces exactly ``t_max`` steps.
    """
    if t_max < 1:
        raise DomainError("t_max must be at least 1")
    m = p.m0 if m0 is None else float(m0)
    ms, npis = [m], [p.npi(m)]
    converged = False
    for _ in range(t_max):
        m_next = mse_map(m, p)
        ms.append(m_next)
        npis.append(p.npi(m_next))
        if abs(m_next - m) < tol * max(m, 1e-30):
            converged = True
            m = m_next
            break
        m = m_next
    return SETrajectory(m_values=ms, npi_values=npis, converged=converged, fixed_point=m)


def mse_map_derivative_at_zero(delta, rho, tau):
    """``dPsi/dm`` at ``m = 0`` for ``sigma = 0``: ``rho (1 + tau^2) + (1 - rho delta)/delta 2 chi2(tau)``."""
    return rho * (1.0 + tau * tau) + (1.0 - rho * delta) / delta * 2.0 * chi2(tau)


def _iterate_to_fixed_point(p, m_start, tol, t_max, ceiling):
    m = m_start
    for _ in range(t_max):
        m_next = mse_map(m, p)
        if m_next > ceiling:
            raise AbovePhaseTransitionError(
                f"state evolution diverged (m = {m_next:.3g}) for {p}")
        if abs(m_next - m) < tol * max(m, 1e-30):
            return m_next
        m = m_next
    return m


def se_fixed_point(p, tol=DEFAULT_TOL, t_max=DEFAULT_T_MAX, extra_starts=2, seed=0):
    """Unique stable fixed point of ``Psi`` (the formal MSE).

    Parameters
    ----------
    p : SEParams
        Requires ``sigma > 0`` or ``rho`` below the phase transition for ``p.tau``.
    tol : float
        Relative stopping tolerance of the iteration; the returned point also
        satisfies ``|Psi(m*) - m*| < max(tol, tol * m*)``.
    extra_starts : int
        Additional random starting points (seeded) that must reach the same
        point, which checks uniqueness.

    Raises
    ------
    AbovePhaseTransitionError
        Noise-free and ``dPsi/dm(0) >= 1``, or the iteration exceeds
        ``1e6 * m0``.
    """
    if p.sigma == 0.0:
        if mse_map_derivative_at_zero(p.delta, p.rho, p.tau) >= 1.0:
            raise AbovePhaseTransitionError(
                f"rho={p.rho} is not below the phase transition at delta={p.delta}, tau={p.tau}")
        return 0.0
    m0 = p.m0
    ceiling = DIVERGENCE_FACTOR * max(m0, p.sigma ** 2)
    m_star = _polish(p, _iterate_to_fixed_point(p, m0, tol, t_max, ceiling), tol)
    rng = np.random.default_rng(seed)
    for start in m0 * rng.uniform(0.1, 10.0, size=extra_starts):
        other = _polish(p, _iterate_to_fixed_point(p, float(start), tol, t_max, ceiling), tol)
        if abs(other - m_star) > 1e-8 * max(1.0, m_star):
            raise ArithmeticError(
                f"fixed point not unique: {m_star!r} vs {other!r} from start {start!r}")
    return m_star


def _polish(p, m, tol):
    # A few Newton-free secant steps on g(m) = Psi(m) - m sharpen the iterate
    # when the contraction is slow.
    g = lambda x: mse_map(x, p) - x
    a, ga = m, g(m)
    if abs(ga) < tol * max(m, 1e-30):
        return m
    b = m * (1.0 + 1e-4) if m > 0 else 1e-12
    gb = g(b)
    for _ in range(20):
        if gb == ga:
            break
        c = b - gb * (b - a) / (gb - ga)
        if c <= 0:
            break
        a, ga = b, gb
        b, gb = c, g(c)
        if abs(gb) < 1e-3 * tol * max(b, 1e-30):
            break
    return b if abs(gb) <= abs(ga) else a


def convergence_bound(deriv0, t, m0):
    """Linear bound ``m_t <= (dPsi/dm|_0)^t m0`` valid by concavity of ``Psi``."""
    if deriv0 >= 1.0:
        raise DomainError(f"no linear bound: dPsi/dm at zero is {deriv0} >= 1")
    if deriv0 <= 0.0:
        raise DomainError(f"derivative at zero must be positive, got {deriv0}")
    if t < 0:
        raise DomainError("t must be non-negative")
    return deriv0 ** t * m0
