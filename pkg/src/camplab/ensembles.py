"""Random measurement matrices, sparse complex signals and noise.

Every draw comes from a named stream: a ``numpy`` generator seeded by
``SeedSequence(master_seed, spawn_key=(stream_id,))``. A stream id is a
64-bit hash of arbitrary labels (experiment name, grid indices, trial), so
the value of one trial never depends on which worker ran it or in what order.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .state_evolution import AmplitudeDistribution

__all__ = [
    "MATRIX_KINDS",
    "COEFF_KINDS",
    "RngStream",
    "stream_id",
    "rng_stream",
    "SignalModel",
    "sample_matrix",
    "sample_nonzeros",
    "sample_signal",
    "sample_noise",
    "make_instance",
    "amplitude_distribution",
]

MATRIX_KINDS = ("gaussian", "rademacher", "ternary")
COEFF_KINDS = ("up", "zp", "ga", "uf", "point_mass")
# guards floor(delta * N) against products such as 0.29 * 100 = 28.999...
FLOOR_FUZZ = 1e-9


def stream_id(*labels):
    """Stable 64-bit id for a tuple of labels (str/int/float)."""
    key = "\x1f".join(repr(x) for x in labels).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: int

    def generator(self):
        ss = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(ss))


def rng_stream(master_seed, *labels):
    """Generator for the stream named by ``labels`` under ``master_seed``."""
    return RngStream(int(master_seed), stream_id(*labels)).generator()


def sample_matrix(kind, n, N, rng):
    """``n x N`` complex matrix with i.i.d. entries, ``E A = 0``, ``E|A|^2 = 1/n``.

    gaussian
        real and imaginary parts ``N(0, 1/(2n))``
    rademacher
        real and imaginary parts ``+-sqrt(1/(2n))`` with equal probability
    ternary
        real and imaginary parts uniform on ``{-c, 0, c}`` with
        ``c = sqrt(3/(4n))``, so each part has variance ``1/(2n)``

    The ternary magnitude is chosen to satisfy ``E|A|^2 = 1/n``; the value
    ``sqrt(3/(2n))`` with the same probabilities would double the column
    energy.
    """
    n, N = int(n), int(N)
    if not 1 <= n <= N:
        raise DomainError(f"need 1 <= n <= N, got n={n}, N={N}")
    kind = kind.lower()
    if kind == "gaussian":
        parts = rng.standard_normal((2, n, N)) * math.sqrt(0.5 / n)
    elif kind == "rademacher":
        parts = (2.0 * rng.integers(0, 2, size=(2, n, N)) - 1.0) * math.sqrt(0.5 / n)
    elif kind == "ternary":
        parts = (rng.integers(0, 3, size=(2, n, N)) - 1.0) * math.sqrt(0.75 / n)
    else:
        raise DomainError(f"unknown matrix ensemble {kind!r}; expected one of {MATRIX_KINDS}")
    return parts[0] + 1j * parts[1]


@dataclass(frozen=True)
class SignalModel:
    """Bernoulli(``epsilon``) support with i.i.d. nonzeros of kind ``coeff_kind``.

    ``point_mass`` draws amplitude ``gamma`` with uniform phase.
    """

    epsilon: float
    coeff_kind: str = "up"
    gamma: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise DomainError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        kind = self.coeff_kind.lower()
        if kind not in COEFF_KINDS:
            raise DomainError(f"unknown coefficient ensemble {self.coeff_kind!r}; expected one of {COEFF_KINDS}")
        if not self.gamma > 0:
            raise DomainError("gamma must be positive")
        object.__setattr__(self, "coeff_kind", kind)


def sample_nonzeros(kind, k, rng, gamma=1.0):
    """``k`` nonzero coefficients from a coefficient ensemble."""
    kind = kind.lower()
    if kind == "up":
        return np.exp(2j * np.pi * rng.random(k))
    if kind == "zp":
        return np.ones(k, dtype=complex)
    if kind == "ga":
        g = rng.standard_normal((2, k))
        return g[0] + 1j * g[1]
    if kind == "uf":
        u = rng.random((2, k))
        # U[0,1) can return exactly 0; reflect so both parts lie in (0, 1]
        u = 1.0 - u
        return u[0] + 1j * u[1]
    if kind == "point_mass":
        return gamma * np.exp(2j * np.pi * rng.random(k))
    raise DomainError(f"unknown coefficient ensemble {kind!r}; expected one of {COEFF_KINDS}")


def sample_signal(model, N, rng):
    """Length-``N`` vector with Bernoulli support and i.i.d. nonzeros."""
    N = int(N)
    if N < 1:
        raise DomainError("N must be at least 1")
    support = rng.random(N) < model.epsilon
    x = np.zeros(N, dtype=complex)
    x[support] = sample_nonzeros(model.coeff_kind, int(support.sum()), rng, model.gamma)
    return x


def sample_noise(sigma, n, rng):
    """``CN(0, sigma^2)`` noise: real and imaginary parts ``N(0, sigma^2/2)``."""
    if not (math.isfinite(sigma) and sigma >= 0):
        raise DomainError(f"sigma must be finite and non-negative, got {sigma}")
    g = rng.standard_normal((2, int(n)))
    return (g[0] + 1j * g[1]) * (sigma / math.sqrt(2.0))


def problem_size(delta, rho, N):
    """``(n, k) = (floor(delta N), floor(rho delta N))``."""
    n = int(math.floor(delta * N + FLOOR_FUZZ))
    k = int(math.floor(rho * delta * N + FLOOR_FUZZ))
    return n, k


def make_instance(delta, rho, N, ensemble="gaussian", coeff_kind="up", sigma=0.0, seed=0, gamma=1.0,
                  labels=()):
    """Draw one problem ``y = A s_o + w`` with exactly ``k`` nonzeros.

    The support is uniform without replacement. Matrix, signal and noise use
    separate streams derived from ``seed`` (and ``labels``). Instances that
    share a seed share their signal and noise whatever the ensemble, while
    the matrix stream is also keyed by the ensemble name so different
    ensembles never reuse the same random bits.
    """
    from .solvers import ProblemInstance

    if not 0.0 < delta <= 1.0:
        raise DomainError(f"delta must lie in (0, 1], got {delta}")
    if rho < 0:
        raise DomainError(f"rho must be non-negative, got {rho}")
    n, k = problem_size(delta, rho, N)
    if n < 1:
        raise DomainError(f"delta * N gives n = {n} measurements")
    if k > N:
        raise DomainError(f"k = {k} nonzeros exceeds N = {N}")
    labels = tuple(labels)
    A = sample_matrix(ensemble, n, N, rng_stream(seed, *labels, "matrix", ensemble.lower()))
    rng_sig = rng_stream(seed, *labels, "signal")
    x = np.zeros(N, dtype=complex)
    support = rng_sig.choice(N, size=k, replace=False)
    x[support] = sample_nonzeros(coeff_kind, k, rng_sig, gamma)
    w = sample_noise(sigma, n, rng_stream(seed, *labels, "noise"))
    y = A @ x + w
    return ProblemInstance(matrix=A, y=y, truth=x, sigma=float(sigma), seed=int(seed))


def amplitude_distribution(coeff_kind, gamma=1.0, nodes=None):
    """Discrete amplitude law ``G`` for state evolution.

    ``up``/``zp`` have unit amplitude and ``point_mass`` amplitude ``gamma``.
    ``ga`` (Rayleigh amplitude, ``|X|^2 ~ Exp(2)``) uses Gauss-Laguerre nodes
    in ``|X|^2/2``; ``uf`` uses a tensor Gauss-Legendre rule on the unit
    square. Both reproduce ``E|X|^2`` exactly.
    """
    kind = coeff_kind.lower()
    if kind in ("up", "zp"):
        return AmplitudeDistribution.unit()
    if kind == "point_mass":
        return AmplitudeDistribution.point_mass(gamma)
    if kind == "ga":
        u, w = np.polynomial.laguerre.laggauss(nodes or 40)
        return AmplitudeDistribution.grid(np.sqrt(2.0 * u), w)
    if kind == "uf":
        t, w = np.polynomial.legendre.leggauss(nodes or 12)
        t, w = 0.5 * (t + 1.0), 0.5 * w
        # symmetric pairs (a, b) and (b, a) share an amplitude: merge them
        vals, wts = [], []
        for i in range(t.size):
            for j in range(i, t.size):
                vals.append(math.hypot(t[i], t[j]))
                wts.append(w[i] * w[j] * (1.0 if i == j else 2.0))
        return AmplitudeDistribution.grid(vals, wts)
    raise DomainError(f"unknown coefficient ensemble {coeff_kind!r}; expected one of {COEFF_KINDS}")
