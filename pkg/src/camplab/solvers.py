"""CAMP, a FISTA reference solver for the complex LASSO, and a per-edge
message-passing validator.

CAMP iterates, from ``x = 0`` and ``z = y``::

    x <- eta(x + A^H z; theta_t)
    z <- y - A x + z * (1/(2n)) sum_{active j} (2 - theta_t / |x_j + (A^H z)_j|)

with ``theta_t = tau sqrt(npi_t)``. The scalar correction is the mean-field
form of the per-entry Onsager sums (``onsager_mode="full_eq5"`` computes
those sums entry by entry instead). The correction is *added*: expanding the
edge messages ``z_{a->l} = z_a - A_{al} x_l + ...`` gives a positive sign,
and only that sign makes the effective noise Gaussian with the variance
predicted by state evolution.
"""
from __future__ import annotations

import io
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import _soft_threshold_unchecked
from .errors import DomainError, NumericalFailure, SizeCapError

__all__ = [
    "ProblemInstance",
    "CampOptions",
    "FistaOptions",
    "SolverResult",
    "MessagePassingResult",
    "estimate_npi",
    "camp_solve",
    "classo_objective",
    "spectral_norm_sq",
    "fista_classo",
    "full_message_passing",
]

CONTAINER_MAGIC = b"CAMPINST"
CONTAINER_VERSION = 1
MP_SIZE_CAP = 400
ONSAGER_MODES = ("mean_field", "full_eq5")
NPI_ESTIMATORS = ("residual_energy", "rayleigh_median")


@dataclass
class ProblemInstance:
    """One sensing problem ``y = A s_o + w``.

    Parameters
    ----------
    matrix : ndarray, shape (n, N)
        Complex measurement matrix.
    y : ndarray, shape (n,)
    truth : ndarray, shape (N,), optional
        The unknown signal, when known.
    sigma : float
        Noise standard deviation.
    seed : int
    """

    matrix: np.ndarray
    y: np.ndarray
    truth: np.ndarray | None = None
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.matrix = np.ascontiguousarray(self.matrix, dtype=complex)
        self.y = np.asarray(self.y, dtype=complex).reshape(-1)
        if self.matrix.ndim != 2:
            raise DomainError("matrix must be two-dimensional")
        n, N = self.matrix.shape
        if n > N:
            raise DomainError(f"need n <= N, got {n} x {N}")
        if self.y.shape != (n,):
            raise DomainError(f"y has shape {self.y.shape}, expected ({n},)")
        if self.truth is not None:
            self.truth = np.asarray(self.truth, dtype=complex).reshape(-1)
            if self.truth.shape != (N,):
                raise DomainError(f"truth has shape {self.truth.shape}, expected ({N},)")

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def N(self):
        return self.matrix.shape[1]

    def save(self, path):
        """Write the binary container.

        Layout: the 8-byte magic ``CAMPINST``, a little-endian ``uint32``
        header length, a UTF-8 JSON header (``version``, ``n``, ``N``,
        ``sigma``, ``seed``, ``has_truth``), then the row-major matrix, ``y``
        and optionally the truth, each as interleaved real/imaginary
        little-endian float64.
        """
        header = json.dumps({
            "version": CONTAINER_VERSION, "n": self.n, "N": self.N, "sigma": self.sigma,
            "seed": self.seed, "has_truth": self.truth is not None,
            "layout": "row-major complex as interleaved <f8 re/im",
        }, sort_keys=True).encode()
        buf = io.BytesIO()
        buf.write(CONTAINER_MAGIC)
        buf.write(struct.pack("<I", len(header)))
        buf.write(header)
        for arr in (self.matrix, self.y) + ((self.truth,) if self.truth is not None else ()):
            buf.write(np.ascontiguousarray(arr, dtype="<c16").tobytes())
        Path(path).write_bytes(buf.getvalue())

    @classmethod
    def load(cls, path):
        data = Path(path).read_bytes()
        if data[:8] != CONTAINER_MAGIC:
            raise DomainError(f"{path}: not a problem-instance container")
        try:
            (hlen,) = struct.unpack("<I", data[8:12])
            header = json.loads(data[12:12 + hlen])
        except (struct.error, ValueError) as e:
            raise DomainError(f"{path}: unreadable container header ({e})") from None
        if header.get("version") != CONTAINER_VERSION:
            raise DomainError(f"{path}: unsupported container version {header.get('version')}")
        n, N = int(header["n"]), int(header["N"])
        off = 12 + hlen

        def take(count):
            nonlocal off
            if off + 16 * count > len(data):
                raise DomainError(f"{path}: truncated container")
            arr = np.frombuffer(data, dtype="<c16", count=count, offset=off)
            off += 16 * count
            return arr.astype(complex)

        A = take(n * N).reshape(n, N)
        y = take(n)
        truth = take(N) if header["has_truth"] else None
        if off != len(data):
            raise DomainError(f"{path}: {len(data) - off} trailing bytes")
        return cls(matrix=A, y=y, truth=truth, sigma=float(header["sigma"]), seed=int(header["seed"]))


@dataclass(frozen=True)
class CampOptions:
    """CAMP settings.

    ``threshold_schedule``, when given, fixes the absolute threshold at each
    iteration and overrides ``tau * sqrt(npi_t)``.
    """

    tau: float = 2.0
    max_iters: int = 1000
    stop_tol: float = 1e-10
    onsager_mode: str = "mean_field"
    npi_estimator: str = "residual_energy"
    threshold_schedule: tuple | None = None

    def __post_init__(self):
        if not self.tau > 0:
            raise DomainError(f"tau must be positive, got {self.tau}")
        if self.max_iters < 1:
            raise DomainError("max_iters must be at least 1")
        if self.onsager_mode not in ONSAGER_MODES:
            raise DomainError(f"onsager_mode must be one of {ONSAGER_MODES}")
        if self.npi_estimator not in NPI_ESTIMATORS:
            raise DomainError(f"npi_estimator must be one of {NPI_ESTIMATORS}")


@dataclass(frozen=True)
class FistaOptions:
    max_iters: int = 20000
    rel_tol: float = 1e-12
    power_iters: int = 100
    safety: float = 1.01


@dataclass
class SolverResult:
    estimate: np.ndarray
    iterations: int
    residual_norms: list
    npi_trace: list
    mse_trace: list | None = None
    threshold_trace: list = field(default_factory=list)
    converged: bool = False
    metadata: dict = field(default_factory=dict)


def estimate_npi(z, mode="residual_energy"):
    """Empirical noise-plus-interference level from the residual ``z``.

    ``residual_energy`` returns ``||z||^2 / n``. ``rayleigh_median`` returns
    ``median(|z|)^2 / ln 2``: for ``z ~ CN(0, v)``, ``|z|^2`` is exponential
    with mean ``v`` and median ``v ln 2``.
    """
    z = np.asarray(z)
    if z.size == 0:
        raise DomainError("residual is empty")
    if mode == "residual_energy":
        return float(np.vdot(z, z).real / z.size)
    if mode == "rayleigh_median":
        return float(np.median(np.abs(z)) ** 2 / math.log(2.0))
    raise DomainError(f"unknown npi estimator {mode!r}")


def _onsager_full(A, z, pseudo, thr, active):
    # per-entry sums sum_j A_aj [J_j applied to (Re, Im) of conj(A_aj) z_a]
    u, v = pseudo.real, pseudo.imag
    amp = np.abs(pseudo)
    c = np.zeros_like(amp)
    np.divide(thr, amp ** 3, out=c, where=active)
    d1R = np.where(active, 1.0 - c * v * v, 0.0)
    d2I = np.where(active, 1.0 - c * u * u, 0.0)
    off = np.where(active, c * u * v, 0.0)
    B = A.conj() * z[:, None]
    re = B.real * d1R + B.imag * off
    im = B.real * off + B.imag * d2I
    return np.sum(A * (re + 1j * im), axis=1)


def camp_solve(inst, opts=None):
    """Run CAMP on ``inst``.

    Stops when ``||x_{t+1} - x_t|| / max(||x_t||, 1) < stop_tol`` or after
    ``max_iters``. ``mse_trace[0]`` is ``||s_o||^2 / N`` (the all-zero start)
    and ``mse_trace[t]`` the per-coordinate MSE after ``t`` iterations.

    Raises
    ------
    NumericalFailure
        A non-finite iterate appears; ``.iteration`` says when.
    """
    opts = opts or CampOptions()
    A, y = inst.matrix, inst.y
    n, N = A.shape
    Ac = A.conj()
    truth = inst.truth
    x = np.zeros(N, dtype=complex)
    z = y.copy()
    mse = [float(np.vdot(truth, truth).real / N)] if truth is not None else None
    res_norms, npis, thrs = [], [], []
    converged = False
    schedule = opts.threshold_schedule
    t = 0
    for t in range(1, opts.max_iters + 1):
        pseudo = x + z @ Ac
        npi = estimate_npi(z, opts.npi_estimator)
        thr = float(schedule[t - 1]) if schedule is not None else opts.tau * math.sqrt(npi)
        x_new, amp, active = _soft_threshold_unchecked(pseudo, thr)
        resid = y - A @ x_new
        if opts.onsager_mode == "mean_field":
            b = np.sum(2.0 - thr / amp[active]) / (2.0 * n)
            z_new = resid + b * z
        else:
            z_new = resid + _onsager_full(A, z, pseudo, thr, active)
        if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(z_new))):
            raise NumericalFailure(f"non-finite CAMP iterate at iteration {t}", iteration=t)
        npis.append(npi)
        thrs.append(thr)
        res_norms.append(float(np.linalg.norm(resid)))
        if mse is not None:
            d = x_new - truth
            mse.append(float(np.vdot(d, d).real / N))
        change = np.linalg.norm(x_new - x) / max(np.linalg.norm(x), 1.0)
        x, z = x_new, z_new
        if change < opts.stop_tol:
            converged = True
            break
    return SolverResult(estimate=x, iterations=t, residual_norms=res_norms, npi_trace=npis,
                        mse_trace=mse, threshold_trace=thrs, converged=converged,
                        metadata={"solver": "camp", "tau": opts.tau, "onsager_mode": opts.onsager_mode,
                                  "npi_estimator": opts.npi_estimator, "blas_threads": _blas_threads()})


def _blas_threads():
    try:
        from threadpoolctl import threadpool_info
    except ImportError:  # pragma: no cover
        return None
    counts = [p.get("num_threads") for p in threadpool_info() if p.get("user_api") == "blas"]
    return counts[0] if counts else None


def classo_objective(x, inst, lam):
    """``0.5 ||y - A x||^2 + lam sum_i |x_i|``."""
    r = inst.y - inst.matrix @ np.asarray(x, dtype=complex)
    return 0.5 * float(np.vdot(r, r).real) + float(lam) * float(np.sum(np.abs(x)))


def spectral_norm_sq(A, iters=100, seed=0):
    """Power-iteration estimate of ``||A||_2^2`` (largest eigenvalue of ``A^H A``)."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.shape[1]) + 1j * rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    Ac = A.conj()
    est = 0.0
    for _ in range(iters):
        w = (A @ v) @ Ac
        est = np.linalg.norm(w)
        if est == 0.0:
            return 0.0
        v = w / est
    return float(est)


def fista_classo(inst, lam, opts=None, x0=None):
    """Solve ``min 0.5 ||y - A x||^2 + lam ||x||_1`` by FISTA with restarts.

    The step is ``1/L`` with ``L`` 1.01 times a 100-step power-iteration
    estimate of ``||A||^2``. Momentum restarts whenever the objective goes
    up. Stops when the relative objective change of an accepted step is
    below ``rel_tol`` (a zero-change step also counts).
    """
    opts = opts or FistaOptions()
    lam = float(lam)
    if lam < 0:
        raise DomainError(f"lambda must be non-negative, got {lam}")
    A, y = inst.matrix, inst.y
    Ac = A.conj()
    L = opts.safety * spectral_norm_sq(A, opts.power_iters)
    N = A.shape[1]
    x = np.zeros(N, dtype=complex) if x0 is None else np.asarray(x0, dtype=complex).copy()
    if L == 0.0:
        return SolverResult(estimate=x, iterations=0, residual_norms=[float(np.linalg.norm(y))],
                            npi_trace=[], converged=True, metadata={"solver": "fista", "lambda": lam})

    def obj_of(v, r):
        return 0.5 * float(np.vdot(r, r).real) + lam * float(np.sum(np.abs(v)))

    r = y - A @ x
    F = obj_of(x, r)
    w, t_mom = x.copy(), 1.0
    res_norms = []
    converged = False
    k = 0
    restarts = 0
    plain = True
    for k in range(1, opts.max_iters + 1):
        grad = -((y - A @ w) @ Ac)
        x_new, _, _ = _soft_threshold_unchecked(w - grad / L, lam / L)
        r_new = y - A @ x_new
        F_new = obj_of(x_new, r_new)
        if not math.isfinite(F_new):
            raise NumericalFailure(f"FISTA objective not finite at iteration {k}", iteration=k)
        if F_new > F:
            if plain:
                # a plain proximal step from x cannot go up except by rounding
                converged = True
                break
            # restart from the last accepted point with plain proximal gradient
            restarts += 1
            w, t_mom, plain = x.copy(), 1.0, True
            continue
        plain = False
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_mom * t_mom))
        w = x_new + ((t_mom - 1.0) / t_next) * (x_new - x)
        rel = (F - F_new) / max(F, 1e-300)
        x, F, r, t_mom = x_new, F_new, r_new, t_next
        res_norms.append(float(np.linalg.norm(r)))
        if rel < opts.rel_tol:
            converged = True
            break
    mse = None
    if inst.truth is not None:
        d = x - inst.truth
        mse = [float(np.vdot(d, d).real / N)]
    return SolverResult(estimate=x, iterations=k, residual_norms=res_norms, npi_trace=[], mse_trace=mse,
                        converged=converged,
                        metadata={"solver": "fista", "lambda": lam, "lipschitz": L, "objective": F,
                                  "restarts": restarts, "blas_threads": _blas_threads()})


@dataclass
class MessagePassingResult:
    marginals: list
    x_messages: np.ndarray
    z_messages: np.ndarray


def full_message_passing(inst, tau_schedule, t_max=None):
    """Per-edge message passing with ``2 n N`` messages (validation only).

    ``x_{l->a} = eta(sum_{b != a} conj(A_bl) z_{b->l}; theta_t)`` and
    ``z_{a->l} = y_a - sum_{j != l} A_aj x_{j->a}``, from ``x = 0`` and
    ``z_{a->l} = y_a``. The marginal ``x_l = eta(sum_b conj(A_bl) z_{b->l})``
    is recorded after each iteration; ``marginals[0]`` is the zero start.

    Parameters
    ----------
    tau_schedule : sequence of float
        Absolute thresholds ``theta_t``, one per iteration.
    t_max : int, optional
        Number of iterations (defaults to ``len(tau_schedule)``).

    Raises
    ------
    SizeCapError
        ``N`` above 400.
    """
    A, y = inst.matrix, inst.y
    n, N = A.shape
    if N > MP_SIZE_CAP:
        raise SizeCapError(f"full message passing is capped at N <= {MP_SIZE_CAP}, got N = {N}")
    sched = [float(s) for s in tau_schedule]
    t_max = len(sched) if t_max is None else int(t_max)
    if len(sched) < t_max:
        raise DomainError("tau_schedule shorter than t_max")
    Ac = A.conj()
    X = np.zeros((n, N), dtype=complex)          # X[a, l] = x_{l->a}
    Z = np.repeat(y[:, None], N, axis=1)          # Z[a, l] = z_{a->l}
    marginals = [np.zeros(N, dtype=complex)]
    for t in range(t_max):
        terms = Ac * Z
        S = terms.sum(axis=0)
        X, _, _ = _soft_threshold_unchecked(S[None, :] - terms, sched[t])
        marginals.append(_soft_threshold_unchecked(S, sched[t])[0])
        AX = A * X
        Z = (y - AX.sum(axis=1))[:, None] + AX
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Z))):
            raise NumericalFailure(f"non-finite message at iteration {t + 1}", iteration=t + 1)
    return MessagePassingResult(marginals=marginals, x_messages=X, z_messages=Z)
