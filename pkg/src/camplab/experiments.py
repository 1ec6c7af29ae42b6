"""Monte Carlo experiments: empirical phase transitions, universality sweeps,
state evolution against CAMP, and CAMP against the LASSO.

Each trial draws its instance from a stream keyed by ``master_seed`` and the
trial's labels, runs under a single BLAS thread, and is independent of every
other trial. Results are sorted by their keys before they are returned, so the
output is the same whatever the number of worker processes.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .analysis import calibrate_lambda, phase_transition
from .ensembles import amplitude_distribution, make_instance, problem_size
from .errors import CampLabError, DomainError
from .solvers import CampOptions, camp_solve, classo_objective, fista_classo, FistaOptions
from .state_evolution import SEParams, se_trajectory

__all__ = [
    "SuccessRecord",
    "LogisticFit",
    "PhaseExperimentConfig",
    "PhaseExperimentResult",
    "UniversalityConfig",
    "UniversalityResult",
    "SEvsCampConfig",
    "CalibrationCheckConfig",
    "success_indicator",
    "logistic_fit",
    "rho_grid",
    "empirical_phase_transition",
    "universality_sweep",
    "se_vs_camp",
    "camp_vs_lasso",
]

LOGISTIC_MAX_ITER = 100
LOGISTIC_TOL = 1e-10
# slopes beyond this mean the likelihood has no finite maximiser
LOGISTIC_SLOPE_CAP = 1e6


def success_indicator(xhat, truth, tol):
    """``(||xhat - truth|| / ||truth|| < tol, relative error)``."""
    truth = np.asarray(truth)
    norm = np.linalg.norm(truth)
    if norm == 0.0:
        raise DomainError("relative error undefined for a zero truth vector")
    rel = float(np.linalg.norm(np.asarray(xhat) - truth) / norm)
    return rel < tol, rel


@dataclass(frozen=True)
class LogisticFit:
    """``p(rho) = 1 / (1 + exp(-(a + b rho)))`` with ``rho_half = -a/b``."""

    a: float
    b: float
    rho_half: float
    converged: bool
    separated: bool = False


def _separation_midpoint(rho, succ, tot):
    # complete separation: every point is all-success or all-failure and no
    # all-failure point lies below an all-success point
    full = succ == tot
    none = succ == 0
    if not np.all(full | none):
        return None
    if np.all(full):
        return float(rho[-1])
    if np.all(none):
        return float(rho[0])
    last_success = rho[full].max()
    first_failure = rho[none].min()
    if last_success < first_failure:
        return 0.5 * float(last_success + first_failure)
    return None


def logistic_fit(points):
    """Grouped-data logistic regression by iteratively reweighted least squares.

    Parameters
    ----------
    points : iterable of (rho, successes, total)
        Needs at least two distinct ``rho`` with ``total > 0``.

    Returns
    -------
    LogisticFit
        On complete separation the fit is flagged (``separated=True``,
        ``converged=False``) and ``rho_half`` is the midpoint between the last
        all-success and the first all-failure ``rho``.
    """
    pts = sorted((float(r), int(s), int(n)) for r, s, n in points if int(n) > 0)
    rho = np.array([p[0] for p in pts])
    succ = np.array([p[1] for p in pts], dtype=float)
    tot = np.array([p[2] for p in pts], dtype=float)
    if np.unique(rho).size < 2:
        raise DomainError("logistic fit needs at least two distinct rho values")
    mid = _separation_midpoint(rho, succ, tot)
    if mid is not None:
        return LogisticFit(a=math.nan, b=math.nan, rho_half=mid, converged=False, separated=True)

    # centre and scale rho for conditioning, then map back
    c, s = rho.mean(), rho.std()
    X = np.column_stack([np.ones_like(rho), (rho - c) / s])
    theta = np.zeros(2)
    converged = False
    for _ in range(LOGISTIC_MAX_ITER):
        eta = X @ theta
        p = 0.5 * (1.0 + np.tanh(0.5 * eta))
        w = tot * p * (1.0 - p)
        grad = X.T @ (succ - tot * p)
        H = X.T @ (X * w[:, None])
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            break
        theta = theta + step
        if np.max(np.abs(step)) < LOGISTIC_TOL * (1.0 + np.max(np.abs(theta))):
            converged = True
            break
    b = theta[1] / s
    a = theta[0] - b * c
    if not converged or abs(b) > LOGISTIC_SLOPE_CAP or b == 0.0:
        mid = _separation_midpoint(rho, succ, tot)
        half = mid if mid is not None else (-a / b if b != 0.0 else math.nan)
        return LogisticFit(a=float(a), b=float(b), rho_half=float(half), converged=False)
    return LogisticFit(a=float(a), b=float(b), rho_half=float(-a / b), converged=True)


# -- empirical phase transition ---------------------------------------------

@dataclass(frozen=True)
class PhaseExperimentConfig:
    N: int = 1000
    trials: int = 20
    deltas: tuple = (0.3,)
    rho_half_width: float = 0.2
    rho_points: int = 41
    tol: float = 1e-4
    solver: str = "camp"
    ensemble: str = "gaussian"
    coeff_kind: str = "up"
    max_iters: int = 3000
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.tol <= 0:
            raise DomainError("tol must be positive")
        if self.solver not in ("camp", "classo"):
            raise DomainError(f"solver must be 'camp' or 'classo', got {self.solver!r}")
        if self.trials < 0 or self.rho_points < 2 or self.N < 1:
            raise DomainError("trials >= 0, rho_points >= 2 and N >= 1 are required")


@dataclass(frozen=True)
class SuccessRecord:
    delta: float
    rho: float
    trial: int
    success: bool
    rel_error: float
    failed: bool = False


@dataclass
class PhaseExperimentResult:
    records: list
    fits: dict
    rho_se: dict
    failures: int = 0

    @property
    def rho_hat(self):
        """``[(delta, rho_half)]`` in increasing ``delta``."""
        return [(d, self.fits[d].rho_half) for d in sorted(self.fits)]

    def table(self):
        """Aggregated ``(delta, rho, trials, successes, rho_hat_flag)`` rows.

        ``rho_hat_flag`` is 0 when the logistic fit for that ``delta`` is a
        regular maximum-likelihood fit and 1 when it fell back to the
        separation midpoint or did not converge.
        """
        agg = {}
        for r in self.records:
            if r.failed:
                continue
            key = (r.delta, r.rho)
            t, s = agg.get(key, (0, 0))
            agg[key] = (t + 1, s + int(r.success))
        rows = []
        for (d, rho), (t, s) in sorted(agg.items()):
            fit = self.fits.get(d)
            flag = 0 if fit is not None and fit.converged else 1
            rows.append({"delta": d, "rho": rho, "trials": t, "successes": s, "rho_hat_flag": flag})
        return rows

    def fit_table(self):
        return [{"delta": d, "a": f.a, "b": f.b, "rho_half": f.rho_half} for d, f in sorted(self.fits.items())]


def rho_grid(delta, cfg, rho_se=None):
    """``rho`` values centred on ``rho_SE(delta)``, dropping those with ``k < 1``."""
    center = phase_transition(delta).rho_se if rho_se is None else rho_se
    grid = np.linspace(center - cfg.rho_half_width, center + cfg.rho_half_width, cfg.rho_points)
    return [float(r) for r in grid if r > 0 and problem_size(delta, r, cfg.N)[1] >= 1]


def _phase_trial(task):
    cfg, di, delta, ri, rho, trial, tau = task
    with threadpool_limits(1):
        try:
            inst = make_instance(delta, rho, cfg.N, cfg.ensemble, cfg.coeff_kind, 0.0,
                                 seed=cfg.master_seed, labels=("phase", di, ri, trial))
            if cfg.solver == "camp":
                res = camp_solve(inst, CampOptions(tau=tau, max_iters=cfg.max_iters))
            else:
                lam = 1e-6 * float(np.max(np.abs(inst.y @ inst.matrix.conj())))
                res = fista_classo(inst, lam, FistaOptions(max_iters=cfg.max_iters))
            ok, rel = success_indicator(res.estimate, inst.truth, cfg.tol)
            return SuccessRecord(delta, rho, trial, bool(ok), rel)
        except CampLabError:
            return SuccessRecord(delta, rho, trial, False, math.nan, failed=True)


def _run_tasks(fn, tasks, workers):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    return [fn(t) for t in tasks]


def empirical_phase_transition(cfg):
    """Run the fixed-``k`` success experiment and locate ``p(rho) = 1/2`` per ``delta``.

    For each ``delta`` the grid spans ``rho_SE(delta) +- rho_half_width``;
    CAMP uses the optimal threshold ratio ``tau*(delta)``. Trials that raise
    a solver error are recorded as failed and left out of the fit.
    """
    tasks, rho_se = [], {}
    if cfg.trials > 0:
        for di, delta in enumerate(cfg.deltas):
            pt = phase_transition(delta)
            rho_se[float(delta)] = pt.rho_se
            for ri, rho in enumerate(rho_grid(delta, cfg, pt.rho_se)):
                for trial in range(cfg.trials):
                    tasks.append((cfg, di, float(delta), ri, rho, trial, pt.tau_star))
    records = sorted(_run_tasks(_phase_trial, tasks, cfg.workers), key=lambda r: (r.delta, r.rho, r.trial))
    fits = {}
    for delta in sorted(rho_se):
        counts = {}
        for r in records:
            if r.delta == delta and not r.failed:
                t, s = counts.get(r.rho, (0, 0))
                counts[r.rho] = (t + 1, s + int(r.success))
        pts = [(rho, s, t) for rho, (t, s) in counts.items()]
        if len({p[0] for p in pts}) >= 2:
            fits[delta] = logistic_fit(pts)
    return PhaseExperimentResult(records=records, fits=fits, rho_se=rho_se,
                                 failures=sum(r.failed for r in records))


# -- universality -------------------------------------------------------------

def _default_sigmas():
    return tuple(float(s) for s in np.geomspace(1e-3, 0.1, 50))


@dataclass(frozen=True)
class UniversalityConfig:
    delta: float = 0.25
    rho: float = 0.1
    tau: float = 2.0
    N: int = 1000
    sigmas: tuple = field(default_factory=_default_sigmas)
    pairs: tuple = (("gaussian", "rademacher"), ("gaussian", "ternary"))
    coeff_kind: str = "up"
    max_iters: int = 1000
    master_seed: int = 0
    workers: int = 1
    redraw_per_sigma: bool = False


@dataclass
class UniversalityResult:
    rows: list
    summary: list


def _universality_trial(task):
    cfg, si, sigma, ensemble = task
    with threadpool_limits(1):
        try:
            labels = ("universality", si) if cfg.redraw_per_sigma else ("universality",)
            inst = make_instance(cfg.delta, cfg.rho, cfg.N, ensemble, cfg.coeff_kind, sigma,
                                 seed=cfg.master_seed, labels=labels)
            res = camp_solve(inst, CampOptions(tau=cfg.tau, max_iters=cfg.max_iters))
            return (si, ensemble), res.mse_trace[-1]
        except CampLabError:
            return (si, ensemble), math.nan


def universality_sweep(cfg):
    """Paired CAMP MSEs for matrix ensembles sharing signal and noise draws.

    By default one matrix per ensemble, one signal and one unit noise vector
    ``w`` are drawn and ``y = A s_o + sigma w`` is swept over ``sigmas``;
    ``redraw_per_sigma=True`` draws a fresh instance for every ``sigma``.

    Returns rows ``(sigma, ensemble_a, ensemble_b, mse_a, mse_b)`` and per
    pair the Pearson correlation and the norm of the paired differences.
    """
    ensembles = sorted({e for pair in cfg.pairs for e in pair})
    tasks = [(cfg, si, float(s), e) for si, s in enumerate(cfg.sigmas) for e in ensembles]
    mse = dict(_run_tasks(_universality_trial, tasks, cfg.workers))
    rows, summary = [], []
    for ea, eb in cfg.pairs:
        a = np.array([mse[(si, ea)] for si in range(len(cfg.sigmas))])
        b = np.array([mse[(si, eb)] for si in range(len(cfg.sigmas))])
        for si, s in enumerate(cfg.sigmas):
            rows.append({"sigma": float(s), "ensemble_a": ea, "ensemble_b": eb,
                         "mse_a": float(a[si]), "mse_b": float(b[si])})
        ok = np.isfinite(a) & np.isfinite(b)
        corr = float(np.corrcoef(a[ok], b[ok])[0, 1]) if ok.sum() > 1 and np.ptp(a[ok]) > 0 else math.nan
        summary.append({"ensemble_a": ea, "ensemble_b": eb, "N": cfg.N, "correlation": corr,
                        "residual_norm": float(np.linalg.norm(a[ok] - b[ok])),
                        "failures": int((~ok).sum())})
    return UniversalityResult(rows=rows, summary=summary)


# -- SE against CAMP ------------------------------------------------------------

@dataclass(frozen=True)
class SEvsCampConfig:
    delta: float = 0.25
    rho: float = 0.1
    sigma: float = 0.1
    tau: float = 2.0
    N: int = 2000
    coeff_kind: str = "up"
    ensemble: str = "gaussian"
    seeds: int = 10
    t_max: int = 20
    master_seed: int = 0
    workers: int = 1


def _se_camp_trial(task):
    cfg, seed = task
    with threadpool_limits(1):
        inst = make_instance(cfg.delta, cfg.rho, cfg.N, cfg.ensemble, cfg.coeff_kind, cfg.sigma,
                             seed=cfg.master_seed, labels=("se-vs-camp", seed))
        res = camp_solve(inst, CampOptions(tau=cfg.tau, max_iters=cfg.t_max, stop_tol=0.0))
        return res.mse_trace


def se_vs_camp(cfg):
    """Seed-averaged CAMP MSE per iteration next to the SE prediction.

    CAMP runs exactly ``t_max`` iterations on each instance. The SE run uses
    the empirical sparsity ``k/n`` so both start from the same ``m_0``.

    Returns
    -------
    list of dict
        Rows ``(t, empirical_mse, se_mse)`` for ``t = 0 .. t_max``.
    """
    n, k = problem_size(cfg.delta, cfg.rho, cfg.N)
    traces = _run_tasks(_se_camp_trial, [(cfg, s) for s in range(cfg.seeds)], cfg.workers)
    emp = np.mean(np.array(traces), axis=0)
    p = SEParams(delta=n / cfg.N, rho=k / n, sigma=cfg.sigma, tau=cfg.tau,
                 amp_dist=amplitude_distribution(cfg.coeff_kind))
    se = se_trajectory(p, t_max=cfg.t_max, tol=0.0).m_values
    return [{"t": t, "empirical_mse": float(emp[t]), "se_mse": float(se[t])} for t in range(cfg.t_max + 1)]


# -- CAMP against the LASSO -----------------------------------------------------

@dataclass(frozen=True)
class CalibrationCheckConfig:
    delta: float = 0.25
    rho: float = 0.1
    sigma: float = 0.1
    tau: float = 2.0
    N: int = 2000
    coeff_kind: str = "up"
    ensemble: str = "gaussian"
    seeds: int = 10
    camp_iters: int = 3000
    master_seed: int = 0
    scale: str = "npi"
    workers: int = 1


def _camp_lasso_trial(task):
    cfg, seed, lam = task
    with threadpool_limits(1):
        inst = make_instance(cfg.delta, cfg.rho, cfg.N, cfg.ensemble, cfg.coeff_kind, cfg.sigma,
                             seed=cfg.master_seed, labels=("camp-vs-lasso", seed))
        camp = camp_solve(inst, CampOptions(tau=cfg.tau, max_iters=cfg.camp_iters))
        lasso = fista_classo(inst, lam)
        return {"seed": seed, "camp_mse": camp.mse_trace[-1], "lasso_mse": lasso.mse_trace[-1],
                "camp_objective": classo_objective(camp.estimate, inst, lam),
                "lasso_objective": classo_objective(lasso.estimate, inst, lam),
                "camp_converged": camp.converged, "lasso_converged": lasso.converged}


def camp_vs_lasso(cfg):
    """CAMP at ``tau`` against the LASSO at the calibrated ``lambda(tau)``.

    Returns the calibration and one row per seed with both MSEs and both
    LASSO objectives.
    """
    n, k = problem_size(cfg.delta, cfg.rho, cfg.N)
    p = SEParams(delta=n / cfg.N, rho=k / n, sigma=cfg.sigma, tau=cfg.tau,
                 amp_dist=amplitude_distribution(cfg.coeff_kind))
    cal = calibrate_lambda(cfg.tau, p, scale=cfg.scale)
    rows = _run_tasks(_camp_lasso_trial, [(cfg, s, cal.lam) for s in range(cfg.seeds)], cfg.workers)
    return cal, rows


def config_dict(cfg):
    """Plain-dict view of an experiment config (for manifests)."""
    return asdict(cfg)
