"""``camplab`` command-line front end.

Every subcommand accepts ``--config FILE`` (JSON, see :mod:`camplab.io`) and
flags named after its parameters (``--rho-half-width 0.2``); flags override
the file. The result table goes to ``--out`` (default ``<command>.csv``) and
a ``.manifest.json`` with the full configuration lands next to it.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import calibrate_lambda, minimax_risk, noise_sensitivity, phase_transition_curve
from .ensembles import amplitude_distribution, make_instance
from .errors import AbovePhaseTransitionError, CampLabError, ConfigError, DomainError, NumericalFailure
from .experiments import (CalibrationCheckConfig, PhaseExperimentConfig, SEvsCampConfig,
                          UniversalityConfig, camp_vs_lasso, empirical_phase_transition,
                          se_vs_camp, universality_sweep)
from .io import COMMAND_PARAMS, REQUIRED, CliConfig, read_config, validate_params, write_manifest, write_table
from .solvers import CampOptions, ProblemInstance, camp_solve, classo_objective, fista_classo
from .state_evolution import SEParams, se_trajectory

__all__ = ["run_command", "main"]

THREADS_ENV = "CAMP_LAB_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _flag(key):
    return "--" + key.replace("_", "-")


def build_parser():
    parser = _Parser(prog="camplab", description="Complex sparse recovery workbench.")
    parser.add_argument("--version", action="version", version=f"camplab {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    for cmd, table in COMMAND_PARAMS.items():
        p = sub.add_parser(cmd)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out", dest="output_path", help="output CSV path")
        p.add_argument("--seed", dest="master_seed", type=int, help="master seed")
        p.add_argument("--threads", type=int, help=f"worker processes (overridden by {THREADS_ENV})")
        for key, (kind, default) in table.items():
            kw = {"dest": f"param__{key}", "default": None}
            if kind in ("floats", "strs"):
                kw["nargs"] = "+"
            hint = "required" if default is REQUIRED else f"default {default!r}"
            p.add_argument(_flag(key), help=hint, **kw)
    return parser


def _resolve_config(ns):
    if ns.config:
        cfg = read_config(ns.config)
        if cfg.command != ns.command:
            raise ConfigError(f"config is for command {cfg.command!r}, not {ns.command!r}", key="command")
        params = {k: v for k, v in cfg.params.items() if v is not None}
    else:
        cfg = CliConfig(command=ns.command)
        params = {}
    for name, value in vars(ns).items():
        if name.startswith("param__") and value is not None:
            params[name[len("param__"):]] = value
    cfg.params = validate_params(ns.command, params)
    if ns.output_path:
        cfg.output_path = ns.output_path
    if cfg.output_path is None:
        cfg.output_path = f"{ns.command}.csv"
    if ns.master_seed is not None:
        if ns.master_seed < 0:
            raise ConfigError("master seed must be non-negative", key="master_seed")
        cfg.master_seed = ns.master_seed
    if ns.threads is not None:
        cfg.threads = ns.threads
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            cfg.threads = int(env)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}", key=THREADS_ENV) from None
    if cfg.threads < 1:
        raise ConfigError("threads must be at least 1", key="threads")
    return cfg


def _sibling(path, suffix):
    p = Path(path)
    return p.with_name(p.stem + suffix + p.suffix)


# -- commands -----------------------------------------------------------------

def _cmd_phase_curve(cfg):
    q = cfg.params
    n = q["deltas"]
    if n < 1:
        raise ConfigError("deltas must be at least 1", key="deltas")
    lo = q["delta_min"] if q["delta_min"] is not None else 1.0 / (n + 1)
    hi = q["delta_max"] if q["delta_max"] is not None else n / (n + 1)
    pts = phase_transition_curve(np.linspace(lo, hi, n), workers=cfg.threads)
    rows = [{"delta": p.delta, "rho_se": p.rho_se, "tau_star": p.tau_star} for p in pts]
    write_table(rows, ["delta", "rho_se", "tau_star"], cfg.output_path)
    return {"rows": len(rows)}


def _cmd_minimax(cfg):
    n = cfg.params["eps_points"]
    if n < 2:
        raise ConfigError("eps_points must be at least 2", key="eps_points")
    rows = []
    for eps in np.linspace(0.0, 1.0, n):
        m, tau = minimax_risk(float(eps))
        rows.append({"eps": float(eps), "m_flat": m, "tau_star": tau})
    write_table(rows, ["eps", "m_flat", "tau_star"], cfg.output_path)
    return {"rows": len(rows)}


def _cmd_ns(cfg):
    q = cfg.params
    res = noise_sensitivity(q["delta"], q["rho"])
    write_table([{"delta": q["delta"], "rho": q["rho"], "ns": res.value, "m_flat": res.m_flat}],
                ["delta", "rho", "ns", "m_flat"], cfg.output_path)
    return {"rho_mse": res.rho_boundary}


def _cmd_se(cfg):
    q = cfg.params
    p = SEParams(delta=q["delta"], rho=q["rho"], sigma=q["sigma"], tau=q["tau"],
                 amp_dist=amplitude_distribution(q["coeff_kind"], q["gamma"]))
    tr = se_trajectory(p, t_max=q["t_max"], tol=q["tol"])
    rows = [{"t": t, "m": m, "npi": v} for t, (m, v) in enumerate(zip(tr.m_values, tr.npi_values))]
    write_table(rows, ["t", "m", "npi"], cfg.output_path)
    return {"converged": tr.converged, "fixed_point": tr.fixed_point}


def _cmd_solve(cfg):
    q = cfg.params
    if q["instance"]:
        inst = ProblemInstance.load(q["instance"])
    else:
        inst = make_instance(q["delta"], q["rho"], q["N"], q["ensemble"], q["coeff_kind"], q["sigma"],
                             seed=cfg.master_seed, labels=("solve",))
    if q["save_instance"]:
        inst.save(q["save_instance"])
    if q["solver"] == "camp":
        res = camp_solve(inst, CampOptions(tau=q["tau"], max_iters=q["max_iters"], stop_tol=q["stop_tol"],
                                           onsager_mode=q["onsager_mode"], npi_estimator=q["npi_estimator"]))
        lam = None
    elif q["solver"] == "classo":
        if q["lambda"] is None:
            raise ConfigError("solver 'classo' needs 'lambda'", key="lambda")
        lam = q["lambda"]
        res = fista_classo(inst, lam)
    else:
        raise ConfigError(f"solver must be 'camp' or 'classo', got {q['solver']!r}", key="solver")
    rows = [{"index": i, "re": float(v.real), "im": float(v.imag)} for i, v in enumerate(res.estimate)]
    write_table(rows, ["index", "re", "im"], cfg.output_path)
    out = {"iterations": res.iterations, "converged": res.converged,
           "final_residual_norm": res.residual_norms[-1] if res.residual_norms else None}
    if res.mse_trace:
        out["mse"] = res.mse_trace[-1]
    if lam is not None:
        out["objective"] = classo_objective(res.estimate, inst, lam)
    return out


def _cmd_mc_phase(cfg):
    q = cfg.params
    pc = PhaseExperimentConfig(N=q["N"], trials=q["trials"], deltas=q["deltas"],
                               rho_half_width=q["rho_half_width"], rho_points=q["rho_points"], tol=q["tol"],
                               solver=q["solver"], ensemble=q["ensemble"], coeff_kind=q["coeff_kind"],
                               max_iters=q["max_iters"], master_seed=cfg.master_seed, workers=cfg.threads)
    res = empirical_phase_transition(pc)
    write_table(res.table(), ["delta", "rho", "trials", "successes", "rho_hat_flag"], cfg.output_path)
    write_table(res.fit_table(), ["delta", "a", "b", "rho_half"], _sibling(cfg.output_path, "_fit"))
    return {"failures": res.failures, "rho_hat": res.rho_hat, "rho_se": sorted(res.rho_se.items())}


def _cmd_universality(cfg):
    q = cfg.params
    pairs = []
    for text in q["pairs"]:
        parts = text.split(":")
        if len(parts) != 2:
            raise ConfigError(f"pair {text!r} must look like 'gaussian:rademacher'", key="pairs")
        pairs.append(tuple(parts))
    sigmas = tuple(float(s) for s in np.geomspace(q["sigma_min"], q["sigma_max"], q["sigma_points"]))
    uc = UniversalityConfig(delta=q["delta"], rho=q["rho"], tau=q["tau"], N=q["N"], sigmas=sigmas,
                            pairs=tuple(pairs), coeff_kind=q["coeff_kind"], max_iters=q["max_iters"],
                            master_seed=cfg.master_seed, workers=cfg.threads,
                            redraw_per_sigma=q["redraw_per_sigma"])
    res = universality_sweep(uc)
    write_table(res.rows, ["sigma", "ensemble_a", "ensemble_b", "mse_a", "mse_b"], cfg.output_path)
    return {"summary": res.summary}


def _cmd_se_vs_camp(cfg):
    q = cfg.params
    sc = SEvsCampConfig(delta=q["delta"], rho=q["rho"], sigma=q["sigma"], tau=q["tau"], N=q["N"],
                        coeff_kind=q["coeff_kind"], ensemble=q["ensemble"], seeds=q["seeds"], t_max=q["t_max"],
                        master_seed=cfg.master_seed, workers=cfg.threads)
    rows = se_vs_camp(sc)
    write_table(rows, ["t", "empirical_mse", "se_mse"], cfg.output_path)
    gaps = [abs(r["empirical_mse"] / r["se_mse"] - 1.0) for r in rows if r["se_mse"] > 0]
    return {"max_relative_gap": max(gaps) if gaps else math.nan}


def _cmd_calibrate(cfg):
    q = cfg.params
    p = SEParams(delta=q["delta"], rho=q["rho"], sigma=q["sigma"], tau=q["tau"],
                 amp_dist=amplitude_distribution(q["coeff_kind"]))
    cal = calibrate_lambda(q["tau"], p, scale=q["scale"])
    write_table([{"tau": cal.tau, "lambda": cal.lam, "m_star": cal.m_star,
                  "onsager_expectation": cal.onsager_expectation}],
                ["tau", "lambda", "m_star", "onsager_expectation"], cfg.output_path)
    out = {"scale": cal.scale}
    if q["compare"]:
        cc = CalibrationCheckConfig(delta=q["delta"], rho=q["rho"], sigma=q["sigma"], tau=q["tau"], N=q["N"],
                                    coeff_kind=q["coeff_kind"], seeds=q["seeds"], scale=q["scale"],
                                    master_seed=cfg.master_seed, workers=cfg.threads)
        _, rows = camp_vs_lasso(cc)
        write_table(rows, list(rows[0]), _sibling(cfg.output_path, "_compare"))
        out["camp_mse_mean"] = float(np.mean([r["camp_mse"] for r in rows]))
        out["lasso_mse_mean"] = float(np.mean([r["lasso_mse"] for r in rows]))
    return out


HANDLERS = {
    "phase-curve": _cmd_phase_curve,
    "minimax": _cmd_minimax,
    "ns": _cmd_ns,
    "se": _cmd_se,
    "solve": _cmd_solve,
    "mc-phase": _cmd_mc_phase,
    "universality": _cmd_universality,
    "se-vs-camp": _cmd_se_vs_camp,
    "calibrate": _cmd_calibrate,
}


def run_command(argv=None, stderr=None):
    """Parse ``argv``, run the command and return the exit code."""
    stderr = stderr or sys.stderr
    try:
        ns = build_parser().parse_args(argv)
        if ns.command is None:
            raise UsageError("camplab: a command is required (" + ", ".join(HANDLERS) + ")")
        cfg = _resolve_config(ns)
        results = HANDLERS[cfg.command](cfg)
        write_manifest(cfg.output_path, cfg, __version__, results)
        return 0
    except (UsageError, ConfigError) as e:
        key = getattr(e, "key", None)
        print(f"error: {e}" + (f" [key: {key}]" if key else ""), file=stderr)
        return 1
    except (NumericalFailure, AbovePhaseTransitionError, ArithmeticError) as e:
        print(f"numerical failure: {e}", file=stderr)
        return 2
    except (DomainError, CampLabError) as e:
        print(f"error: {e}", file=stderr)
        return 1


def main():
    sys.exit(run_command())
