"""One problem instance end to end: CAMP against its state evolution, then
the LASSO at the matching regularisation weight.

    python demos/camp_walkthrough.py
"""
import numpy as np

from camplab import SEParams, calibrate_lambda, camp_solve, classo_objective, fista_classo, se_trajectory
from camplab.ensembles import make_instance
from camplab.solvers import CampOptions

DELTA, RHO, SIGMA, TAU, N = 0.25, 0.1, 0.1, 2.0, 2000


def main():
    inst = make_instance(DELTA, RHO, N, "gaussian", "up", SIGMA, seed=1)
    print(f"n={inst.n}  N={inst.N}  nonzeros={np.count_nonzero(inst.truth)}  sigma={SIGMA}")

    res = camp_solve(inst, CampOptions(tau=TAU, max_iters=20, stop_tol=0.0))
    se = se_trajectory(SEParams(delta=DELTA, rho=RHO, sigma=SIGMA, tau=TAU), t_max=20, tol=0.0)
    print("\n t    CAMP MSE      SE MSE")
    for t in range(0, 21, 2):
        print(f"{t:2d}   {res.mse_trace[t]:.6f}    {se.m_values[t]:.6f}")

    cal = calibrate_lambda(TAU, SEParams(delta=DELTA, rho=RHO, sigma=SIGMA))
    print(f"\nformal MSE {cal.m_star:.6f}; calibrated lambda({TAU}) = {cal.lam:.6f}")
    camp = camp_solve(inst, CampOptions(tau=TAU, max_iters=3000))
    lasso = fista_classo(inst, cal.lam)
    for name, r in (("CAMP", camp), ("LASSO", lasso)):
        print(f"{name:6s} MSE {r.mse_trace[-1]:.6f}  objective {classo_objective(r.estimate, inst, cal.lam):.6f}"
              f"  iterations {r.iterations}")


if __name__ == "__main__":
    main()
