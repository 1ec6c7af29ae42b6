"""Analytic curves: the noise-free phase transition, its small-delta
asymptote, the minimax risk and noise sensitivity.

    python demos/phase_diagram.py
"""
import numpy as np

from camplab.analysis import (minimax_risk, noise_sensitivity, phase_transition, phase_transition_asymptote,
                              phase_transition_parametric, real_lasso_asymptote)


def main():
    print("delta    rho_SE    tau*     1/log(1/(2 delta))   real LASSO")
    for delta in (0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9):
        pt = phase_transition(delta)
        asym = phase_transition_asymptote(delta) if delta <= 0.1 else float("nan")
        print(f"{delta:5.2f}   {pt.rho_se:.5f}   {pt.tau_star:.4f}   {asym:12.5f}        {real_lasso_asymptote(delta):.5f}")

    # the same curve traced parametrically in the optimal threshold
    print("\ntau*    delta(tau*)  rho(tau*)")
    for tau in (0.3, 0.8, 1.2, 1.6, 2.0):
        d, r = phase_transition_parametric(tau)
        print(f"{tau:4.1f}    {d:.5f}      {r:.5f}")

    print("\neps     M(eps)    tau_minimax")
    for eps in (0.01, 0.05, 0.1, 0.2, 0.5):
        m, tau = minimax_risk(eps)
        print(f"{eps:4.2f}    {m:.5f}   {tau:.4f}")

    print("\nnoise sensitivity at delta = 0.25")
    for rho in np.linspace(0.05, 0.35, 7):
        ns = noise_sensitivity(0.25, rho)
        print(f"  rho={rho:.2f}  NS={ns.value:.4f}")


if __name__ == "__main__":
    main()
