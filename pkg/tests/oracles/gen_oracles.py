"""Independent reference values for the test suite.

Nothing here imports camplab: soft thresholding, the MSE map and the
Onsager expectation are re-derived inline from their definitions and
evaluated by brute-force Monte Carlo, fixed-grid Gauss-Legendre rules or
dense grids. Run once; the printed JSON is frozen into ``frozen.json`` and
the tests compare against it.

    python tests/oracles/gen_oracles.py > tests/oracles/frozen.json
"""
import json
import math
import sys

import numpy as np
from scipy import optimize, special

SAMPLES = 10_000_000
CHUNK = 1_000_000


def shrink(x, t):
    a = np.abs(x)
    return np.where(a > t, x * (1.0 - t / np.maximum(a, 1e-300)), 0.0)


def cgauss(rng, size):
    # Z1 + i Z2 with Z1, Z2 ~ N(0, 1/2)
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) * math.sqrt(0.5)


def mc_mean(sample_fn, seed):
    rng = np.random.default_rng(seed)
    s = s2 = 0.0
    for _ in range(SAMPLES // CHUNK):
        v = sample_fn(rng, CHUNK)
        s += v.sum()
        s2 += (v * v).sum()
    mean = s / SAMPLES
    var = s2 / SAMPLES - mean * mean
    return mean, math.sqrt(var / SAMPLES)


def chi2_gauss_legendre(tau, nodes=400, width=14.0):
    x, w = np.polynomial.legendre.leggauss(nodes)
    om = tau + 0.5 * width * (x + 1.0)
    return float(0.5 * width * np.sum(w * om * (om - tau) ** 2 * np.exp(-om * om)))


def chi2_quick(tau):
    # for dense grids only: the same Gauss-Legendre rule, vectorised over tau
    x, w = np.polynomial.legendre.leggauss(200)
    tau = np.atleast_1d(tau)[:, None]
    om = tau + 7.0 * (x + 1.0)
    return np.sum(7.0 * w * om * (om - tau) ** 2 * np.exp(-om * om), axis=1)


def main():
    out = {}

    out["chi2_2"] = chi2_gauss_legendre(2.0)

    # E|eta(Z; 1)|^2
    m, se = mc_mean(lambda r, n: np.abs(shrink(cgauss(r, n), 1.0)) ** 2, 1)
    out["eta_zero_risk_1"] = {"mean": m, "se": se}

    # r(1, 1) with a uniform random phase
    def risk_sample(r, n, mu=1.0, tau=1.0):
        x = mu * np.exp(2j * np.pi * r.random(n))
        return np.abs(shrink(x + cgauss(r, n), tau) - x) ** 2

    m, se = mc_mean(risk_sample, 2)
    out["soft_risk_1_1"] = {"mean": m, "se": se}

    # MSE map at m = 0.5 for delta=0.25, rho=0.1, sigma=0.1, tau=2, unit amplitude
    delta, rho, sigma, tau = 0.25, 0.1, 0.1, 2.0
    eps = rho * delta
    npi = sigma ** 2 + 0.5 / delta

    def psi_sample(r, n):
        x = np.where(r.random(n) < eps, np.exp(2j * np.pi * r.random(n)), 0.0)
        obs = x + math.sqrt(npi) * cgauss(r, n)
        return np.abs(shrink(obs, tau * math.sqrt(npi)) - x) ** 2

    m, se = mc_mean(psi_sample, 3)
    out["mse_map_0.5"] = {"mean": m, "se": se}

    # Fixed point of the same map by bracketing root finding on a quadrature Psi.
    # The risk is integrated on a polar Gauss-Legendre grid (independent of the
    # Rice/Bessel reduction used by the library).
    rr, wr = np.polynomial.legendre.leggauss(400)
    th, wt = np.polynomial.legendre.leggauss(200)

    def risk_polar(mu, t):
        # E|eta(mu + Z) - mu|^2, Z complex normal with density exp(-|z|^2)/pi;
        # polar grid centred on the observation mean
        R = 7.0
        rad = 0.5 * R * (rr + 1.0)
        ang = np.pi * (th + 1.0)
        Rg, Ag = np.meshgrid(rad, ang, indexing="ij")
        z = Rg * np.exp(1j * Ag)
        err = np.abs(shrink(mu + z, t) - mu) ** 2
        dens = np.exp(-Rg * Rg) / np.pi * Rg
        W = np.outer(0.5 * R * wr, np.pi * wt)
        return float(np.sum(W * err * dens))

    c2 = chi2_gauss_legendre(tau)

    def psi(mm):
        v = sigma ** 2 + mm / delta
        return v * ((1 - eps) * 2 * c2 + eps * risk_polar(1.0 / math.sqrt(v), tau))

    out["psi_polar_0.5"] = psi(0.5)
    out["se_fixed_point"] = optimize.bisect(lambda mm: psi(mm) - mm, 1e-6, 0.1, xtol=1e-15, rtol=1e-14)

    # derivative of Psi at zero for sigma = 0 by a one-sided difference
    def psi0(mm):
        v = mm / delta
        return v * ((1 - eps) * 2 * c2 + eps * risk_polar(1.0 / math.sqrt(v), tau))

    # Psi(m)/m = D - c sqrt(m) + O(m) because the large-amplitude risk is
    # 1 + tau^2 - tau/mu; eliminate the sqrt(m) term with m and 4m
    h = 1e-8
    out["dpsi0_fd"] = 2 * psi0(h) / h - psi0(4 * h) / (4 * h)

    # phase transition at delta = 0.5 on a 1e5-point grid (chi2 by quadrature)
    grid = np.linspace(1e-6, 20.0, 100_001)
    dd = 0.5
    c2g = chi2_quick(grid)
    rho_g = (dd - 2 * c2g) / (dd * (1 + grid ** 2 - 2 * c2g))
    i = int(np.argmax(rho_g))
    out["rho_se_0.5"] = {"rho": float(rho_g[i]), "tau": float(grid[i]), "grid_step": float(grid[1] - grid[0])}

    # minimax risk at eps = 0.1 on the same grid
    e = 0.1
    f = 2 * (1 - e) * c2g + e * (1 + grid ** 2)
    j = int(np.argmin(f))
    out["minimax_0.1"] = {"m": float(f[j]), "tau": float(grid[j])}

    # rho_MSE(0.25): bisection on M(rho delta) = delta with M from the dense grid
    def mflat(ep):
        return float(np.min(2 * (1 - ep) * c2g + ep * (1 + grid ** 2)))

    out["rho_mse_0.25"] = optimize.bisect(lambda r_: mflat(0.25 * r_) - 0.25, 1e-6, 4.0, xtol=1e-13)

    # Onsager expectation E[d1R + d2I] at the fixed point, scale sqrt(npi*)
    mstar = out["se_fixed_point"]
    s = math.sqrt(sigma ** 2 + mstar / delta)

    def ons_sample(r, n):
        x = np.where(r.random(n) < eps, np.exp(2j * np.pi * r.random(n)), 0.0)
        obs = x + s * cgauss(r, n)
        a = np.abs(obs)
        return np.where(a > tau * s, 2.0 - tau * s / a, 0.0)

    m, se = mc_mean(ons_sample, 4)
    out["onsager_calibration"] = {"mean": m, "se": se, "scale": s,
                                  "lambda": tau * s * (1 - m / (2 * delta)),
                                  "lambda_se": tau * s * se / (2 * delta)}

    # no-signal Onsager expectation at tau = 1.3: Rayleigh amplitude, 1-D quadrature
    t = 1.3
    xg, wg = np.polynomial.legendre.leggauss(400)
    a = t + 6.0 * (xg + 1.0)
    out["onsager_rayleigh_1.3"] = float(np.sum(6.0 * wg * (2 - t / a) * 2 * a * np.exp(-a * a)))

    json.dump(out, sys.stdout, indent=2, sort_keys=True)
    print()


if __name__ == "__main__":
    main()
