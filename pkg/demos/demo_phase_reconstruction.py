#!/usr/bin/env python3
"""
End-to-end phase reconstruction of a squeezed vacuum.

Simulates a balanced homodyne run on a squeezed vacuum (4.9 dB below
shot noise in the squeezed quadrature), estimates the first eight
exponential phase moments directly from the quadrature samples, then
synthesizes the canonical phase distribution and compares it with the
exact distribution of the truncated state.

The squeezed vacuum has a two-peaked phase distribution with maxima at
phi = pi/2 and 3 pi/2, which makes it a good stress test: all odd
moments vanish and the even ones alternate in sign.

Prints a moment table with statistical error bars, writes the grid of
the reconstructed distribution next to this script as
phase_distribution.txt, and exits 0 when every estimated moment lies
within four error bars of the exact value and the reconstruction error
stays below the propagated moment noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from phasekit.estimator import MomentEstimate, estimate_all
from phasekit.kernels import KernelSpec, build_kernel_table
from phasekit.reconstruct import fourier_reconstruct, save_distribution
from phasekit.simulator import ExperimentPlan, run_experiment
from phasekit.states import StateSpec, build_state, exact_moments, exact_phase_dist


@dataclass(frozen=True)
class DemoConfig:
    squeeze: float = -1.31
    n_max: int = 20
    capture_tol: float = 0.05
    n_phases: int = 60
    events_per_phase: int = 4000
    k_max: int = 8
    grid_points: int = 256
    seed: int = 71
    sigma_limit: float = 4.0


def main() -> int:
    cfg = DemoConfig()
    spec = StateSpec(kind="squeezed_vacuum", squeeze=cfg.squeeze,
                     n_max=cfg.n_max)
    rho = build_state(spec, capture_tol=cfg.capture_tol)

    plan = ExperimentPlan.uniform(spec, n_phases=cfg.n_phases,
                                  events=cfg.events_per_phase,
                                  seed=cfg.seed)
    measurements = run_experiment(plan, capture_tol=cfg.capture_tol)
    print("simulated %d phases x %d events, seed %d"
          % (cfg.n_phases, cfg.events_per_phase, cfg.seed))

    tables = {k: build_kernel_table(KernelSpec(k=k))
              for k in range(1, cfg.k_max + 1)}
    estimates = estimate_all(measurements, cfg.k_max, tables)

    print("  k     Re estimate        Im estimate        exact Re   pull")
    ok = True
    for est in estimates:
        exact = exact_moments(rho, est.k)
        pull = max(abs(est.value.real - exact.real) / est.sigma_re,
                   abs(est.value.imag - exact.imag) / est.sigma_im)
        ok = ok and pull < cfg.sigma_limit
        print("  %d  %+.5f(%d)  %+.5f(%d)  %+.5f  %.2f"
              % (est.k,
                 est.value.real, round(1e5 * est.sigma_re),
                 est.value.imag, round(1e5 * est.sigma_im),
                 exact.real, pull))
    print("[%s] moments k <= %d within %.0f sigma"
          % ("PASS" if ok else "FAIL", cfg.k_max, cfg.sigma_limit))

    dist = fourier_reconstruct(estimates, cfg.k_max, cfg.grid_points)
    exact_low = [
        MomentEstimate(k=k, value=exact_moments(rho, k), var_re=1.0,
                       var_im=1.0, n_phases=cfg.n_phases,
                       compensated=False, eta_assumed=1.0)
        for k in range(1, cfg.k_max + 1)
    ]
    truth = fourier_reconstruct(exact_low, cfg.k_max, cfg.grid_points)
    sup_gap = float(np.max(np.abs(dist.values - truth.values)))
    budget = sum(2.0 * (est.sigma_re + est.sigma_im)
                 for est in estimates) / np.pi / 2.0
    ok_dist = sup_gap < cfg.sigma_limit * budget
    print("[%s] reconstruction noise: sup gap to the exact-moment "
          "synthesis %.2e, budget %.2e"
          % ("PASS" if ok_dist else "FAIL", sup_gap,
             cfg.sigma_limit * budget))

    truncation = float(np.max(np.abs(truth.values
                                     - exact_phase_dist(rho, dist.grid))))
    print("series truncation at K = %d: sup |P_K - P| = %.3f "
          "(shrinks as more moments are kept)"
          % (cfg.k_max, truncation))

    out_path = Path(__file__).resolve().parent / "phase_distribution.txt"
    save_distribution(dist, out_path)
    print("wrote %s" % out_path)

    ok = ok and ok_dist
    print("[%s] end-to-end reconstruction" % ("PASS" if ok else "FAIL"))
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
