"""Residual of the discrete magnetometer against its closed form as the segment length shrinks."""

import numpy as np

from gaussprobe.ricatti import analytic_B_var
from gaussprobe.scenarios import ScenarioConfig, run_scalar_magnetometry


def main():
    prev = None
    for tau in (8e-8, 4e-8, 2e-8, 1e-8):
        # per-segment couplings scale with tau at fixed rates
        cfg = ScenarioConfig(scenario="scalar_magnetometry", tau=tau, duration=1e-3,
                             kappa_tau_sq=1.83e6 * tau, mu_tau=8.8e4 * tau, decay=False,
                             record_every=int(round(1e-5 / tau)))
        r = run_scalar_magnetometry(cfg)
        ref = analytic_B_var(cfg.kappa_sq, cfg.mu_tau / tau, r.times[1:], cfg.var_b0)
        res = float(np.max(np.abs(r.variances["var_B"][1:] / ref - 1)))
        ratio = "" if prev is None else f"  (ratio {prev / res:.3f})"
        print(f"tau = {tau:.0e} s: max relative residual {res:.3e}{ratio}")
        prev = res


if __name__ == "__main__":
    main()
