"""Two-cell vector magnetometer: entangled readout against separate beams."""

import argparse

from gaussprobe.scenarios import ScenarioConfig, run_vector_magnetometry


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--duration", type=float, default=5e-3)
    args = ap.parse_args()
    cfg = ScenarioConfig(scenario="vector_magnetometry", tau=1e-8, duration=args.duration,
                         kappa_tau_sq=0.0183, mu_tau=8.8e-4, decay=False, record_every=10_000)
    res = {m: run_vector_magnetometry(cfg, mode=m) for m in ("entangled", "separate")}
    for k in ("var_By", "var_Bz"):
        a, b = res["entangled"].variances[k][-1], res["separate"].variances[k][-1]
        print(f"{k}: entangled {a:.4e}, separate {b:.4e}, ratio {b / a:.3f}")


if __name__ == "__main__":
    main()
