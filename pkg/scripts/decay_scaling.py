"""Log-log slope of the field variance with and without atomic decay."""

import argparse

from gaussprobe.cli import loglog_slope
from gaussprobe.scenarios import ScenarioConfig, run_scalar_magnetometry


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eta", type=float, default=1.7577)
    ap.add_argument("--epsilon", type=float, default=0.028)
    ap.add_argument("--duration", type=float, default=5e-2)
    args = ap.parse_args()
    base = dict(scenario="scalar_magnetometry", tau=1e-8, duration=args.duration,
                kappa_tau_sq=0.0183, mu_tau=8.8e-4, record_every=10_000)
    window = (args.duration / 10, args.duration)
    for label, extra in (("noiseless", dict(decay=False)),
                         ("with decay", dict(eta=args.eta, epsilon=args.epsilon))):
        r = run_scalar_magnetometry(ScenarioConfig(**base, **extra))
        early = loglog_slope(r.times, r.variances["var_B"], (5e-4, 5e-3))
        late = loglog_slope(r.times, r.variances["var_B"], window)
        print(f"{label:>11}: slope {early:.3f} on [0.5, 5] ms, {late:.3f} on "
              f"[{window[0] * 1e3:g}, {window[1] * 1e3:g}] ms")


if __name__ == "__main__":
    main()
