"""Split a squeezed vacuum on a 50/50 beam splitter, count one photon in one arm."""

import argparse
from pathlib import Path

import numpy as np

from gaussprobe.gstate import GaussianState, ModeKind, ModeLayout
from gaussprobe.wigner import (condition_single_photon, count_peaks, marginal,
                               wigner_negativity, write_grid_csv)


def split_squeezed(r: float) -> GaussianState:
    lay = ModeLayout.of(("a", ModeKind.FIELD), ("b", ModeKind.FIELD))
    c = 1 / np.sqrt(2)
    bs = np.zeros((4, 4))
    bs[np.ix_([0, 2], [0, 2])] = [[c, c], [-c, c]]
    bs[np.ix_([1, 3], [1, 3])] = [[c, c], [-c, c]]
    return GaussianState(lay, np.zeros(4), bs @ np.diag([1 / r, r, 1, 1]) @ bs.T)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--r", type=float, default=np.e, help="squeezing factor of diag(1/r, r)")
    ap.add_argument("--points", type=int, default=256)
    ap.add_argument("--out", default="runs/photon_wigner.csv")
    args = ap.parse_args()
    grid, P = condition_single_photon(split_squeezed(args.r), "b", points=args.points)
    lo, vol = wigner_negativity(grid)
    _, mx = marginal(grid, 0)
    print(f"detection probability {P:.5f}, normalization {grid.total_mass():.8f}")
    print(f"minimum W {lo:.4f}, negative volume {vol:.4f}, x-marginal peaks {count_peaks(mx)}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_grid_csv(grid, out)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
