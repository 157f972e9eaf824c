"""Command-line runner: ``gaussprobe run`` writes CSV series plus a manifest, ``summarize`` reads them.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .config import config_snapshot, emit_config, parse_config
from .errors import ConfigError, GaussianError, InvalidArgument
from .scenarios import SCENARIOS, ScenarioConfig, TrajectoryResult, analytic_series, run_batch

OUT_ENV = "GAUSSPROBE_OUT"
FMT = "%.16e"


def engine_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


@dataclass
class RunManifest:
    scenario: str
    config: dict
    config_text: str
    seed: int
    trajectories: int
    engine_version: str
    wall_seconds: float
    outputs: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _columns(res: TrajectoryResult, suffix: str = ""):
    cols = {}
    for k, v in res.means.items():
        cols[f"mean_{k}{suffix}"] = v
    n_beams = res.outcomes.shape[1]
    for b in range(n_beams):
        name = "chi" if n_beams == 1 else f"chi{b + 1}"
        cols[f"{name}{suffix}"] = res.outcomes[:, b]
    return cols


def _write_csv(path: Path, columns: dict) -> None:
    names = list(columns)
    data = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        np.savetxt(fh, data, delimiter=",", fmt=FMT)


def run(scenario: str, cfg: ScenarioConfig, out_dir, trajectories: int = 1,
        layout: str = "columns", analytic: bool = False, check: bool = False) -> RunManifest:
    """Run ``trajectories`` seeded trajectories and write CSV(s) plus ``manifest.json``.

    Variance series do not depend on the trajectory and are written once per file.
    ``layout="columns"`` puts every trajectory's means and outcomes in one CSV with
    ``_t<k>`` suffixes; ``"files"`` writes one CSV per trajectory.
    """
    if scenario != cfg.scenario:
        cfg = dataclasses.replace(cfg, scenario=scenario)
    if trajectories < 1:
        raise InvalidArgument("need at least one trajectory")
    if layout not in ("columns", "files"):
        raise InvalidArgument(f"unknown layout {layout!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    results = run_batch(cfg, trajectories, check=check)
    base = {"t": results[0].times, **results[0].variances}
    if analytic:
        base.update(analytic_series(cfg, results[0].times))
    outputs = []
    if layout == "columns":
        cols = dict(base)
        for res in results:
            cols.update(_columns(res, f"_t{res.trajectory}"))
        path = out / f"{scenario}.csv"
        _write_csv(path, cols)
        outputs.append(path.name)
    else:
        for res in results:
            path = out / f"{scenario}_traj{res.trajectory:04d}.csv"
            _write_csv(path, {**base, **_columns(res)})
            outputs.append(path.name)
    warnings = list(cfg.warnings)
    if check:
        lo = min(r.nu_min for r in results)
        warnings.append(f"min symplectic eigenvalue {lo:.12g}")
    manifest = RunManifest(scenario, config_snapshot(cfg), emit_config(cfg), cfg.seed,
                           trajectories, engine_version(), time.perf_counter() - t0,
                           outputs, warnings)
    _atomic_write(out / "manifest.json", json.dumps(dataclasses.asdict(manifest), indent=2) + "\n")
    return manifest


def read_csv(path) -> dict:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(v) for v in row] for row in reader], dtype=float)
    rows = rows.reshape(-1, len(header))
    return {h: rows[:, i] for i, h in enumerate(header)}


def loglog_slope(t, y, window=None) -> float:
    t, y = np.asarray(t, dtype=float), np.asarray(y, dtype=float)
    mask = (t > 0) & (y > 0)
    if window is not None:
        lo, hi = window
        mask &= (t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12))
    if mask.sum() < 2:
        raise InvalidArgument("fewer than two positive points in the fit window")
    return float(np.polyfit(np.log(t[mask]), np.log(y[mask]), 1)[0])


def summarize(result_csv, window=None, column: str | None = None) -> dict:
    """Final value of each variance column, ``t_min`` of ``var_p`` and a log-log slope."""
    data = read_csv(result_csv)
    if "t" not in data:
        raise InvalidArgument("CSV has no 't' column")
    t = data["t"]
    var_cols = [k for k in data if k.startswith(("var_", "sd_", "epr", "log_neg"))]
    summary = {"final": {k: float(data[k][-1]) for k in var_cols}, "t_final": float(t[-1])}
    if "var_p" in data:
        i = int(np.argmin(data["var_p"]))
        summary["t_min"] = float(t[i])
        summary["var_p_min"] = float(data["var_p"][i])
        summary["interior_minimum"] = bool(0 < i < len(t) - 1)
    column = column or next((k for k in ("var_B", "var_p", "var_p_sum", "var_By")
                             if k in data), var_cols[0] if var_cols else None)
    if column is not None:
        if column not in data:
            raise InvalidArgument(f"no column {column!r}")
        summary["slope_column"] = column
        summary["slope"] = loglog_slope(t, data[column], window)
        summary["window"] = list(window) if window else None
    return summary


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gaussprobe", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario from a config file")
    r.add_argument("scenario", choices=SCENARIOS)
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", default=None,
                   help=f"output directory (default ${OUT_ENV} or ./runs/<scenario>)")
    r.add_argument("--trajectories", type=int, default=1)
    r.add_argument("--layout", choices=("columns", "files"), default="columns")
    r.add_argument("--analytic", action="store_true", help="add closed-form curves")
    r.add_argument("--no-decay", action="store_true", help="switch off atomic decay and absorption")
    r.add_argument("--record-every", type=int)
    r.add_argument("--check", action="store_true", help="track symplectic eigenvalues")
    s = sub.add_parser("summarize", help="summarize a result CSV")
    s.add_argument("csv")
    s.add_argument("--window", type=float, nargs=2, metavar=("T0", "T1"))
    s.add_argument("--column")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "summarize":
            print(json.dumps(summarize(args.csv, args.window, args.column), indent=2))
            return 0
        cfg = parse_config(args.config, args.scenario)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.no_decay:
            overrides["decay"] = False
        if args.record_every is not None:
            overrides["record_every"] = args.record_every
        cfg = dataclasses.replace(cfg, **overrides)
        out = args.out or os.environ.get(OUT_ENV) or os.path.join("runs", args.scenario)
        manifest = run(args.scenario, cfg, out, args.trajectories, args.layout,
                       args.analytic, args.check)
        for w in manifest.warnings:
            print(f"warning: {w}", file=sys.stderr)
        print(f"wrote {', '.join(manifest.outputs)} to {out} in {manifest.wall_seconds:.2f} s")
        return 0
    except (ConfigError, InvalidArgument, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except GaussianError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
