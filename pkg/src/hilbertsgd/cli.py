"""Command line: ``hilbertsgd run <config> [...]`` and ``hilbertsgd plotdata <csv>``.

Exit status is 0 when every embedded check passes, 1 when a check fails and 2
for unreadable or invalid input.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .core import InvalidParameterError
from .experiments import ConfigError, ExperimentConfig, manifest, run_experiment

OUT_ENV = "HILBERTSGD_OUT"
DEFAULT_OUT = "results"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v) if math.isinf(v) or math.isnan(v) else f"{v:.17g}"
    return str(v)


def write_csv(path: Path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_manifest(path: Path, entries: dict):
    with open(path, "w") as fh:
        for k in sorted(entries):
            fh.write(f"{k} = {_fmt(entries[k]) if not isinstance(entries[k], list) else entries[k]}\n")


def load_config(path, overrides=None) -> ExperimentConfig:
    """Parse a TOML config file and apply command-line overrides."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    exp = data.get("experiment")
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        # overrides beat both top-level keys and the experiment's table
        data[k] = v
        if isinstance(data.get(exp), dict):
            data[exp].pop(k, None)
    try:
        return ExperimentConfig.from_mapping(data)
    except (TypeError, InvalidParameterError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def run(config_path, seed=None, out=None, replicas=None, steps=None, stream=None) -> int:
    stream = stream or sys.stdout
    try:
        cfg = load_config(config_path, {"seed": seed, "n_replicas": replicas, "n_steps": steps})
        out_dir = Path(out or cfg.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
        out_dir.mkdir(parents=True, exist_ok=True)
        result = run_experiment(cfg)
    except (ConfigError, InvalidParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    stem = out_dir / cfg.experiment
    write_csv(stem.with_suffix(".csv"), result.columns, result.rows)
    write_csv(Path(f"{stem}.checks.csv"), ("check", "value", "target", "passed"),
              [(c.name, c.value, c.target, c.passed) for c in result.checks])
    write_manifest(Path(f"{stem}.manifest.txt"), manifest(cfg, result))

    for c in result.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {_fmt(c.value)} (target {c.target})",
              file=stream)
    for k, v in result.summary.items():
        print(f"{k} = {_fmt(v)}", file=stream)
    if not result.passed:
        names = ", ".join(c.name for c in result.failed())
        print(f"failed check(s): {names}", file=sys.stderr)
        return 1
    return 0


def emit_plotdata(csv_path) -> Path:
    """Write log10 columns ``n value bound [se_band]`` next to a results CSV.

    One block per beta, separated by blank lines.  The band column is the
    standard error in log10 units and only appears when some stderr is
    nonzero.
    """
    csv_path = Path(csv_path)
    try:
        with open(csv_path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            rows = list(reader)
    except OSError as exc:
        raise ConfigError(f"{csv_path}: {exc.strerror}") from None
    missing = [c for c in ("n", "beta", "mean", "bound") if c not in header]
    if missing:
        raise ConfigError(f"{csv_path}: missing column(s) {', '.join(missing)}")
    if not rows:
        raise ConfigError(f"{csv_path}: no result rows")

    def num(s):
        return float(s) if s not in ("", None) else math.nan

    with_se = "stderr" in header and any(num(r["stderr"]) > 0 for r in rows)
    blocks = {}
    for r in rows:
        blocks.setdefault(r["beta"], []).append(r)

    def lg(v):
        return math.log10(v) if v > 0 else math.nan

    out = csv_path.with_suffix(".plot.txt")
    cols = "log10_n log10_value log10_bound" + (" log10_se_band" if with_se else "")
    with open(out, "w") as fh:
        fh.write(f"# experiment: {csv_path.stem}\n# columns: {cols}\n")
        for beta, block in blocks.items():
            fh.write(f"\n# beta = {beta}\n")
            for r in block:
                n, m, b = num(r["n"]), num(r["mean"]), num(r["bound"])
                if not n > 0:
                    continue
                vals = [lg(n), lg(m), lg(b)]
                if with_se:
                    se = num(r["stderr"])
                    vals.append(se / (m * math.log(10)) if m > 0 else math.nan)
                fh.write(" ".join(_fmt(v) for v in vals) + "\n")
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hilbertsgd",
                                     description="Run rank-one SGD experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the experiment described by a TOML config")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    p_run.add_argument("--replicas", type=int)
    p_run.add_argument("--steps", type=int)
    p_plot = sub.add_parser("plotdata", help="turn a results CSV into log10 plot columns")
    p_plot.add_argument("csv")
    args = parser.parse_args(argv)

    if args.command == "run":
        return run(args.config, args.seed, args.out, args.replicas, args.steps)
    try:
        path = emit_plotdata(args.csv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
