"""Command-line front end.

    tetrasds --scenario cfg.txt --sweep traffic.n_background=100,200,300 \
             --seed 7 --out results.csv

Writes one CSV row per sweep value (or a single row without a sweep) and a
reproducibility sidecar ``<out>.sidecar`` holding the fully resolved
configuration; running the sidecar back through ``--scenario`` reproduces
the CSV byte for byte.  Exit codes: 0 success, 2 invalid configuration or
usage, 1 I/O failure.
"""

from __future__ import annotations

import argparse
import sys

from . import config as cfgmod
from .config import ConfigError, ScenarioConfig
from .metrics import Aggregate
from .run import SweepRow, run_point, run_sweep
from . import metrics

CSV_COLUMNS = (
    "axis",
    "delay_mean_s",
    "delay_ci_s",
    "failure_prob",
    "failure_ci",
    "paoi_mean_s",
    "paoi_ci_s",
    "generated",
    "delivered",
    "dropped_holding",
    "dropped_nu",
    "dropped_sds_retry",
)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tetrasds",
        description="Monte-Carlo simulator of short-data transfer on a TETRA control channel",
    )
    p.add_argument("--scenario", metavar="FILE", help="flat key=value scenario file")
    p.add_argument(
        "--sweep",
        metavar="AXIS=V1,V2,...",
        help="sweep one axis over comma-separated values (overrides sweep.* file keys)",
    )
    p.add_argument("--seed", type=int, metavar="N", help="master seed (overrides run.master_seed)")
    p.add_argument("--out", default="results.csv", metavar="FILE", help="output CSV path")
    p.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        dest="overrides",
        help="override any scenario key (repeatable)",
    )
    p.add_argument("--engine", choices=("kernel", "reference"), help="simulation engine override")
    p.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes for replications")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")
    return p


def _render(value: float | int | str) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _row_cells(axis_value: str, agg: Aggregate) -> list[str]:
    return [
        axis_value,
        _render(agg.delay_mean_s),
        _render(agg.delay_ci_s),
        _render(agg.failure_mean),
        _render(agg.failure_ci),
        _render(agg.paoi_mean_s),
        _render(agg.paoi_ci_s),
        _render(agg.generated),
        _render(agg.delivered),
        _render(agg.dropped_holding),
        _render(agg.dropped_nu),
        _render(agg.dropped_sds_retry),
    ]


def emit_results(
    rows: list[SweepRow],
    destination: str,
    cfg: ScenarioConfig,
    sweep: tuple[str, list[str]] | None,
) -> None:
    """Write the CSV and its reproducibility sidecar."""
    if not rows:
        raise ValueError("nothing to write: empty result table")
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_row_cells(row.axis_value, row.aggregate)))
    with open(destination, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    with open(destination + ".sidecar", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(cfgmod.dump_config(cfg, sweep))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        pairs: dict[str, str] = {}
        if args.scenario:
            pairs = cfgmod.load_scenario_file(args.scenario)
        sweep = cfgmod.sweep_from_pairs(pairs)
        for item in args.overrides:
            if "=" not in item:
                raise ConfigError([f"--set expects KEY=VALUE, got {item!r}"])
            key, _, value = item.partition("=")
            pairs[key.strip()] = value.strip()
        if args.seed is not None:
            pairs["run.master_seed"] = str(args.seed)
        if args.engine is not None:
            pairs["run.engine"] = args.engine
        if args.sweep is not None:
            if "=" not in args.sweep:
                raise ConfigError(["--sweep expects AXIS=V1,V2,..."])
            axis, _, values = args.sweep.partition("=")
            parts = [v.strip() for v in values.split(",") if v.strip()]
            if not parts:
                raise ConfigError(["--sweep lists no values"])
            sweep = (axis.strip(), parts)
        cfg = cfgmod.config_from_pairs(pairs)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return 1

    try:
        if sweep is not None:
            axis, values = sweep
            rows = run_sweep(cfg, axis, values, jobs=args.jobs)
        else:
            summaries = run_point(cfg, jobs=args.jobs)
            rows = [SweepRow("-", metrics.aggregate(summaries, cfg.confidence))]
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return 2

    try:
        emit_results(rows, args.out, cfg, sweep)
    except OSError as exc:
        print(f"error: cannot write results: {exc}", file=sys.stderr)
        return 1

    if not args.quiet:
        for row in rows:
            agg = row.aggregate
            print(
                f"{row.axis_value}: delay {agg.delay_mean_s * 1e3:.1f} ms "
                f"(+-{agg.delay_ci_s * 1e3:.1f}), failure {agg.failure_mean:.4f} "
                f"(+-{agg.failure_ci:.4f}), paoi {agg.paoi_mean_s:.2f} s "
                f"(+-{agg.paoi_ci_s:.2f})"
            )
        print(f"wrote {args.out} and {args.out}.sidecar")
    return 0


if __name__ == "__main__":
    sys.exit(main())
