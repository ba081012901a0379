"""Command line entry point: ``run``, ``grid`` and ``stats`` subcommands."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .core import GenotypeError
from .harness import (
    RUN_HEADER,
    SUMMARY_HEADER,
    ConfigError,
    ExperimentConfig,
    markdown_table,
    read_runs_csv,
    run_grid,
    run_rows,
    run_single,
)
from .problems import PROBLEM_NAMES
from .stats import summarize_cell

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


def _rates(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"bad rate list {text!r}") from None


def _flag(text: str) -> bool:
    return str(text).strip().lower() in ("1", "true", "yes", "on")


# config-file key -> (ExperimentConfig field, parser)
CONFIG_KEYS = {
    "problem": ("problem", str),
    "rates": ("rate_axis", _rates),
    "runs": ("runs_per_cell", int),
    "seed": ("base_seed", int),
    "workers": ("workers", int),
    "out": ("output_dir", Path),
    "lambda": ("lam", int),
    "point_rate": ("point_rate", float),
    "min_active": ("min_active", int),
    "budget": ("eval_budget", int),
    "generation_cap": ("generation_cap", int),
    "sagms": ("use_sagms", _flag),
    "dataset_seed": ("dataset_seed", int),
}


def read_config_file(path: str | Path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            name, parse = CONFIG_KEYS[key]
            try:
                values[name] = parse(value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return values


def _add_common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--problem", choices=PROBLEM_NAMES, default=S)
    p.add_argument("--seed", dest="base_seed", type=int, default=S)
    p.add_argument("--lambda", dest="lam", type=int, default=S)
    p.add_argument("--point-rate", type=float, default=S)
    p.add_argument("--min-active", type=int, default=S)
    p.add_argument("--budget", dest="eval_budget", type=int, default=S,
                   help="fitness evaluations per run (0 = unbounded)")
    p.add_argument("--generation-cap", type=int, default=S)
    p.add_argument("--sagms", dest="use_sagms", action="store_true", default=S,
                   help="single active-gene mutation instead of point mutation")
    p.add_argument("--dataset-seed", type=int, default=S,
                   help="share one sampled dataset across all runs")
    p.add_argument("-v", "--verbose", action="store_true")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cgpmut", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="independent runs of one rate setting")
    _add_common(p_run)
    p_run.add_argument("--insertion-rate", type=float, default=0.0)
    p_run.add_argument("--deletion-rate", type=float, default=0.0)
    p_run.add_argument("--runs", dest="runs_per_cell", type=int, default=argparse.SUPPRESS)

    p_grid = sub.add_parser("grid", help="insertion x deletion rate grid")
    _add_common(p_grid)
    p_grid.add_argument("--rates", dest="rate_axis", type=_rates, default=argparse.SUPPRESS)
    p_grid.add_argument("--runs", dest="runs_per_cell", type=int, default=argparse.SUPPRESS)
    p_grid.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    p_grid.add_argument("--out", dest="output_dir", type=Path, default=argparse.SUPPRESS)

    p_stats = sub.add_parser("stats", help="compare two per-run CSV files")
    p_stats.add_argument("--baseline", required=True, type=Path)
    p_stats.add_argument("--treatment", required=True, type=Path)
    p_stats.add_argument("--metric", choices=("generations", "fitness"), required=True)
    p_stats.add_argument("-v", "--verbose", action="store_true")
    return parser


_NON_CONFIG = {"command", "config", "verbose", "insertion_rate", "deletion_rate"}


def make_config(args: argparse.Namespace) -> ExperimentConfig:
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    values.update({k: v for k, v in vars(args).items() if k not in _NON_CONFIG})
    if "problem" not in values:
        raise ConfigError("--problem is required (flag or config file)")
    if args.command == "run":
        values.pop("output_dir", None)
        values.setdefault("runs_per_cell", 1)
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def cmd_run(args: argparse.Namespace) -> int:
    config = make_config(args)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(RUN_HEADER)
    records = []
    for k in range(config.runs_per_cell):
        record = run_single(config, args.insertion_rate, args.deletion_rate, k)
        records.append(record)
        writer.writerows(run_rows(config, args.deletion_rate, args.insertion_rate, [record], k))
        sys.stdout.flush()
    ok = sum(r.success for r in records)
    best = min(records, key=lambda r: r.best_fitness)
    logging.info("%d/%d successful; best fitness %r", ok, len(records), best.best_fitness)
    logging.info("best genotype: %s", best.best_genotype.dumps())
    return EXIT_OK


def cmd_grid(args: argparse.Namespace) -> int:
    config = make_config(args)
    result = run_grid(config)
    if config.output_dir is None:
        sys.stdout.write(markdown_table(result))
    else:
        logging.info("wrote %s", config.output_dir)
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    metric = "generations" if args.metric == "generations" else "best_fitness"
    baseline = read_runs_csv(args.baseline)
    treatment = read_runs_csv(args.treatment)
    if not baseline or not treatment:
        raise ConfigError("both CSV files need at least one run")
    s = summarize_cell(treatment, baseline, metric)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    header = [h for h in SUMMARY_HEADER if h not in ("problem", "deletion_rate", "insertion_rate")]
    writer.writerow(header)
    writer.writerow([s.n_runs, repr(s.mean), repr(s.median), repr(s.std_dev), repr(s.u_statistic),
                     repr(s.p_value), s.marker, s.excluded])
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    handler = {"run": cmd_run, "grid": cmd_grid, "stats": cmd_stats}[args.command]
    try:
        return handler(args)
    except (ConfigError, GenotypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
