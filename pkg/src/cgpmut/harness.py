"""Seeded single runs and insertion/deletion rate grids with CSV/Markdown output."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import GenotypeError
from .evolution import EvolutionParams, RunRecord, run
from .mutation import MutationParams
from .problems import (
    BOOLEAN_PROBLEMS,
    PROBLEM_NAMES,
    Problem,
    make_boolean_problem,
    make_regression_problem,
)
from .stats import GridCellSummary, summarize_cell

log = logging.getLogger(__name__)

RUN_HEADER = ["problem", "deletion_rate", "insertion_rate", "run", "seed", "generations",
              "evaluations", "best_fitness", "success"]
SUMMARY_HEADER = ["problem", "deletion_rate", "insertion_rate", "n", "mean", "median", "stddev",
                  "u", "p", "marker", "excluded"]

DEFAULT_RATES = (0.0, 0.1, 0.2, 0.3)
REGRESSION_BUDGET = 10_000
BOOLEAN_GENERATION_CAP = 10_000_000

_MASK64 = (1 << 64) - 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    rate_axis: tuple[float, ...] = DEFAULT_RATES
    runs_per_cell: int = 100
    base_seed: int = 0
    lam: int = 4
    point_rate: float | None = None       # None: the problem's own rate
    min_active: int = 4
    eval_budget: int | None = None        # None: 10000 for regression, unbounded for boolean
    generation_cap: int | None = None     # None: 10**7 for boolean, unbounded for regression
    output_dir: Path | None = None
    workers: int = 1
    use_sagms: bool = False
    dataset_seed: int | None = None       # pin one U-dataset for every run

    def __post_init__(self):
        if self.problem not in PROBLEM_NAMES:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {', '.join(PROBLEM_NAMES)}")
        object.__setattr__(self, "rate_axis", tuple(float(r) for r in self.rate_axis))
        if not self.rate_axis:
            raise ConfigError("rate axis is empty")
        if any(not 0.0 <= r <= 1.0 for r in self.rate_axis):
            raise ConfigError(f"rates must lie in [0, 1]: {self.rate_axis}")
        if self.runs_per_cell < 1:
            raise ConfigError("runs per cell must be >= 1")
        if self.lam < 1:
            raise ConfigError("lambda must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.point_rate is not None and not 0.0 <= self.point_rate <= 1.0:
            raise ConfigError(f"point rate must lie in [0, 1], got {self.point_rate}")
        if self.min_active < 1:
            raise ConfigError("min_active must be >= 1")
        if self.max_evaluations == 0 and self.max_generations == 0:
            raise ConfigError("need an evaluation budget or a generation cap")

    @property
    def is_boolean(self) -> bool:
        return self.problem in BOOLEAN_PROBLEMS

    @property
    def metric(self) -> str:
        return "generations" if self.is_boolean else "best_fitness"

    @property
    def max_evaluations(self) -> int:
        if self.eval_budget is not None:
            return self.eval_budget
        return 0 if self.is_boolean else REGRESSION_BUDGET

    @property
    def max_generations(self) -> int:
        if self.generation_cap is not None:
            return self.generation_cap
        return BOOLEAN_GENERATION_CAP if self.is_boolean else 0

    @property
    def baseline_rates(self) -> tuple[float, float]:
        if 0.0 in self.rate_axis:
            return 0.0, 0.0
        return self.rate_axis[0], self.rate_axis[0]


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _rate_key(rate: float) -> int:
    return int(round(rate * 10_000))


def derive_seed(base_seed: int, deletion_rate: float, insertion_rate: float, run_index: int) -> int:
    """Stable 64-bit seed for one run; independent of worker count and order."""
    h = _splitmix64(base_seed & _MASK64)
    for part in (_rate_key(deletion_rate), _rate_key(insertion_rate), run_index):
        h = _splitmix64(h ^ (part & _MASK64))
    return h


def build_problem(config: ExperimentConfig, seed: int) -> Problem:
    if config.is_boolean:
        return make_boolean_problem(config.problem)
    # U-datasets come from a substream of the run seed unless pinned
    dataset_seed = [config.dataset_seed, 1] if config.dataset_seed is not None else [seed, 1]
    return make_regression_problem(config.problem, np.random.default_rng(dataset_seed))


def evolution_params(config: ExperimentConfig, problem: Problem, insertion_rate: float,
                     deletion_rate: float) -> EvolutionParams:
    point = problem.point_rate if config.point_rate is None else config.point_rate
    mutation = MutationParams(point, insertion_rate, deletion_rate, config.min_active,
                              config.use_sagms)
    return EvolutionParams(config.lam, problem.target_fitness, config.max_evaluations,
                           config.max_generations, mutation)


def run_single(config: ExperimentConfig, insertion_rate: float, deletion_rate: float,
               run_index: int) -> RunRecord:
    if not (0.0 <= insertion_rate <= 1.0 and 0.0 <= deletion_rate <= 1.0):
        raise ConfigError(f"rates must lie in [0, 1]: ins={insertion_rate} del={deletion_rate}")
    seed = derive_seed(config.base_seed, deletion_rate, insertion_rate, run_index)
    problem = build_problem(config, seed)
    try:
        params = evolution_params(config, problem, insertion_rate, deletion_rate)
    except GenotypeError as exc:
        raise ConfigError(str(exc)) from None
    return run(problem, params, seed)


def _job(args) -> RunRecord:
    return run_single(*args)


def run_cell(config: ExperimentConfig, insertion_rate: float, deletion_rate: float,
             pool: ProcessPoolExecutor | None = None) -> list[RunRecord]:
    jobs = [(config, insertion_rate, deletion_rate, i) for i in range(config.runs_per_cell)]
    if pool is None:
        return [_job(j) for j in jobs]
    chunk = max(1, len(jobs) // (4 * config.workers))
    return list(pool.map(_job, jobs, chunksize=chunk))


@dataclass
class GridResult:
    config: ExperimentConfig
    records: dict[tuple[float, float], list[RunRecord]] = field(default_factory=dict)
    summaries: dict[tuple[float, float], GridCellSummary] = field(default_factory=dict)

    def cells(self) -> Iterable[tuple[float, float]]:
        for d in self.config.rate_axis:
            for i in self.config.rate_axis:
                yield d, i


def run_rows(config: ExperimentConfig, deletion_rate: float, insertion_rate: float,
             records: list[RunRecord], start: int = 0) -> list[list[str]]:
    return [
        [config.problem, repr(deletion_rate), repr(insertion_rate), str(k), str(r.seed),
         str(r.generations), str(r.evaluations), repr(r.best_fitness), str(int(r.success))]
        for k, r in enumerate(records, start)
    ]


def _fmt(value: float | None) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return repr(float(value))


def summary_rows(result: GridResult) -> list[list[str]]:
    rows = []
    for d, i in result.cells():
        s = result.summaries[(d, i)]
        rows.append([result.config.problem, repr(d), repr(i), str(s.n_runs), _fmt(s.mean),
                     _fmt(s.median), _fmt(s.std_dev), _fmt(s.u_statistic), _fmt(s.p_value),
                     s.marker, str(s.excluded)])
    return rows


def markdown_table(result: GridResult) -> str:
    """Deletion rate as rows, insertion rate as columns, means with †/‡."""
    axis = result.config.rate_axis
    digits = 0 if result.config.is_boolean else 2
    metric = "mean generations to success" if result.config.is_boolean else "mean best fitness of run"
    lines = [f"{result.config.problem}: {metric} "
             f"({result.config.runs_per_cell} runs/cell; † p<0.05, ‡ p<0.01 vs baseline)", ""]
    lines.append("| del \\ ins | " + " | ".join(f"{r:.1f}" for r in axis) + " |")
    lines.append("|---|" + "---:|" * len(axis))
    for d in axis:
        cells = []
        for i in axis:
            s = result.summaries[(d, i)]
            text = s.formatted_mean(digits)
            if s.excluded:
                text += f" ({s.excluded} capped)"
            cells.append(text)
        lines.append(f"| {d:.1f} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def run_grid(config: ExperimentConfig) -> GridResult:
    """Run every (deletion, insertion) cell and summarize against the baseline.

    With ``output_dir`` set, writes ``runs.csv`` (appended cell by cell),
    ``summary.csv``, ``summary.md`` and ``best_genotypes.txt``.
    """
    result = GridResult(config)
    out = config.output_dir
    runs_fh = best_fh = None
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        runs_fh = open(out / "runs.csv", "w", newline="")
        best_fh = open(out / "best_genotypes.txt", "w")
        csv.writer(runs_fh, lineterminator="\n").writerow(RUN_HEADER)
    pool = ProcessPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        n_cells = len(config.rate_axis) ** 2
        for k, (d, i) in enumerate(result.cells(), 1):
            records = run_cell(config, i, d, pool)
            result.records[(d, i)] = records
            n_ok = sum(r.success for r in records)
            log.info("%s cell %d/%d del=%.2f ins=%.2f: %d/%d successful", config.problem, k,
                     n_cells, d, i, n_ok, len(records))
            if runs_fh is not None:
                csv.writer(runs_fh, lineterminator="\n").writerows(run_rows(config, d, i, records))
                runs_fh.flush()
                for run_index, r in enumerate(records):
                    best_fh.write(f"# deletion_rate={d!r} insertion_rate={i!r} run={run_index} "
                                  f"fitness={r.best_fitness!r}\n{r.best_genotype.dumps()}\n")
                best_fh.flush()
    finally:
        if pool is not None:
            pool.shutdown()
        for fh in (runs_fh, best_fh):
            if fh is not None:
                fh.close()
    base_key = config.baseline_rates
    baseline = result.records[base_key]
    for d, i in result.cells():
        s = summarize_cell(result.records[(d, i)], baseline, config.metric, i, d,
                           is_baseline=(d, i) == base_key)
        result.summaries[(d, i)] = s
        if s.excluded:
            log.warning("del=%.2f ins=%.2f: %d run(s) hit the generation cap and are excluded",
                        d, i, s.excluded)
    if out is not None:
        _write_csv(out / "summary.csv", SUMMARY_HEADER, summary_rows(result))
        (out / "summary.md").write_text(markdown_table(result))
    return result


def runs_csv_text(result: GridResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RUN_HEADER)
    for d, i in result.cells():
        writer.writerows(run_rows(result.config, d, i, result.records[(d, i)]))
    return buf.getvalue()


@dataclass(frozen=True)
class CsvRun:
    generations: int
    best_fitness: float
    success: bool


def read_runs_csv(path: str | Path) -> list[CsvRun]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"generations", "best_fitness", "success"} - set(reader.fieldnames or ())
        if missing:
            raise ConfigError(f"{path}: missing columns {sorted(missing)}")
        return [CsvRun(int(row["generations"]), float(row["best_fitness"]),
                       row["success"].strip().lower() in ("1", "true"))
                for row in reader]
