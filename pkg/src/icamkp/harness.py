"""Batch experiment runner and result aggregation.

Runs multi-seed campaigns over instance sets, computes the mean relative
error against known optima, sweeps the independence rate, and writes
per-run and per-instance CSV files with fixed headers.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .engine import IcaConfig, RunResult, run
from .model import Instance, load_instances

log = logging.getLogger(__name__)

RUN_CSV_HEADER = [
    "instance",
    "seed",
    "best_profit",
    "iterations",
    "iteration_of_best",
    "time_ms",
    "termination",
]
SUMMARY_CSV_HEADER = [
    "instance",
    "optimum",
    "runs",
    "best_profit",
    "mean_profit",
    "best_error_pct",
    "avg_error_pct",
    "mean_time_s",
]
SWEEP_CSV_HEADER = ["rate", "avg_error_pct", "mean_time_s"]


@dataclass(frozen=True)
class BatchFailure:
    instance_id: str
    seed: int
    error: str


@dataclass(frozen=True)
class InstanceSummary:
    """Aggregates of all runs on one instance.

    Error percentages are relative to the recorded optimum and are None
    when no optimum is on record; negative values mean the recorded
    optimum was beaten. `mean_time_s` averages the time-to-best clock (the
    run also records total wall time separately).
    """

    instance_id: str
    optimum: float | None
    runs: int
    best_profit: float
    mean_profit: float
    best_error_pct: float | None
    avg_error_pct: float | None
    mean_time_s: float


@dataclass(frozen=True)
class SummaryStats:
    """Per-instance rows plus their plain averages across the set.

    Set-level error averages cover only instances with a known optimum;
    they are None when there is no such instance.
    """

    rows: list[InstanceSummary]
    set_best_profit: float
    set_mean_profit: float
    set_best_error_pct: float | None
    set_avg_error_pct: float | None
    set_mean_time_s: float


def average_error(optima, achieved) -> float:
    """Mean relative gap to the optima, in percent.

    May be negative when an achieved profit exceeds its recorded optimum;
    that is reported as-is since it flags a stale best-known value.
    """
    if len(optima) != len(achieved):
        raise ValueError(f"length mismatch: {len(optima)} optima vs {len(achieved)} achieved")
    if len(optima) == 0:
        raise ValueError("need at least one (optimum, achieved) pair")
    total = 0.0
    for o, p in zip(optima, achieved):
        if o <= 0:
            raise ValueError(f"optimum must be positive, got {o}")
        total += (o - p) / o
    return total / len(optima) * 100.0


def run_batch(
    instances: list[Instance],
    config: IcaConfig,
    seeds: list[int],
    jobs: int = 1,
) -> list[RunResult]:
    """One run per (instance, seed), ordered by (instance id, seed position).

    Failed runs are logged with their (instance, seed) attribution and
    dropped; the rest of the batch still runs. Raises only when every run
    failed. `jobs` bounds concurrent runs; the result order and content do
    not depend on it.
    """
    if len(set(seeds)) != len(seeds):
        raise ValueError("seeds must be distinct")
    tasks = [
        (ii, si, instance, seed)
        for ii, instance in enumerate(instances)
        for si, seed in enumerate(seeds)
    ]
    outcomes: dict[tuple[int, int], RunResult] = {}
    failures: list[BatchFailure] = []

    def record(ii, si, instance, seed, result, error):
        if error is None:
            outcomes[(ii, si)] = result
        else:
            failures.append(BatchFailure(instance.id, seed, error))
            log.warning("run failed for instance %s seed %d: %s", instance.id, seed, error)

    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(run, instance, replace(config, seed=seed))
                for _, _, instance, seed in tasks
            ]
            for (ii, si, instance, seed), future in zip(tasks, futures):
                try:
                    record(ii, si, instance, seed, future.result(), None)
                except Exception as exc:
                    record(ii, si, instance, seed, None, str(exc))
    else:
        for ii, si, instance, seed in tasks:
            try:
                result = run(instance, replace(config, seed=seed))
                record(ii, si, instance, seed, result, None)
            except Exception as exc:
                record(ii, si, instance, seed, None, str(exc))

    if tasks and not outcomes:
        raise RuntimeError(
            f"all {len(tasks)} runs failed; first failure: "
            f"{failures[0].instance_id} seed {failures[0].seed}: {failures[0].error}"
        )
    ordered = sorted(outcomes.keys(), key=lambda k: (instances[k[0]].id, k[1], k[0]))
    return [outcomes[key] for key in ordered]


def summarize(results: list[RunResult], instances: list[Instance]) -> SummaryStats:
    """Fold run results into per-instance and per-set aggregates."""
    optima = {instance.id: instance.known_optimum for instance in instances}
    by_instance: dict[str, list[RunResult]] = {}
    for result in results:
        by_instance.setdefault(result.instance_id, []).append(result)

    rows = []
    for instance_id in sorted(by_instance):
        group = by_instance[instance_id]
        best = max(r.best_profit for r in group)
        mean = sum(r.best_profit for r in group) / len(group)
        optimum = optima.get(instance_id)
        best_err = avg_err = None
        if optimum is not None:
            best_err = average_error([optimum], [best])
            avg_err = average_error([optimum], [mean])
        rows.append(
            InstanceSummary(
                instance_id=instance_id,
                optimum=optimum,
                runs=len(group),
                best_profit=best,
                mean_profit=mean,
                best_error_pct=best_err,
                avg_error_pct=avg_err,
                mean_time_s=sum(r.time_to_best_s for r in group) / len(group),
            )
        )

    def mean_of(values):
        values = [v for v in values if v is not None]
        return sum(values) / len(values) if values else None

    return SummaryStats(
        rows=rows,
        set_best_profit=sum(r.best_profit for r in rows) / len(rows) if rows else 0.0,
        set_mean_profit=sum(r.mean_profit for r in rows) / len(rows) if rows else 0.0,
        set_best_error_pct=mean_of(r.best_error_pct for r in rows),
        set_avg_error_pct=mean_of(r.avg_error_pct for r in rows),
        set_mean_time_s=sum(r.mean_time_s for r in rows) / len(rows) if rows else 0.0,
    )


def sweep_independence(
    instances: list[Instance],
    config: IcaConfig,
    rates: list[float],
    seeds: list[int],
    jobs: int = 1,
) -> dict[float, SummaryStats]:
    """Rerun the whole batch once per independence rate."""
    for rate in rates:
        if not 0.0 <= rate <= 1.0:
            raise ValueError(f"independence rate must lie in [0, 1], got {rate}")
    table = {}
    for rate in rates:
        results = run_batch(instances, replace(config, independence_rate=rate), seeds, jobs=jobs)
        table[rate] = summarize(results, instances)
    return table


def _fmt_float(value: float) -> str:
    return f"{value:.6g}"


def _fmt_optional(value: float | None) -> str:
    return "" if value is None else _fmt_float(value)


def write_results(payload, destination) -> None:
    """Write a fixed-header CSV for run results or an instance summary.

    Dispatches on the payload type: a list of RunResult becomes the
    per-run file, a SummaryStats the per-instance summary file. Floats are
    written with 6 significant digits, rows sorted by instance id.
    """
    if isinstance(payload, SummaryStats):
        _write_summary_csv(payload, destination)
    else:
        _write_runs_csv(list(payload), destination)


def _open_writer(destination):
    handle = open(destination, "w", encoding="utf-8", newline="")
    return handle, csv.writer(handle, lineterminator="\n")


def _write_runs_csv(results: list[RunResult], destination) -> None:
    handle, writer = _open_writer(destination)
    with handle:
        writer.writerow(RUN_CSV_HEADER)
        for r in sorted(results, key=lambda r: r.instance_id):
            writer.writerow(
                [
                    r.instance_id,
                    r.seed,
                    _fmt_float(r.best_profit),
                    r.iterations_run,
                    r.iteration_of_best,
                    _fmt_float(r.wall_time_s * 1000.0),
                    r.termination_reason,
                ]
            )


def _write_summary_csv(stats: SummaryStats, destination) -> None:
    handle, writer = _open_writer(destination)
    with handle:
        writer.writerow(SUMMARY_CSV_HEADER)
        for row in sorted(stats.rows, key=lambda r: r.instance_id):
            writer.writerow(
                [
                    row.instance_id,
                    _fmt_optional(row.optimum),
                    row.runs,
                    _fmt_float(row.best_profit),
                    _fmt_float(row.mean_profit),
                    _fmt_optional(row.best_error_pct),
                    _fmt_optional(row.avg_error_pct),
                    _fmt_float(row.mean_time_s),
                ]
            )


def write_sweep(table: dict[float, SummaryStats], destination) -> None:
    """Write the sensitivity matrix: one row per independence rate."""
    handle, writer = _open_writer(destination)
    with handle:
        writer.writerow(SWEEP_CSV_HEADER)
        for rate, stats in table.items():
            writer.writerow(
                [
                    _fmt_float(rate),
                    _fmt_optional(stats.set_avg_error_pct),
                    _fmt_float(stats.set_mean_time_s),
                ]
            )


def read_manifest(path) -> list[Instance]:
    """Load instances listed in a manifest file.

    One `path[:index]` entry per line; `#` starts a comment. An entry
    without an index loads every problem in the file; with an index, just
    that one. Relative paths resolve against the manifest's directory.
    """
    manifest = Path(path)
    root = manifest.parent
    instances = []
    for lineno, raw in enumerate(manifest.read_text(encoding="utf-8").splitlines(), start=1):
        entry = raw.split("#", 1)[0].strip()
        if not entry:
            continue
        target, _, index_text = entry.rpartition(":")
        if target and _is_int(index_text):
            index = int(index_text)
        else:
            target, index = entry, None
        file_path = Path(target)
        if not file_path.is_absolute():
            file_path = root / file_path
        loaded = load_instances(file_path)
        if index is None:
            instances.extend(loaded)
        else:
            if not 0 <= index < len(loaded):
                raise ValueError(
                    f"{manifest}:{lineno}: index {index} out of range, "
                    f"{file_path} holds {len(loaded)} problem(s)"
                )
            instances.append(loaded[index])
    return instances


def _is_int(text: str) -> bool:
    try:
        int(text)
    except ValueError:
        return False
    return True
