"""Command-line front-end: solve, bench, sweep, oracle, gen.

Results go to stdout, diagnostics and the effective configuration to
stderr, machine-readable output to the CSV paths given via --out and
--summary. Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime
failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .engine import ConfigFormatError, IcaConfig, load_config, run
from .harness import (
    read_manifest,
    run_batch,
    summarize,
    sweep_independence,
    write_results,
    write_sweep,
)
from .model import (
    InstanceFormatError,
    enumerate_optimum,
    generate_instance,
    load_instances,
    serialize_instance,
)

log = logging.getLogger("icamkp")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="icamkp", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    solve = sub.add_parser("solve", help="run the search once on one instance")
    solve.add_argument("--instance", required=True, help="instance file")
    solve.add_argument("--index", type=int, default=0, help="problem index within the file")
    solve.add_argument("--config", help="config file overriding the defaults")
    solve.add_argument("--seed", type=int, help="run seed")
    solve.add_argument("--out", help="write the run as a per-run CSV")
    solve.set_defaults(func=_cmd_solve)

    bench = sub.add_parser("bench", help="multi-seed campaign over a manifest")
    bench.add_argument("--manifest", required=True, help="instance-set manifest file")
    bench.add_argument("--config", help="config file overriding the defaults")
    bench.add_argument("--runs", type=int, required=True, help="runs per instance")
    bench.add_argument("--seed-base", type=int, default=0, help="first seed; run k uses seed-base+k")
    bench.add_argument("--out", required=True, help="per-run CSV destination")
    bench.add_argument("--summary", help="per-instance summary CSV destination")
    bench.add_argument("--jobs", type=int, default=1, help="concurrent runs")
    bench.set_defaults(func=_cmd_bench)

    sweep = sub.add_parser("sweep", help="independence-rate sensitivity sweep")
    sweep.add_argument("--manifest", required=True, help="instance-set manifest file")
    sweep.add_argument("--config", help="config file overriding the defaults")
    sweep.add_argument("--rates", required=True, help="comma-separated rates, e.g. 0,0.3,0.7")
    sweep.add_argument("--runs", type=int, required=True, help="runs per instance per rate")
    sweep.add_argument("--seed-base", type=int, default=0, help="first seed; run k uses seed-base+k")
    sweep.add_argument("--out", required=True, help="sweep matrix CSV destination")
    sweep.add_argument("--jobs", type=int, default=1, help="concurrent runs")
    sweep.set_defaults(func=_cmd_sweep)

    oracle = sub.add_parser("oracle", help="exact optimum by exhaustive enumeration (n <= 24)")
    oracle.add_argument("--instance", required=True, help="instance file")
    oracle.add_argument("--index", type=int, default=0, help="problem index within the file")
    oracle.set_defaults(func=_cmd_oracle)

    gen = sub.add_parser("gen", help="generate a random instance file")
    gen.add_argument("--items", type=int, required=True)
    gen.add_argument("--dims", type=int, required=True)
    gen.add_argument("--tightness", type=float, required=True)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True, help="instance file destination")
    gen.set_defaults(func=_cmd_gen)

    return parser


def _load_instance(path: str, index: int):
    try:
        instances = load_instances(path)
    except OSError as exc:
        raise DataError(str(exc)) from None
    except InstanceFormatError as exc:
        raise DataError(f"{path}: {exc}") from None
    if not 0 <= index < len(instances):
        raise DataError(f"{path}: index {index} out of range, file holds {len(instances)} problem(s)")
    return instances[index]


def _load_manifest(path: str):
    try:
        instances = read_manifest(path)
    except OSError as exc:
        raise DataError(str(exc)) from None
    except (InstanceFormatError, ValueError) as exc:
        raise DataError(str(exc)) from None
    if not instances:
        raise DataError(f"{path}: manifest lists no instances")
    return instances


def _build_config(args) -> IcaConfig:
    if getattr(args, "config", None):
        try:
            config = load_config(args.config)
        except OSError as exc:
            raise DataError(str(exc)) from None
        except ConfigFormatError as exc:
            raise DataError(f"{args.config}: {exc}") from None
    else:
        config = IcaConfig()
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed=args.seed)
    log.info("config: %s", config)
    return config


def _seeds(args) -> list[int]:
    if args.runs < 1:
        raise UsageError("--runs must be at least 1")
    return [args.seed_base + k for k in range(args.runs)]


def _parse_rates(text: str) -> list[float]:
    try:
        rates = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"--rates must be comma-separated numbers, got {text!r}") from None
    if not rates:
        raise UsageError("--rates lists no rates")
    for rate in rates:
        if not 0.0 <= rate <= 1.0:
            raise UsageError(f"independence rate must lie in [0, 1], got {rate}")
    return rates


def _print_solution(label: str, profit: float, selected) -> None:
    print(f"{label} {profit:.10g}")
    print("selected " + " ".join(str(j) for j in sorted(selected)))


def _cmd_solve(args) -> int:
    instance = _load_instance(args.instance, args.index)
    config = _build_config(args)
    result = run(instance, config)
    log.info(
        "%s seed=%d best=%.10g iters=%d time=%.2fs reason=%s",
        instance.id,
        result.seed,
        result.best_profit,
        result.iterations_run,
        result.wall_time_s,
        result.termination_reason,
    )
    _print_solution("best_profit", result.best_profit, result.best_solution.selected)
    if args.out:
        write_results([result], args.out)
    return EXIT_OK


def _cmd_bench(args) -> int:
    instances = _load_manifest(args.manifest)
    config = _build_config(args)
    results = run_batch(instances, config, _seeds(args), jobs=args.jobs)
    write_results(results, args.out)
    stats = summarize(results, instances)
    if args.summary:
        write_results(stats, args.summary)
    for row in stats.rows:
        err = "n/a" if row.avg_error_pct is None else f"{row.avg_error_pct:.4f}%"
        print(
            f"{row.instance_id} runs={row.runs} best={row.best_profit:.10g} "
            f"mean={row.mean_profit:.10g} avg_err={err} t_best={row.mean_time_s:.2f}s"
        )
    return EXIT_OK


def _cmd_sweep(args) -> int:
    instances = _load_manifest(args.manifest)
    config = _build_config(args)
    table = sweep_independence(instances, config, _parse_rates(args.rates), _seeds(args), jobs=args.jobs)
    write_sweep(table, args.out)
    for rate, stats in table.items():
        err = "n/a" if stats.set_avg_error_pct is None else f"{stats.set_avg_error_pct:.4f}%"
        print(f"rate={rate:g} avg_err={err} t_best={stats.set_mean_time_s:.2f}s")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    instance = _load_instance(args.instance, args.index)
    try:
        profit, selected = enumerate_optimum(instance)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    _print_solution("optimum", profit, selected)
    return EXIT_OK


def _cmd_gen(args) -> int:
    try:
        instance = generate_instance(args.items, args.dims, args.tightness, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    Path(args.out).write_text(serialize_instance(instance), encoding="utf-8")
    log.info("wrote %s (n=%d, m=%d) to %s", instance.id, instance.n, instance.m, args.out)
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
