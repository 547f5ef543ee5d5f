"""Imperialist competitive search with independence and constrained
assimilation for the 0-1 multidimensional knapsack problem."""

from .assimilation import AssimilationParams, constrained_assimilate, independence_step, repair
from .engine import (
    Country,
    Empire,
    IcaConfig,
    RunResult,
    load_config,
    run,
)
from .harness import (
    SummaryStats,
    average_error,
    read_manifest,
    run_batch,
    summarize,
    sweep_independence,
    write_results,
)
from .model import (
    Instance,
    InstanceFormatError,
    Solution,
    enumerate_optimum,
    evaluate,
    generate_instance,
    is_feasible,
    load_instances,
    parse_instances,
    serialize_instance,
)

__all__ = [
    "AssimilationParams",
    "Country",
    "Empire",
    "IcaConfig",
    "Instance",
    "InstanceFormatError",
    "RunResult",
    "Solution",
    "SummaryStats",
    "average_error",
    "constrained_assimilate",
    "enumerate_optimum",
    "evaluate",
    "generate_instance",
    "independence_step",
    "is_feasible",
    "load_config",
    "load_instances",
    "parse_instances",
    "read_manifest",
    "repair",
    "run",
    "run_batch",
    "serialize_instance",
    "summarize",
    "sweep_independence",
    "write_results",
]

__version__ = "0.1.0"
