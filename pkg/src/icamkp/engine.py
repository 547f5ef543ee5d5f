"""Imperialist-competition search engine.

Countries are candidate solutions grouped into empires. Each iteration
runs the independence local search on every colony, swaps any colony that
overtook its imperialist, lets the strongest empires poach the weakest
empire's worst colony, and dissolves empires left without colonies. Costs
use the minimization convention (cost = -profit).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .assimilation import (
    AssimilationParams,
    independence_on_snapshot,
    repair,
    snapshot_imperialists,
)
from .model import Instance, Solution, empty_solution

TERMINATION_STAGNATION = "stagnation"
TERMINATION_MAX_ITERATIONS = "max_iterations"
TERMINATION_MAX_SECONDS = "max_seconds"
TERMINATION_SINGLE_EMPIRE = "single_empire"

LARGE_INSTANCE_ITEMS = 500
POPULATION_SMALL_N = 4096
POPULATION_LARGE_N = 512


class ConfigFormatError(ValueError):
    """Malformed config file: unknown key or unparsable value."""


class Country:
    """One candidate solution; cost is the negated profit."""

    __slots__ = ("solution",)

    def __init__(self, solution: Solution):
        self.solution = solution

    @property
    def cost(self) -> float:
        return -self.solution.profit

    def __repr__(self):
        return f"Country(cost={self.cost})"


@dataclass
class Empire:
    imperialist: Country
    colonies: list[Country]

    def countries(self):
        yield self.imperialist
        yield from self.colonies


@dataclass(frozen=True)
class IcaConfig:
    """All hyper-parameters plus the termination policy.

    `population` and `stagnation_epsilon` default to instance-size based
    values: 4096 countries and epsilon = ceil(0.1 n) below 500 items, 512
    countries and epsilon = n from 500 items up.
    """

    population: int | None = None
    imperialist_fraction: float = 0.4
    local_iters: int = 3
    beta: float = 0.5
    independence_rate: float = 0.7
    xi: float = 0.05
    stagnation_epsilon: int | str = "auto"
    max_iterations: int | None = None
    max_seconds: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.population is not None and self.population < 2:
            raise ValueError(f"population must be at least 2, got {self.population}")
        if not 0.0 < self.imperialist_fraction < 1.0:
            raise ValueError(
                f"imperialist_fraction must lie in (0, 1), got {self.imperialist_fraction}"
            )
        if self.xi < 0:
            raise ValueError(f"xi must be nonnegative, got {self.xi}")
        if self.stagnation_epsilon != "auto":
            if not isinstance(self.stagnation_epsilon, int) or self.stagnation_epsilon < 1:
                raise ValueError(
                    f"stagnation_epsilon must be 'auto' or a positive integer, "
                    f"got {self.stagnation_epsilon!r}"
                )
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError(f"max_iterations must be positive, got {self.max_iterations}")
        if self.max_seconds is not None and self.max_seconds <= 0:
            raise ValueError(f"max_seconds must be positive, got {self.max_seconds}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        # range checks shared with the local search
        AssimilationParams(self.beta, self.local_iters, self.independence_rate)

    def assimilation_params(self) -> AssimilationParams:
        return AssimilationParams(self.beta, self.local_iters, self.independence_rate)

    def resolved_for(self, instance: Instance) -> "IcaConfig":
        """Fill size-dependent defaults and check the population split."""
        population = self.population
        if population is None:
            population = (
                POPULATION_SMALL_N if instance.n < LARGE_INSTANCE_ITEMS else POPULATION_LARGE_N
            )
        epsilon = self.stagnation_epsilon
        if epsilon == "auto":
            epsilon = (
                math.ceil(0.1 * instance.n) if instance.n < LARGE_INSTANCE_ITEMS else instance.n
            )
        if population * self.imperialist_fraction < 1:
            raise ValueError(
                f"population {population} too small for imperialist_fraction "
                f"{self.imperialist_fraction}"
            )
        if population - imperialist_count(population, self.imperialist_fraction) < 1:
            raise ValueError(f"population {population} leaves no colonies")
        return replace(self, population=population, stagnation_epsilon=epsilon)


_CONFIG_INT_FIELDS = {"population", "local_iters", "max_iterations", "seed"}
_CONFIG_FLOAT_FIELDS = {"imperialist_fraction", "beta", "independence_rate", "xi", "max_seconds"}


def load_config(path) -> IcaConfig:
    """Read a flat `key = value` config file; unknown keys are errors."""
    kwargs = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigFormatError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            try:
                if key in _CONFIG_INT_FIELDS:
                    kwargs[key] = int(value)
                elif key in _CONFIG_FLOAT_FIELDS:
                    kwargs[key] = float(value)
                elif key == "stagnation_epsilon":
                    kwargs[key] = value if value == "auto" else int(value)
                else:
                    raise ConfigFormatError(f"line {lineno}: unknown config key {key!r}")
            except ValueError as exc:
                if isinstance(exc, ConfigFormatError):
                    raise
                raise ConfigFormatError(
                    f"line {lineno}: bad value for {key}: {value!r}"
                ) from None
    try:
        return IcaConfig(**kwargs)
    except ValueError as exc:
        raise ConfigFormatError(str(exc)) from None


@dataclass(frozen=True)
class RunResult:
    """Outcome of one seeded run."""

    instance_id: str
    seed: int
    best_profit: float
    best_solution: Solution
    iterations_run: int
    iteration_of_best: int
    wall_time_s: float
    time_to_best_s: float
    termination_reason: str


@dataclass
class IcaState:
    """Search state between iterations."""

    empires: list[Empire]
    iteration: int = 0
    best_profit: float = float("-inf")
    best_solution: Solution | None = None
    best_iteration: int = 0
    stagnation: int = 0

    def population_size(self) -> int:
        return sum(1 + len(e.colonies) for e in self.empires)


def imperialist_count(population: int, fraction: float) -> int:
    return math.ceil(fraction * population)


def random_country(instance: Instance, rng: np.random.Generator) -> Country:
    """Feasible random country: a repair scan of the empty solution."""
    return Country(repair(instance, empty_solution(instance), rng))


def initialize_empires(
    countries: list[Country], config: IcaConfig, rng: np.random.Generator
) -> list[Empire]:
    """Split the population into empires with power-proportional colonies.

    The lowest-cost countries become imperialists. Costs are normalized
    against the worst cost in the population, each imperialist's share of
    the colony pool is its normalized cost over the imperialists' total,
    and leftover colonies after flooring go to the strongest empires.
    Colonies are then dealt to the empires in shuffled order.
    """
    costs = np.array([c.cost for c in countries])
    n_imp = imperialist_count(len(countries), config.imperialist_fraction)
    n_col = len(countries) - n_imp
    if n_imp < 1 or n_col < 1:
        raise ValueError(
            f"population {len(countries)} too small for fraction {config.imperialist_fraction}"
        )
    order = np.argsort(costs, kind="stable")
    ranked = [countries[i] for i in order]
    imperialists = ranked[:n_imp]
    colonies = ranked[n_imp:]

    normalized = costs[order[:n_imp]] - costs.max()
    total = normalized.sum()
    if total == 0.0:
        power = np.full(n_imp, 1.0 / n_imp)
    else:
        power = normalized / total
    counts = np.floor(power * n_col).astype(np.int64)
    leftover = n_col - int(counts.sum())
    for k in np.argsort(-power, kind="stable")[:leftover]:
        counts[k] += 1

    deal = rng.permutation(n_col)
    empires = []
    start = 0
    for k in range(n_imp):
        members = [colonies[i] for i in deal[start : start + counts[k]]]
        start += counts[k]
        empires.append(Empire(imperialist=imperialists[k], colonies=members))
    return empires


def empire_total_cost(empire: Empire, xi: float) -> float:
    """Imperialist cost plus xi times the mean colony cost (0 if none)."""
    if not empire.colonies:
        return empire.imperialist.cost
    mean = sum(c.cost for c in empire.colonies) / len(empire.colonies)
    return empire.imperialist.cost + xi * mean


def possession_probs(total_costs, exclude: int | None = None) -> np.ndarray:
    """Roulette probabilities for absorbing a freed colony.

    Each empire's weight is its total-cost distance to the worst total in
    the list; `exclude` masks the losing empire out. Degenerates to uniform
    over the candidates when all weights vanish.
    """
    totals = np.asarray(total_costs, dtype=np.float64)
    weight = np.abs(totals - totals.max())
    candidates = np.ones(totals.shape[0], dtype=bool)
    if exclude is not None:
        candidates[exclude] = False
        weight[exclude] = 0.0
    total_weight = weight.sum()
    if total_weight == 0.0:
        probs = candidates / candidates.sum()
    else:
        probs = weight / total_weight
    return probs


def _roulette(probs: np.ndarray, rng: np.random.Generator) -> int:
    r = rng.random()
    acc = 0.0
    for k, p in enumerate(probs):
        acc += p
        if r < acc:
            return k
    return int(np.flatnonzero(probs > 0)[-1])


def competition_step(
    empires: list[Empire], xi: float, rng: np.random.Generator
) -> list[Empire]:
    """Move the weakest empire's worst colony to a roulette-chosen rival.

    The weakest empire is the one with the highest total cost (ties go to
    the higher index); it is excluded from the roulette. No-op when the
    weakest empire has no colony to give up.
    """
    if len(empires) < 2:
        raise ValueError("competition needs at least 2 empires")
    totals = np.array([empire_total_cost(e, xi) for e in empires])
    weakest = len(totals) - 1 - int(np.argmax(totals[::-1]))
    loser = empires[weakest]
    if not loser.colonies:
        return empires
    worst = int(np.argmax([c.cost for c in loser.colonies]))
    colony = loser.colonies.pop(worst)
    winner = _roulette(possession_probs(totals, exclude=weakest), rng)
    empires[winner].colonies.append(colony)
    return empires


def eliminate_step(
    empires: list[Empire], rng: np.random.Generator, xi: float
) -> list[Empire]:
    """Dissolve colony-less empires, demoting their imperialists.

    Each demoted imperialist joins a surviving empire chosen by the
    possession roulette over the survivors' total costs (snapshotted at
    entry). The population size is conserved.
    """
    dissolved = [e for e in empires if not e.colonies]
    if not dissolved:
        return empires
    survivors = [e for e in empires if e.colonies]
    if not survivors:
        raise RuntimeError("no empire with colonies left to absorb the dissolved ones")
    probs = possession_probs([empire_total_cost(e, xi) for e in survivors])
    for empire in dissolved:
        winner = _roulette(probs, rng)
        survivors[winner].colonies.append(empire.imperialist)
    return survivors


def _colony_rng(seed: int, iteration: int, colony_index: int) -> np.random.Generator:
    # Independent sub-stream per (iteration, colony): reproducible even if
    # colonies are ever processed concurrently.
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(iteration, colony_index)))


def iterate(
    state: IcaState, instance: Instance, config: IcaConfig, rng: np.random.Generator
) -> IcaState:
    """Advance the search by one iteration.

    Phases: independence local search on every colony (against a snapshot
    of all imperialists), colony/imperialist exchange, imperialist
    competition, empire elimination, then global-best bookkeeping.
    """
    iteration = state.iteration + 1
    params = config.assimilation_params()
    snapshot = [e.imperialist.solution for e in state.empires]
    imp_flat, imp_offsets = snapshot_imperialists(snapshot)

    colony_index = 0
    for empire in state.empires:
        own_selected = empire.imperialist.solution.selected
        for k in range(len(empire.colonies)):
            crng = _colony_rng(config.seed, iteration, colony_index)
            new_solution = independence_on_snapshot(
                instance,
                empire.colonies[k].solution,
                own_selected,
                imp_flat,
                imp_offsets,
                params,
                crng,
            )
            empire.colonies[k] = Country(new_solution)
            colony_index += 1

    for empire in state.empires:
        if empire.colonies:
            costs = [c.cost for c in empire.colonies]
            best = int(np.argmin(costs))
            if costs[best] < empire.imperialist.cost:
                empire.colonies[best], empire.imperialist = (
                    empire.imperialist,
                    empire.colonies[best],
                )

    if len(state.empires) >= 2:
        state.empires = competition_step(state.empires, config.xi, rng)
    state.empires = eliminate_step(state.empires, rng, config.xi)

    improved = False
    for empire in state.empires:
        for country in empire.countries():
            if country.solution.profit > state.best_profit:
                state.best_profit = country.solution.profit
                state.best_solution = country.solution
                improved = True
    state.iteration = iteration
    if improved:
        state.best_iteration = iteration
        state.stagnation = 0
    else:
        state.stagnation += 1
    return state


def initial_state(
    instance: Instance, config: IcaConfig, rng: np.random.Generator
) -> IcaState:
    """Random feasible population, grouped into empires; iteration 0."""
    countries = [random_country(instance, rng) for _ in range(config.population)]
    empires = initialize_empires(countries, config, rng)
    state = IcaState(empires=empires)
    for country in countries:
        if country.solution.profit > state.best_profit:
            state.best_profit = country.solution.profit
            state.best_solution = country.solution
    return state


def run(instance: Instance, config: IcaConfig) -> RunResult:
    """Full seeded search on one instance.

    Stops after `stagnation_epsilon` iterations without a strictly better
    global best (reported as `single_empire` when only one empire is left
    by then), or on the optional iteration/time caps. Deterministic for a
    fixed seed except for the clock fields.
    """
    cfg = config.resolved_for(instance)
    master = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    start = time.perf_counter()
    state = initial_state(instance, cfg, master)
    time_to_best = time.perf_counter() - start

    while True:
        previous_best = state.best_profit
        iterate(state, instance, cfg, master)
        if state.best_profit > previous_best:
            time_to_best = time.perf_counter() - start
        if state.stagnation >= cfg.stagnation_epsilon:
            reason = (
                TERMINATION_SINGLE_EMPIRE
                if len(state.empires) == 1
                else TERMINATION_STAGNATION
            )
            break
        if cfg.max_iterations is not None and state.iteration >= cfg.max_iterations:
            reason = TERMINATION_MAX_ITERATIONS
            break
        if cfg.max_seconds is not None and time.perf_counter() - start >= cfg.max_seconds:
            reason = TERMINATION_MAX_SECONDS
            break

    return RunResult(
        instance_id=instance.id,
        seed=cfg.seed,
        best_profit=state.best_profit,
        best_solution=state.best_solution,
        iterations_run=state.iteration,
        iteration_of_best=state.best_iteration,
        wall_time_s=time.perf_counter() - start,
        time_to_best_s=time_to_best,
        termination_reason=reason,
    )
