"""Constrained assimilation with repair, and the independence local search.

Assimilation merges two donor solutions item by item, skipping anything
that would break a capacity constraint, and then repairs the incomplete
merge by scanning all items in random order. The random scan is what keeps
the population diverse, so no separate mutation operator exists.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import independence_search, merge_repair, try_add_items
from .model import Instance, Solution, is_feasible


@dataclass(frozen=True)
class AssimilationParams:
    """Knobs of the local search.

    beta is the fraction of the imperialist donor that seeds the merge,
    local_iters the number of assimilation rounds per colony per
    generation, and independence_rate the probability that a round courts
    every imperialist in the population instead of only the colony's own.
    """

    beta: float = 0.5
    local_iters: int = 3
    independence_rate: float = 0.7

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if self.local_iters < 1:
            raise ValueError(f"local_iters must be positive, got {self.local_iters}")
        if not 0.0 <= self.independence_rate <= 1.0:
            raise ValueError(
                f"independence_rate must lie in [0, 1], got {self.independence_rate}"
            )


def _require_feasible(solution: Solution, role: str) -> None:
    if not is_feasible(solution):
        raise ValueError(f"{role} solution is infeasible")


def repair(instance: Instance, partial: Solution, rng: np.random.Generator) -> Solution:
    """Complete a feasible partial solution to a maximal one.

    Scans all items in a fresh uniform random permutation and adds every
    one that fits the remaining capacities; nothing is ever removed. The
    result is maximal: no unselected item fits the final residual.
    """
    _require_feasible(partial, "partial")
    residual = partial.residual.copy()
    mask = np.zeros(instance.n, dtype=np.bool_)
    mask[partial.selected] = True
    selected = np.empty(instance.n, dtype=np.int64)
    selected[: partial.size] = partial.selected
    count, profit = try_add_items(
        rng.permutation(instance.n),
        instance.profits,
        instance.weights_by_item,
        residual,
        mask,
        selected,
        partial.size,
        partial.profit,
    )
    return Solution(selected[:count].copy(), float(profit), residual)


def constrained_assimilate(
    instance: Instance,
    colony: Solution,
    imperialist: Solution,
    params: AssimilationParams,
    rng: np.random.Generator,
) -> Solution:
    """Merge colony and imperialist under the assimilation rate, then repair.

    A uniform random sample of ceil(beta * |imperialist|) imperialist items
    is attempted first, then the colony's items in random order, each added
    only if it fits; the incomplete merge is finished by the repair scan.
    Donors are left untouched.
    """
    _require_feasible(colony, "colony donor")
    _require_feasible(imperialist, "imperialist donor")
    residual = np.empty(instance.m, dtype=np.float64)
    mask = np.empty(instance.n, dtype=np.bool_)
    selected = np.empty(instance.n, dtype=np.int64)
    count, profit = merge_repair(
        rng,
        instance.profits,
        instance.weights_by_item,
        instance.capacities,
        colony.selected,
        imperialist.selected,
        params.beta,
        residual,
        mask,
        selected,
    )
    return Solution(selected[:count].copy(), float(profit), residual)


def snapshot_imperialists(solutions: list[Solution]) -> tuple[np.ndarray, np.ndarray]:
    """Pack imperialist index lists into (flat, offsets) for the kernel."""
    offsets = np.zeros(len(solutions) + 1, dtype=np.int64)
    for k, solution in enumerate(solutions):
        offsets[k + 1] = offsets[k] + solution.size
    flat = np.empty(offsets[-1], dtype=np.int64)
    for k, solution in enumerate(solutions):
        flat[offsets[k] : offsets[k + 1]] = solution.selected
    return flat, offsets


def independence_on_snapshot(
    instance: Instance,
    colony: Solution,
    own_selected: np.ndarray,
    imp_flat: np.ndarray,
    imp_offsets: np.ndarray,
    params: AssimilationParams,
    rng: np.random.Generator,
) -> Solution:
    """Kernel adapter for `independence_step` on a prepacked snapshot."""
    sel_buf, count, profit, residual = independence_search(
        rng,
        instance.profits,
        instance.weights_by_item,
        instance.capacities,
        colony.selected,
        colony.profit,
        colony.residual,
        own_selected,
        imp_flat,
        imp_offsets,
        params.beta,
        params.local_iters,
        params.independence_rate,
    )
    return Solution(sel_buf[:count].copy(), float(profit), residual)


def independence_step(
    instance: Instance,
    colony: Solution,
    own_imperialist: Solution,
    all_imperialists: list[Solution],
    params: AssimilationParams,
    rng: np.random.Generator,
) -> Solution:
    """One generation of local search for a single colony.

    Each of the local_iters rounds flips a coin: with probability
    independence_rate the colony assimilates towards every imperialist in
    the snapshot (in index order) and keeps a candidate only on strict
    profit improvement; otherwise it assimilates unconditionally towards
    its own imperialist.
    """
    if not all_imperialists:
        raise ValueError("all_imperialists must not be empty")
    _require_feasible(colony, "colony")
    _require_feasible(own_imperialist, "own imperialist")
    flat, offsets = snapshot_imperialists(all_imperialists)
    return independence_on_snapshot(
        instance, colony, own_imperialist.selected, flat, offsets, params, rng
    )
