"""Compiled inner loops: add-scans, the merge-and-repair core, the
independence local search, and the exhaustive oracle.

Kernels take `wt`, the (n, m) per-item weight layout, so the per-item
capacity check walks contiguous memory. All randomness comes from a numpy
Generator passed straight into the kernels; numba draws from it with the
same bit stream as interpreted numpy, so compiled and interpreted callers
are interchangeable.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def try_add_items(order, profits, wt, residual, mask, selected, count, profit):
    """Attempt to append each item in `order` to the working solution.

    An item is skipped when already selected or when it violates any
    residual capacity; accepted items are never removed later. Mutates
    `residual`, `mask` and `selected[count:]` in place and returns the
    updated (count, profit).
    """
    m = wt.shape[1]
    for t in range(order.shape[0]):
        j = order[t]
        if mask[j]:
            continue
        fits = True
        for i in range(m):
            if wt[j, i] > residual[i]:
                fits = False
                break
        if fits:
            for i in range(m):
                residual[i] -= wt[j, i]
            mask[j] = True
            selected[count] = j
            count += 1
            profit += profits[j]
    return count, profit


@njit(cache=True)
def merge_repair(rng, profits, wt, capacities, colony_sel, imp_sel, beta, residual, mask, selected):
    """Constrained assimilation core: sample, merge, repair.

    Builds a fresh solution into the provided buffers: first a uniform
    random sample of ceil(beta * |imp_sel|) imperialist items, then the
    colony items in random order, then the full-permutation repair scan;
    every add obeys the skip rule of `try_add_items`. Returns
    (count, profit).
    """
    n = profits.shape[0]
    m = capacities.shape[0]
    for i in range(m):
        residual[i] = capacities[i]
    for j in range(n):
        mask[j] = False
    count = 0
    profit = 0.0
    if imp_sel.shape[0] > 0:
        take = int(math.ceil(beta * imp_sel.shape[0]))
        if take > 0:
            donor_order = rng.permutation(imp_sel)[:take]
            count, profit = try_add_items(
                donor_order, profits, wt, residual, mask, selected, count, profit
            )
    if colony_sel.shape[0] > 0:
        colony_order = rng.permutation(colony_sel)
        count, profit = try_add_items(
            colony_order, profits, wt, residual, mask, selected, count, profit
        )
    scan_order = rng.permutation(n)
    count, profit = try_add_items(scan_order, profits, wt, residual, mask, selected, count, profit)
    return count, profit


@njit(cache=True)
def independence_search(
    rng,
    profits,
    wt,
    capacities,
    colony_sel,
    colony_profit,
    colony_residual,
    own_sel,
    imp_flat,
    imp_off,
    beta,
    local_iters,
    rate,
):
    """Local-search fold for one colony against an imperialist snapshot.

    Per round: with probability `rate`, assimilate towards every
    imperialist in the snapshot in order, keeping a candidate only on
    strict profit improvement; otherwise assimilate unconditionally
    towards the colony's own imperialist. Returns the final
    (selected buffer, count, profit, residual).
    """
    n = profits.shape[0]
    m = capacities.shape[0]
    cur_sel = np.empty(n, np.int64)
    cur_count = colony_sel.shape[0]
    cur_sel[:cur_count] = colony_sel
    cur_profit = colony_profit
    cur_res = np.empty(m, np.float64)
    cur_res[:] = colony_residual

    cand_sel = np.empty(n, np.int64)
    cand_res = np.empty(m, np.float64)
    mask = np.empty(n, np.bool_)

    n_imp = imp_off.shape[0] - 1
    for _ in range(local_iters):
        if rng.random() < rate:
            for j in range(n_imp):
                imp_sel = imp_flat[imp_off[j] : imp_off[j + 1]]
                count, profit = merge_repair(
                    rng, profits, wt, capacities,
                    cur_sel[:cur_count], imp_sel, beta,
                    cand_res, mask, cand_sel,
                )
                if profit > cur_profit:
                    cur_sel, cand_sel = cand_sel, cur_sel
                    cur_res, cand_res = cand_res, cur_res
                    cur_count = count
                    cur_profit = profit
        else:
            count, profit = merge_repair(
                rng, profits, wt, capacities,
                cur_sel[:cur_count], own_sel, beta,
                cand_res, mask, cand_sel,
            )
            cur_sel, cand_sel = cand_sel, cur_sel
            cur_res, cand_res = cand_res, cur_res
            cur_count = count
            cur_profit = profit
    return cur_sel, cur_count, cur_profit, cur_res


@njit(cache=True)
def _lex_smaller(a, b, n):
    # Compare two 0/1 selection masks as ascending index lists: the first
    # differing index decides; a list that is a proper prefix of the other
    # comes first.
    for j in range(n):
        if a[j] != b[j]:
            if a[j] == 1:
                for k in range(j + 1, n):
                    if b[k] == 1:
                        return True
                return False
            for k in range(j + 1, n):
                if a[k] == 1:
                    return False
            return True
    return False


@njit(cache=True)
def exhaustive_best(profits, wt, capacities):
    """Depth-first enumeration of every feasible subset.

    Include-branch first, infeasible includes pruned (which loses no
    feasible subset). Returns the maximum profit and its 0/1 selection
    mask, ties broken towards the lexicographically smallest index list.
    """
    n = profits.shape[0]
    m = capacities.shape[0]
    residual = capacities.copy()
    status = np.zeros(n, np.int8)  # 0 fresh, 1 included, 2 excluded
    cur = np.zeros(n, np.uint8)
    best = np.zeros(n, np.uint8)
    best_profit = -1.0
    profit = 0.0
    d = 0
    while d >= 0:
        if d == n:
            if profit > best_profit or (
                profit == best_profit and _lex_smaller(cur, best, n)
            ):
                best_profit = profit
                best[:] = cur
            d -= 1
            while d >= 0 and status[d] != 1:
                status[d] = 0
                d -= 1
            if d >= 0:
                profit -= profits[d]
                for i in range(m):
                    residual[i] += wt[d, i]
                cur[d] = 0
                status[d] = 2
                d += 1
        else:
            fits = True
            for i in range(m):
                if wt[d, i] > residual[i]:
                    fits = False
                    break
            if fits:
                status[d] = 1
                cur[d] = 1
                profit += profits[d]
                for i in range(m):
                    residual[i] -= wt[d, i]
            else:
                status[d] = 2
                cur[d] = 0
            d += 1
    return best_profit, best
