"""Problem model for the 0-1 multidimensional knapsack.

An instance holds n items with profits and an m-dimensional weight vector
each, plus one capacity per dimension; a solution is the index list of
selected items with its cached profit and residual capacities. This module
also covers instance-file parsing and serialization, a seeded random
instance generator, and an exhaustive optimality oracle for small n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import exhaustive_best

MULTI = "multi"
SINGLE = "single"

ENUMERATION_LIMIT = 24

_EMPTY_IDX = np.empty(0, dtype=np.int64)
_EMPTY_IDX.setflags(write=False)


class InstanceFormatError(ValueError):
    """Malformed instance text: bad token, bad shape, or bad value."""


@dataclass(frozen=True, eq=False)
class Instance:
    """Immutable MKP instance.

    `weights[i, j]` is the weight of item j in dimension i; `capacities[i]`
    the budget of dimension i. `known_optimum` is None when no optimum is
    on record (instance files store 0 in that case).
    """

    id: str
    profits: np.ndarray
    weights: np.ndarray
    capacities: np.ndarray
    known_optimum: float | None = None
    weights_by_item: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        profits = np.ascontiguousarray(self.profits, dtype=np.float64)
        weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        capacities = np.ascontiguousarray(self.capacities, dtype=np.float64)
        if weights.ndim != 2:
            raise ValueError("weights must be an m-by-n matrix")
        m, n = weights.shape
        if n < 1 or m < 1:
            raise ValueError(f"need at least one item and one dimension, got n={n} m={m}")
        if profits.shape != (n,):
            raise ValueError(f"profits must have length n={n}, got {profits.shape}")
        if capacities.shape != (m,):
            raise ValueError(f"capacities must have length m={m}, got {capacities.shape}")
        for name, arr in (("profits", profits), ("weights", weights), ("capacities", capacities)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            if np.any(arr < 0):
                raise ValueError(f"{name} must be nonnegative")
        if np.any(capacities <= 0):
            raise ValueError("capacities must be strictly positive")
        if self.known_optimum is not None and not (
            math.isfinite(self.known_optimum) and self.known_optimum >= 0
        ):
            raise ValueError("known_optimum must be a nonnegative finite value")
        weights_by_item = np.ascontiguousarray(weights.T)
        for arr in (profits, weights, capacities, weights_by_item):
            arr.setflags(write=False)
        object.__setattr__(self, "profits", profits)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "capacities", capacities)
        object.__setattr__(self, "weights_by_item", weights_by_item)

    @property
    def n(self) -> int:
        return self.profits.shape[0]

    @property
    def m(self) -> int:
        return self.capacities.shape[0]

    def __repr__(self):
        return f"Instance({self.id!r}, n={self.n}, m={self.m}, known_optimum={self.known_optimum})"


class Solution:
    """Selected item indices with cached profit and residual capacities.

    `selected` preserves insertion order (items are only ever appended by
    the search operators). Instances of this class are value objects;
    callers must not mutate the arrays.
    """

    __slots__ = ("selected", "profit", "residual")

    def __init__(self, selected: np.ndarray, profit: float, residual: np.ndarray):
        selected.setflags(write=False)
        residual.setflags(write=False)
        self.selected = selected
        self.profit = profit
        self.residual = residual

    @property
    def size(self) -> int:
        return self.selected.shape[0]

    def __repr__(self):
        return f"Solution(profit={self.profit}, selected={self.selected.tolist()})"


def evaluate(instance: Instance, selected) -> Solution:
    """Build a Solution for the given item indices.

    Indices must be distinct and in range; feasibility is not required
    (the residual may go negative for over-full selections).
    """
    idx = np.array(selected, dtype=np.int64, copy=True).reshape(-1)
    if idx.size:
        if idx.min() < 0 or idx.max() >= instance.n:
            raise ValueError(f"item index out of range [0, {instance.n})")
        if np.unique(idx).size != idx.size:
            raise ValueError("duplicate item index in selection")
        profit = float(instance.profits[idx].sum())
        residual = instance.capacities - instance.weights[:, idx].sum(axis=1)
    else:
        idx = _EMPTY_IDX
        profit = 0.0
        residual = instance.capacities.copy()
    return Solution(idx, profit, residual)


def is_feasible(solution: Solution) -> bool:
    """True iff no residual capacity is exceeded (exact comparison)."""
    return bool(np.all(solution.residual >= 0.0))


def empty_solution(instance: Instance) -> Solution:
    return evaluate(instance, _EMPTY_IDX)


def enumerate_optimum(instance: Instance) -> tuple[float, list[int]]:
    """Exact optimum by exhaustive subset enumeration; n must be <= 24.

    Ties are broken towards the lexicographically smallest index list, so
    the result is unique and reproducible.
    """
    if instance.n > ENUMERATION_LIMIT:
        raise ValueError(
            f"exhaustive enumeration limited to n <= {ENUMERATION_LIMIT}, got n={instance.n}"
        )
    profit, mask = exhaustive_best(
        instance.profits, instance.weights_by_item, instance.capacities
    )
    return float(profit), [int(j) for j in np.flatnonzero(mask)]


def generate_instance(n: int, m: int, tightness: float, seed: int) -> Instance:
    """Random instance in the classic benchmark style.

    Integer weights and profits are drawn uniformly from [1, 1000] and each
    capacity is set to ceil(tightness * row weight sum), so `tightness` is
    the fraction of the total demand that fits per dimension. Deterministic
    in (n, m, tightness, seed).
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    if not 0.0 < tightness < 1.0:
        raise ValueError(f"tightness must lie in (0, 1), got {tightness}")
    rng = np.random.default_rng(seed)
    profits = rng.integers(1, 1001, size=n).astype(np.float64)
    weights = rng.integers(1, 1001, size=(m, n)).astype(np.float64)
    capacities = np.ceil(tightness * weights.sum(axis=1))
    return Instance(
        id=f"rand-{n}x{m}-t{tightness:g}-s{seed}",
        profits=profits,
        weights=weights,
        capacities=capacities,
        known_optimum=None,
    )


class _TokenStream:
    def __init__(self, text: str):
        self.tokens = text.split()
        self.pos = 0

    def take(self, what: str) -> float:
        if self.pos >= len(self.tokens):
            raise InstanceFormatError(
                f"truncated stream: expected {what} at token {self.pos}, got end of input"
            )
        tok = self.tokens[self.pos]
        try:
            value = float(tok)
        except ValueError:
            raise InstanceFormatError(
                f"token {self.pos}: expected {what}, got non-numeric {tok!r}"
            ) from None
        if not math.isfinite(value):
            raise InstanceFormatError(f"token {self.pos}: {what} is not finite ({tok!r})")
        self.pos += 1
        return value

    def take_int(self, what: str) -> int:
        pos = self.pos
        value = self.take(what)
        if value != int(value):
            raise InstanceFormatError(f"token {pos}: expected integer {what}, got {value}")
        return int(value)

    def take_block(self, count: int, what: str) -> np.ndarray:
        out = np.empty(count, dtype=np.float64)
        for k in range(count):
            out[k] = self.take(what)
        return out


def parse_instances(text: str, format_hint: str, base: str = "instance") -> list[Instance]:
    """Parse whitespace-delimited instance text.

    The `multi` layout starts with a problem count K and then holds K
    problems; the `single` layout holds exactly one problem with no count.
    Each problem reads: n, m, optimum (0 = unknown), n profits, m rows of n
    weights, m capacities. Instance ids are `base.k` in multi files and
    plain `base` in single files. A stored optimum of 0 maps to None.
    """
    if format_hint not in (MULTI, SINGLE):
        raise ValueError(f"format_hint must be {MULTI!r} or {SINGLE!r}, got {format_hint!r}")
    stream = _TokenStream(text)
    if format_hint == MULTI:
        count_pos = stream.pos
        count = stream.take_int("problem count")
        if count < 1:
            raise InstanceFormatError(f"token {count_pos}: problem count must be positive, got {count}")
    else:
        count = 1
    instances = []
    for k in range(count):
        n_pos = stream.pos
        n = stream.take_int("item count")
        if n < 1:
            raise InstanceFormatError(f"token {n_pos}: item count must be positive, got {n}")
        m_pos = stream.pos
        m = stream.take_int("dimension count")
        if m < 1:
            raise InstanceFormatError(f"token {m_pos}: dimension count must be positive, got {m}")
        opt_pos = stream.pos
        optimum = stream.take("optimum")
        if optimum < 0:
            raise InstanceFormatError(f"token {opt_pos}: optimum must be nonnegative, got {optimum}")
        profit_pos = stream.pos
        profits = stream.take_block(n, "profit")
        if np.any(profits < 0):
            bad = int(np.flatnonzero(profits < 0)[0])
            raise InstanceFormatError(
                f"token {profit_pos + bad}: profit must be nonnegative, got {profits[bad]}"
            )
        weight_pos = stream.pos
        weights = stream.take_block(m * n, "weight").reshape(m, n)
        flat = weights.ravel()
        if np.any(flat < 0):
            bad = int(np.flatnonzero(flat < 0)[0])
            raise InstanceFormatError(
                f"token {weight_pos + bad}: weight must be nonnegative, got {flat[bad]}"
            )
        cap_pos = stream.pos
        capacities = stream.take_block(m, "capacity")
        if np.any(capacities <= 0):
            bad = int(np.flatnonzero(capacities <= 0)[0])
            raise InstanceFormatError(
                f"token {cap_pos + bad}: capacity must be positive, got {capacities[bad]}"
            )
        instances.append(
            Instance(
                id=f"{base}.{k}" if format_hint == MULTI else base,
                profits=profits,
                weights=weights,
                capacities=capacities,
                known_optimum=optimum if optimum > 0 else None,
            )
        )
    if stream.pos != len(stream.tokens):
        raise InstanceFormatError(
            f"token {stream.pos}: trailing data after last problem "
            f"({len(stream.tokens) - stream.pos} extra tokens)"
        )
    return instances


def _fmt(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return repr(float(value))


def serialize_instance(instance: Instance) -> str:
    """Emit the single-problem layout accepted by parse_instances."""
    opt = instance.known_optimum if instance.known_optimum is not None else 0.0
    lines = [f"{instance.n} {instance.m} {_fmt(opt)}"]
    lines.append(" ".join(_fmt(p) for p in instance.profits))
    for row in instance.weights:
        lines.append(" ".join(_fmt(w) for w in row))
    lines.append(" ".join(_fmt(c) for c in instance.capacities))
    return "\n".join(lines) + "\n"


def load_instances(path, format_hint: str | None = None) -> list[Instance]:
    """Read an instance file, auto-detecting the layout when no hint is given.

    Auto-detection tries the multi layout first and falls back to single
    when the multi read fails or leaves the stream inconsistent.
    """
    from pathlib import Path

    p = Path(path)
    text = p.read_text(encoding="utf-8")
    base = p.stem
    if format_hint is not None:
        return parse_instances(text, format_hint, base=base)
    try:
        return parse_instances(text, MULTI, base=base)
    except InstanceFormatError:
        return parse_instances(text, SINGLE, base=base)
