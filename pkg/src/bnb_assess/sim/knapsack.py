"""0/1 knapsack instances, an exhaustive oracle, and the greedy fractional bound."""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

BRUTE_FORCE_MAX_ITEMS = 25


@dataclass(frozen=True)
class KnapsackInstance:
    id: str
    values: tuple[float, ...]
    weights: tuple[float, ...]
    capacity: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "weights", tuple(self.weights))
        if len(self.values) != len(self.weights):
            raise ValueError("values and weights differ in length")
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")
        if any(v <= 0 for v in self.values) or any(w <= 0 for w in self.weights):
            raise ValueError("values and weights must be positive")

    @property
    def n_items(self) -> int:
        return len(self.values)

    @property
    def integral(self) -> bool:
        """True when every value is an integer, which lets bounds be rounded down."""
        return all(float(v).is_integer() for v in self.values)

    def to_dict(self) -> dict:
        return {"id": self.id, "values": list(self.values), "weights": list(self.weights), "capacity": self.capacity}

    @classmethod
    def from_dict(cls, d: dict) -> "KnapsackInstance":
        return cls(id=str(d["id"]), values=d["values"], weights=d["weights"], capacity=d["capacity"])


def load_instance(path: str | Path) -> KnapsackInstance:
    return KnapsackInstance.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_instance(instance: KnapsackInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance.to_dict(), sort_keys=True) + "\n", encoding="utf-8")


def brute_force_knapsack(instance: KnapsackInstance) -> tuple[float, tuple[int, ...]]:
    """Exact optimum by enumerating all 2^n subsets.

    Subset sums are built by doubling (sums over the first k items, then the
    same plus item k), so subset index bit k says whether item k is packed.
    Ties go to the lowest subset index.
    """
    n = instance.n_items
    if n > BRUTE_FORCE_MAX_ITEMS:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_MAX_ITEMS} items, got {n}")
    feasible = subset_value_table(instance)
    best = int(np.argmax(feasible))
    subset = tuple(k for k in range(n) if best >> k & 1)
    return float(feasible[best]), subset


def subset_value_table(instance: KnapsackInstance) -> np.ndarray:
    """Value of every subset (``-inf`` when infeasible), indexed as in the oracle."""
    vals = np.zeros(1)
    wts = np.zeros(1)
    for v, w in zip(instance.values, instance.weights):
        vals = np.concatenate([vals, vals + v])
        wts = np.concatenate([wts, wts + w])
    return np.where(wts <= instance.capacity, vals, -np.inf)


def generate_instance(family: str, n_items: int, seed: int, value_range: int = 1000) -> KnapsackInstance:
    """Reproducible random instance with integer data.

    ``uncorrelated``: values and weights independent in ``[1, R]``.
    ``strongly_correlated``: weights in ``[1, R]`` and value = weight + R/10.
    Capacity is half the total weight.
    """
    if n_items < 1:
        raise ValueError("need at least one item")
    rng = random.Random(f"{family}:{n_items}:{seed}")
    weights = [rng.randint(1, value_range) for _ in range(n_items)]
    if family == "uncorrelated":
        values = [rng.randint(1, value_range) for _ in range(n_items)]
    elif family == "strongly_correlated":
        values = [w + value_range // 10 for w in weights]
    else:
        raise ValueError(f"unknown instance family {family!r}")
    capacity = max(1, sum(weights) // 2)
    short = {"uncorrelated": "unc", "strongly_correlated": "str"}[family]
    return KnapsackInstance(f"{short}{n_items}-s{seed}", tuple(values), tuple(weights), capacity)


class GreedyBound:
    """Fractional (Dantzig) bound for nodes that fix a prefix of the ratio order."""

    def __init__(self, instance: KnapsackInstance) -> None:
        self.instance = instance
        n = instance.n_items
        self.order = sorted(range(n), key=lambda i: (-instance.values[i] / instance.weights[i], i))
        self.values = [instance.values[i] for i in self.order]
        self.weights = [instance.weights[i] for i in self.order]
        self.capacity = instance.capacity
        self.integral = instance.integral

    def evaluate(self, level: int, weight: float, value: float) -> tuple[float, float, int, int, bool]:
        """Bound a node that has decided the first ``level`` items of the order.

        Returns ``(bound, greedy_value, greedy_end, scanned, exact)`` where
        ``greedy_value`` is the feasible value of packing items
        ``level..greedy_end-1`` on top of the node, and ``exact`` says the
        relaxation is integral so the greedy completion is optimal below.
        """
        scanned = 0
        cap = self.capacity
        for k in range(level, len(self.values)):
            scanned += 1
            w = self.weights[k]
            if weight + w <= cap:
                weight += w
                value += self.values[k]
                continue
            bound = value + (cap - weight) * self.values[k] / w
            if self.integral:
                bound = float(math.floor(bound + 1e-9))
            return bound, value, k, scanned, bound <= value
        return value, value, len(self.values), scanned, True
