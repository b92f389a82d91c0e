"""Summaries of a measure over a test set."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from typing import Literal

from .measures import MeasureValue, parallel_efficiency, speedup

DEFAULT_SHIFTS = {"seconds": 10.0, "count": 100.0}


def default_shift(unit: str) -> float:
    """Conventional shift for a unit: 10 s for times, 100 for counts, else 0."""
    return DEFAULT_SHIFTS.get(unit, 0.0)


@dataclass(frozen=True)
class AggregationPolicy:
    kind: Literal["arithmetic", "geometric", "shifted_geometric"] = "shifted_geometric"
    shift: float = 10.0
    censoring: Literal["exclude_and_count", "censor_at_limit"] = "exclude_and_count"

    def __post_init__(self) -> None:
        if self.kind not in ("arithmetic", "geometric", "shifted_geometric"):
            raise ValueError(f"unknown mean kind {self.kind!r}")
        if self.censoring not in ("exclude_and_count", "censor_at_limit"):
            raise ValueError(f"unknown censoring policy {self.censoring!r}")
        if self.shift < 0:
            raise ValueError("shift must be non-negative")


@dataclass(frozen=True)
class AggregateResult:
    summary: float
    n_used: int
    n_censored: int


def shifted_geometric_mean(values: Iterable[float], shift: float = 10.0) -> float:
    """``(prod(x + shift)) ** (1/n) - shift``, computed in log space.

    For a positive shift this is evaluated as
    ``shift * expm1(mean(log1p(x / shift)))``, which avoids the cancellation
    of subtracting ``shift`` when the values are much smaller than it.
    """
    xs = list(values)
    if not xs:
        raise ValueError("shifted geometric mean of an empty list")
    if any(x + shift <= 0 for x in xs):
        raise ValueError("all values plus shift must be positive")
    if shift > 0:
        return shift * math.expm1(math.fsum(math.log1p(x / shift) for x in xs) / len(xs))
    return math.exp(math.fsum(math.log(x) for x in xs) / len(xs))


def geometric_mean(values: Iterable[float]) -> float:
    return shifted_geometric_mean(values, 0.0)


def arithmetic_mean(values: Iterable[float]) -> float:
    xs = list(values)
    if not xs:
        raise ValueError("mean of an empty list")
    return math.fsum(xs) / len(xs)


def summarize(values: Sequence[float], kind: str, shift: float = 0.0) -> float:
    if kind == "arithmetic":
        return arithmetic_mean(values)
    if kind == "geometric":
        return geometric_mean(values)
    if kind == "shifted_geometric":
        return shifted_geometric_mean(values, shift)
    raise ValueError(f"unknown mean kind {kind!r}")


def aggregate(measures: Sequence[MeasureValue], policy: AggregationPolicy) -> AggregateResult:
    """Summarize homogeneous measures under a censoring policy.

    ``exclude_and_count`` drops censored values and reports how many there
    were; ``censor_at_limit`` keeps them at their (limit) value.  A summary
    with no usable values is NaN.
    """
    if len({m.unit for m in measures}) > 1:
        raise ValueError(f"mixed units: {sorted({m.unit for m in measures})}")
    if len({m.name for m in measures}) > 1:
        raise ValueError(f"mixed measures: {sorted({m.name for m in measures})}")
    n_censored = sum(m.censored for m in measures)
    if policy.censoring == "exclude_and_count":
        used = [m.value for m in measures if not m.censored]
    else:
        used = [m.value for m in measures]
    summary = summarize(used, policy.kind, policy.shift) if used else math.nan
    return AggregateResult(summary, len(used), n_censored)


def max_contribution(values: Sequence[float]) -> float:
    """Share of the total contributed by the largest value.

    A quick check for arithmetic means dominated by a few instances.
    """
    total = math.fsum(values)
    if not values or total <= 0:
        return math.nan
    return max(values) / total


@dataclass(frozen=True)
class ScalabilityRow:
    instance: str
    cores: int
    speedup: float
    efficiency: float


@dataclass(frozen=True)
class ScalabilityIssue:
    instance: str
    cores: int | None
    reason: str


def per_instance_scalability(
    runs: Mapping[str, Mapping[int, MeasureValue]],
    baseline_cores: int | None = None,
) -> tuple[list[ScalabilityRow], list[ScalabilityIssue]]:
    """Speed-up and efficiency of every instance at every core count.

    ``runs`` maps instance -> core count -> measure for one solver.  The
    baseline is the smallest core count present anywhere unless given.
    Efficiency is relative to the baseline: ``S / (N / baseline)``.
    Instances lacking a usable baseline, and censored pairs, come back as
    issues instead of rows.
    """
    if baseline_cores is None:
        all_cores = {n for per in runs.values() for n in per}
        if not all_cores:
            return [], []
        baseline_cores = min(all_cores)

    rows: list[ScalabilityRow] = []
    issues: list[ScalabilityIssue] = []
    for instance in sorted(runs):
        per = runs[instance]
        base = per.get(baseline_cores)
        if base is None:
            issues.append(ScalabilityIssue(instance, None, f"no baseline run at {baseline_cores} cores"))
            continue
        if base.censored:
            issues.append(ScalabilityIssue(instance, None, "baseline run censored"))
            continue
        for n in sorted(per):
            if n == baseline_cores:
                continue
            if per[n].censored:
                issues.append(ScalabilityIssue(instance, n, "censored"))
                continue
            s = speedup(base, per[n])
            rows.append(ScalabilityRow(instance, n, s, parallel_efficiency(s, n / baseline_cores)))
    return rows, issues
