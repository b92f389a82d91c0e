"""Performance, cumulative, combined time/gap and speed-up profiles."""

from __future__ import annotations

import math
from bisect import bisect_right
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

from .measures import MeasureValue, speedup

Table = Mapping[str, Mapping[str, MeasureValue]]


@dataclass(frozen=True)
class ProfileCurve:
    """A right-continuous, non-decreasing step function.

    ``points`` are the jump locations with the fraction reached at each one;
    the curve is 0 left of the first point.  ``right_censored_at`` marks the
    last x when the curve never reaches 1.
    """

    label: str
    points: tuple[tuple[float, float], ...]
    right_censored_at: float | None = None

    def __call__(self, x: float) -> float:
        xs = [p[0] for p in self.points]
        i = bisect_right(xs, x)
        return self.points[i - 1][1] if i else 0.0

    @property
    def final_fraction(self) -> float:
        return self.points[-1][1] if self.points else 0.0


@dataclass(frozen=True)
class RatioTable:
    solvers: tuple[str, ...]
    ratios: dict[str, dict[str, float]]
    dropped: tuple[str, ...] = ()

    @property
    def instances(self) -> list[str]:
        return sorted(self.ratios)


@dataclass(frozen=True)
class SpeedupCurve:
    label: str
    baseline_cores: int
    points: tuple[tuple[int, float], ...]
    ideal: tuple[tuple[int, float], ...] = field(default=())


def _ecdf(label: str, values: Sequence[float], denominator: int, offset_count: int = 0) -> ProfileCurve:
    finite = sorted(v for v in values if math.isfinite(v))
    points: list[tuple[float, float]] = []
    for i, v in enumerate(finite, 1):
        frac = (offset_count + i) / denominator
        if points and points[-1][0] == v:
            points[-1] = (v, frac)
        else:
            points.append((v, frac))
    censored_at = None
    if points and points[-1][1] < 1.0:
        censored_at = points[-1][0]
    return ProfileCurve(label, tuple(points), censored_at)


def performance_ratios(
    table: Table,
    solvers: Sequence[str] | None = None,
    ratio_shift: float = 0.0,
) -> RatioTable:
    """Ratio of each solver's measure to the per-instance virtual best.

    ``table`` maps instance -> solver -> measure.  Censored or missing
    entries get ratio +inf; instances censored for every solver are dropped
    and listed in ``dropped``.  A positive ``ratio_shift`` is added to both
    numerator and denominator.
    """
    if solvers is None:
        solvers = sorted({s for row in table.values() for s in row})
    if not solvers:
        raise ValueError("no solvers to compare")
    if ratio_shift < 0:
        raise ValueError("ratio shift must be non-negative")

    ratios: dict[str, dict[str, float]] = {}
    dropped: list[str] = []
    for instance in sorted(table):
        row = table[instance]
        done = {s: row[s].value for s in solvers if s in row and not row[s].censored}
        if not done:
            dropped.append(instance)
            continue
        best = min(done.values()) + ratio_shift
        if best <= 0:
            raise ValueError(f"instance {instance!r}: virtual best is zero; use a ratio shift")
        ratios[instance] = {s: (done[s] + ratio_shift) / best if s in done else math.inf for s in solvers}
    return RatioTable(tuple(solvers), ratios, tuple(dropped))


def exclude_timeouts(table: Table, solvers: Sequence[str] | None = None) -> dict[str, dict[str, MeasureValue]]:
    """Keep only instances every solver completed."""
    if solvers is None:
        solvers = sorted({s for row in table.values() for s in row})
    return {
        p: dict(row)
        for p, row in table.items()
        if all(s in row and not row[s].censored for s in solvers)
    }


def performance_profile(ratios: RatioTable, solver: str) -> ProfileCurve:
    """Empirical CDF of ``solver``'s performance ratios over the retained instances."""
    values = [ratios.ratios[p][solver] for p in ratios.instances]
    if not values:
        return ProfileCurve(solver, ())
    return _ecdf(solver, values, len(values))


def performance_profiles(
    table: Table,
    include_timeouts: bool = False,
    ratio_shift: float = 0.0,
    solvers: Sequence[str] | None = None,
) -> tuple[list[ProfileCurve], RatioTable]:
    """One performance profile per solver.

    By default only instances completed by every solver are used, so each
    curve reaches 1.  With ``include_timeouts`` all instances solved by at
    least one solver are kept and a curve's right plateau is its solve rate.
    """
    if solvers is None:
        solvers = sorted({s for row in table.values() for s in row})
    source = table if include_timeouts else exclude_timeouts(table, solvers)
    ratios = performance_ratios(source, solvers, ratio_shift)
    if not include_timeouts:
        excluded = tuple(sorted(set(table) - set(source)))
        ratios = RatioTable(ratios.solvers, ratios.ratios, excluded)
    return [performance_profile(ratios, s) for s in ratios.solvers], ratios


def cumulative_profile(measures: Sequence[MeasureValue], label: str = "") -> ProfileCurve:
    """Fraction of runs whose (uncensored) measure is at most x."""
    if len({m.unit for m in measures}) > 1:
        raise ValueError("cumulative profile over mixed units")
    if not measures:
        return ProfileCurve(label, ())
    values = [m.value for m in measures if not m.censored]
    return _ecdf(label, values, len(measures))


def combined_time_gap_profile(
    runs: Sequence[tuple[MeasureValue, float]], label: str = ""
) -> tuple[ProfileCurve, ProfileCurve]:
    """Time curve for solved runs continued by a final-gap curve for the rest.

    ``runs`` holds (time measure, final gap) per instance.  Both curves use
    the total run count as denominator; the gap curve starts at the solved
    fraction so the two concatenate into one profile ending at 1.
    """
    if not runs:
        return ProfileCurve(label, ()), ProfileCurve(label, ())
    n = len(runs)
    solved = [t.value for t, _ in runs if not t.censored]
    gaps = [g for t, g in runs if t.censored]
    time_curve = _ecdf(label, solved, n)
    if not gaps:
        return time_curve, ProfileCurve(label, ())
    offset = len(solved) / n
    gap_curve = _ecdf(label, gaps, n, offset_count=len(solved))
    if offset > 0 and gap_curve.points[0][0] > 0:
        # the gap panel continues from where the time panel stopped
        gap_curve = ProfileCurve(label, ((0.0, offset), *gap_curve.points), gap_curve.right_censored_at)
    return time_curve, gap_curve


def speedup_curve(
    aggregated: Mapping[int, float], baseline_cores: int = 1, label: str = ""
) -> SpeedupCurve:
    """Speed-up of an aggregated measure at each core count against the baseline.

    The ideal line is ``N / baseline``.
    """
    if baseline_cores not in aggregated:
        raise ValueError(f"no data at baseline core count {baseline_cores}")
    base = aggregated[baseline_cores]
    points = tuple((n, speedup(base, aggregated[n])) for n in sorted(aggregated) if n != baseline_cores)
    ideal = tuple((n, n / baseline_cores) for n, _ in points)
    return SpeedupCurve(label, baseline_cores, points, ideal)
