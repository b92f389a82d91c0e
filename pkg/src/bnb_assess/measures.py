"""Per-run measures of efficiency, work, progress and parallel overhead."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

from .trace_model import (
    DEFAULT_ABS_TOL,
    DEFAULT_REL_TOL,
    Trace,
    WorkCounters,
    core_activity_violations,
    core_hours,
    from_ticks,
    normalize_sense,
    to_ticks,
)

UNITS = ("seconds", "ratio", "count", "nodes/second", "core-seconds")


@dataclass(frozen=True)
class MeasureValue:
    name: str
    value: float
    unit: str
    censored: bool = False


@dataclass(frozen=True)
class GapFunctionSample:
    t: float
    gap: float


def relative_gap(primal: float, dual: float, denominator: str | float = "max") -> float:
    """Relative primal-dual gap of a pair of bounds.

    0 when both bounds are zero, the normalized difference when they share a
    sign, and 1 otherwise.  A missing bound (infinite value) also gives 1.

    ``denominator`` selects the normalization: ``"max"`` (the default, which
    keeps the result in [0, 1]), ``"min"``, or a positive constant.  The
    non-default variants are not bounded by 1.
    """
    if math.isinf(primal) or math.isinf(dual):
        return 1.0
    if primal == 0 and dual == 0:
        return 0.0
    if primal * dual < 0:
        return 1.0
    diff = abs(primal - dual)
    if denominator == "max":
        return diff / max(abs(primal), abs(dual))
    if denominator == "min":
        low = min(abs(primal), abs(dual))
        return diff / low if low > 0 else math.inf
    if isinstance(denominator, (int, float)) and denominator > 0:
        return diff / denominator
    raise ValueError(f"bad gap denominator {denominator!r}")


def absolute_gap(primal: float, dual: float) -> float:
    """Primal minus dual in minimization sense (inf while a bound is missing)."""
    if math.isinf(primal) or math.isinf(dual):
        return math.inf
    return primal - dual


def gap_function(trace: Trace) -> list[GapFunctionSample]:
    """Sample the gap step function at every bound event.

    An implicit ``(0, 1.0)`` sample stands for the time before the first
    event when that event is later than t = 0.
    """
    trace = normalize_sense(trace)
    samples: list[GapFunctionSample] = []
    if not trace.bounds or trace.bounds[0].t > 0:
        samples.append(GapFunctionSample(0.0, 1.0))
    for e in trace.bounds:
        samples.append(GapFunctionSample(e.t, relative_gap(e.primal, e.dual)))
    return samples


def final_gap(trace: Trace) -> float:
    return gap_function(trace)[-1].gap


def _first_time(trace: Trace, name: str, reached) -> MeasureValue:
    trace = normalize_sense(trace)
    if not trace.bounds or trace.bounds[0].t > 0:
        if reached(math.inf, -math.inf):
            return MeasureValue(name, 0.0, "seconds")
    for e in trace.bounds:
        if reached(e.primal, e.dual):
            return MeasureValue(name, e.t, "seconds")
    return MeasureValue(name, trace.run.time_limit, "seconds", censored=True)


def time_to_gap(trace: Trace, target: float, abs_target: float | None = None) -> MeasureValue:
    """Earliest time the relative gap is at most ``target``.

    With ``abs_target`` the criterion is also met once the absolute gap drops
    to ``abs_target``.  Censored at the time limit when never reached.
    """
    if not 0 <= target <= 1:
        raise ValueError(f"gap target {target} outside [0, 1]")

    def reached(p: float, d: float) -> bool:
        if relative_gap(p, d) <= target:
            return True
        return abs_target is not None and absolute_gap(p, d) <= abs_target

    return _first_time(trace, "time_to_gap", reached)


def time_to_optimality(
    trace: Trace, rel_tol: float = DEFAULT_REL_TOL, abs_tol: float = DEFAULT_ABS_TOL
) -> MeasureValue:
    m = time_to_gap(trace, rel_tol, abs_tol)
    return MeasureValue("time_to_optimality", m.value, m.unit, m.censored)


def time_to_first_solution(trace: Trace) -> MeasureValue:
    return _first_time(trace, "time_to_first_solution", lambda p, d: math.isfinite(p))


def primal_dual_integral(trace: Trace, horizon: float | None = None) -> MeasureValue:
    """Integral of the gap step function over ``[0, min(wall_time, horizon)]``.

    The gap is taken as 1 before the first bound event, so the result lies
    in ``[0, horizon]``.  ``horizon`` defaults to the run's time limit.
    """
    run = trace.run
    if horizon is None:
        horizon = run.time_limit
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if horizon > run.time_limit + 1e-9:
        raise ValueError(f"horizon {horizon} exceeds time limit {run.time_limit}")
    end = min(run.wall_time, horizon)

    samples = gap_function(trace)
    pieces = []
    for cur, nxt in zip(samples, samples[1:] + [None]):
        if cur.t >= end:
            break
        stop = end if nxt is None else min(nxt.t, end)
        pieces.append(cur.gap * (stop - cur.t))
    return MeasureValue("pdi", math.fsum(pieces), "seconds")


def work_counts(trace: Trace) -> WorkCounters | None:
    """The run's work counters, or ``None`` when the trace did not record them."""
    return trace.work


def node_throughput(trace: Trace) -> MeasureValue:
    if trace.run.wall_time <= 0:
        raise ValueError("node throughput undefined for zero wall time")
    if trace.work is None:
        raise ValueError("trace has no work counters")
    return MeasureValue("node_throughput", trace.work.nodes_processed / trace.run.wall_time, "nodes/second")


def _plain(x: float | MeasureValue, what: str) -> float:
    if isinstance(x, MeasureValue):
        if x.censored:
            raise ValueError(f"{what} is censored; speed-up needs completed runs on both sides")
        return x.value
    return float(x)


def speedup(t_base: float | MeasureValue, t_n: float | MeasureValue) -> float:
    """Speed-up ``t_base / t_n``.  Censored measures are rejected."""
    base = _plain(t_base, "baseline measure")
    par = _plain(t_n, "parallel measure")
    if base <= 0 or par <= 0:
        raise ValueError("speed-up needs positive times")
    return base / par


def parallel_efficiency(s_n: float, n: float) -> float:
    """Speed-up per core; 1 means perfect scaling."""
    if n < 1:
        raise ValueError("core count must be >= 1")
    if s_n <= 0:
        raise ValueError("speed-up must be positive")
    return s_n / n


def work_change(base: Trace, other: Trace) -> float:
    """Ratio of nodes processed by ``other`` to nodes processed by ``base``.

    Above 1 means the parallel search did redundant work; below 1 means it
    found good bounds earlier and pruned more.
    """
    if base.work is None or other.work is None:
        raise ValueError("both traces need work counters")
    if base.work.nodes_processed == 0:
        raise ValueError("baseline processed no nodes")
    return other.work.nodes_processed / base.work.nodes_processed


def _busy_spans(trace: Trace) -> dict[int, tuple[int, int]]:
    if not trace.core_activity:
        raise ValueError("trace has no core activity")
    spans: dict[int, tuple[int, int]] = {}
    for iv in trace.core_activity:
        if iv.kind != "busy" or iv.end <= iv.start:
            continue
        s, e = to_ticks(iv.start), to_ticks(iv.end)
        if iv.core_id in spans:
            s0, e0 = spans[iv.core_id]
            spans[iv.core_id] = (min(s, s0), max(e, e0))
        else:
            spans[iv.core_id] = (s, e)
    idle_cores = set(range(trace.run.cores)) - spans.keys()
    if idle_cores:
        raise ValueError(f"cores {sorted(idle_cores)} were never busy")
    return spans


def ramp_times(
    trace: Trace, definition: Literal["per_core_sum", "all_cores_active"] = "per_core_sum"
) -> tuple[float, float]:
    """Ramp-up and ramp-down time in seconds.

    ``per_core_sum`` adds, over cores, the time before each core first works
    and the time after it last works.  ``all_cores_active`` takes the time
    until every core has started, and the time from the first core going
    quiet for good until the end.
    """
    spans = _busy_spans(trace)
    end = to_ticks(trace.run.wall_time)
    starts = [s for s, _ in spans.values()]
    ends = [e for _, e in spans.values()]
    if definition == "per_core_sum":
        return from_ticks(sum(starts)), from_ticks(sum(end - e for e in ends))
    if definition == "all_cores_active":
        return from_ticks(max(starts)), from_ticks(end - min(ends))
    raise ValueError(f"unknown ramp definition {definition!r}")


def overhead_breakdown(trace: Trace) -> tuple[float, float, float]:
    """Total (busy, idle, comm) core-seconds.

    Requires every core's intervals to tile ``[0, wall_time]``; the three
    totals then add up to cores * wall_time at microsecond resolution.
    """
    if not trace.core_activity:
        raise ValueError("trace has no core activity")
    problems = core_activity_violations(trace)
    if problems:
        raise ValueError(f"core activity does not tile [0, T]: {problems[0].message}")
    totals = {"busy": 0, "idle": 0, "comm": 0}
    for iv in trace.core_activity:
        totals[iv.kind] += to_ticks(iv.end) - to_ticks(iv.start)
    assert sum(totals.values()) == to_ticks(trace.run.wall_time) * trace.run.cores
    return from_ticks(totals["busy"]), from_ticks(totals["idle"]), from_ticks(totals["comm"])


# Names accepted by the analysis pipeline.  Each maps a trace to one value.
def _wall(trace: Trace) -> MeasureValue:
    return MeasureValue("wall_time", trace.run.wall_time, "seconds", trace.run.status == "time_limit")


def _work_measure(name: str, attr: str):
    def f(trace: Trace) -> MeasureValue:
        if trace.work is None:
            raise LookupError("work counters absent")
        return MeasureValue(name, float(getattr(trace.work, attr)), "count")
    return f


def _overhead_measure(name: str, index: int):
    def f(trace: Trace) -> MeasureValue:
        return MeasureValue(name, overhead_breakdown(trace)[index], "core-seconds")
    return f


def _ramp_measure(name: str, index: int, definition: str):
    def f(trace: Trace) -> MeasureValue:
        return MeasureValue(name, ramp_times(trace, definition)[index], "seconds")  # type: ignore[arg-type]
    return f


def measure_registry(
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    gap_target: float = 0.01,
    horizon: float | None = None,
) -> dict:
    return {
        "wall_time": _wall,
        "core_hours": lambda tr: MeasureValue("core_hours", core_hours(tr.run), "core-seconds"),
        "time_to_optimality": lambda tr: time_to_optimality(tr, rel_tol, abs_tol),
        "time_to_gap": lambda tr: time_to_gap(tr, gap_target),
        "time_to_first_solution": time_to_first_solution,
        "pdi": lambda tr: primal_dual_integral(tr, horizon),
        "final_gap": lambda tr: MeasureValue("final_gap", final_gap(tr), "ratio"),
        "nodes": _work_measure("nodes", "nodes_processed"),
        "bounding_problems": _work_measure("bounding_problems", "bounding_problems"),
        "iterations": _work_measure("iterations", "iterations"),
        "node_throughput": node_throughput,
        "busy_time": _overhead_measure("busy_time", 0),
        "idle_time": _overhead_measure("idle_time", 1),
        "comm_time": _overhead_measure("comm_time", 2),
        "ramp_up": _ramp_measure("ramp_up", 0, "per_core_sum"),
        "ramp_down": _ramp_measure("ramp_down", 1, "per_core_sum"),
        "ramp_up_all_active": _ramp_measure("ramp_up_all_active", 0, "all_cores_active"),
        "ramp_down_all_active": _ramp_measure("ramp_down_all_active", 1, "all_cores_active"),
    }


MEASURE_NAMES = tuple(measure_registry())
