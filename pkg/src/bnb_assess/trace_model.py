"""Run traces: the data model, the ``.bbt`` file format, and validation.

A trace is one run of a branch-and-bound solver: a header describing the run,
a stream of bound updates, optional per-core activity intervals and the final
work counters.  Everything downstream (measures, aggregation, profiles) works
on :class:`Trace` objects in minimization sense.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Iterable, Iterator

TICKS_PER_SECOND = 1_000_000

STATUSES = ("optimal", "gap_limit", "time_limit", "first_solution", "aborted")
SENSES = ("min", "max")
CORE_STATES = ("busy", "idle", "comm")

DEFAULT_REL_TOL = 1e-6
DEFAULT_ABS_TOL = 1e-9
WALL_TIME_SLACK = 1e-6


def to_ticks(t: float) -> int:
    """Round a time in seconds to integer microseconds."""
    return round(t * TICKS_PER_SECOND)


def from_ticks(ticks: int) -> float:
    return ticks / TICKS_PER_SECOND


@dataclass(frozen=True)
class BoundEvent:
    t: float
    primal: float
    dual: float


@dataclass(frozen=True)
class CoreInterval:
    core_id: int
    start: float
    end: float
    kind: str  # one of CORE_STATES

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class WorkCounters:
    nodes_processed: int
    bounding_problems: int
    iterations: int


@dataclass(frozen=True)
class RunRecord:
    instance_id: str
    solver_id: str
    cores: int
    seed: int
    time_limit: float
    status: str
    wall_time: float
    sense: str = "min"


@dataclass(frozen=True)
class Trace:
    run: RunRecord
    bounds: tuple[BoundEvent, ...] = ()
    work: WorkCounters | None = None
    core_activity: tuple[CoreInterval, ...] = field(default=())

    def __post_init__(self) -> None:
        # accept lists for convenience but keep the object hashable/immutable
        object.__setattr__(self, "bounds", tuple(self.bounds))
        object.__setattr__(self, "core_activity", tuple(self.core_activity))


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


class TraceFormatError(ValueError):
    """Raised when a ``.bbt`` stream cannot be parsed into a trace."""


# ---------------------------------------------------------------------------
# accessors


def core_hours(run: RunRecord) -> float:
    """Resource allocation of a run in core-seconds (wall time times cores)."""
    return run.wall_time * run.cores


def normalize_sense(trace: Trace) -> Trace:
    """Return ``trace`` in minimization sense.

    Maximization traces get their objective values negated, which swaps the
    roles of "non-decreasing" and "non-increasing" but keeps the primal as the
    feasible-solution side.  Idempotent.
    """
    if trace.run.sense == "min":
        return trace
    bounds = tuple(BoundEvent(e.t, -e.primal, -e.dual) for e in trace.bounds)
    return replace(trace, run=replace(trace.run, sense="min"), bounds=bounds)


def bounds_at(trace: Trace, t: float) -> tuple[float, float]:
    """Evaluate the (primal, dual) step functions at time ``t``.

    The step functions are right-continuous: an event at time ``t`` is in
    effect at ``t``.  Before the first event nothing is known, so the result
    is ``(+inf, -inf)`` in minimization sense (``(-inf, +inf)`` for max).
    """
    if t < 0 or t > trace.run.wall_time:
        raise ValueError(f"t={t} outside [0, {trace.run.wall_time}]")
    if trace.run.sense == "min":
        primal, dual = math.inf, -math.inf
    else:
        primal, dual = -math.inf, math.inf
    for event in trace.bounds:
        if event.t > t:
            break
        primal, dual = event.primal, event.dual
    return primal, dual


def final_bounds(trace: Trace) -> tuple[float, float]:
    """Bounds in effect at the end of the run."""
    return bounds_at(trace, trace.run.wall_time)


# ---------------------------------------------------------------------------
# validation


def validate_trace(
    trace: Trace,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
) -> list[Violation]:
    """Check every invariant of the trace data model.

    Returns an empty list for a well-formed trace.  Violations are data: this
    never raises on malformed content.
    """
    out: list[Violation] = []
    run = trace.run

    if run.cores < 1:
        out.append(Violation("run", f"cores must be >= 1, got {run.cores}"))
    if run.status not in STATUSES:
        out.append(Violation("run", f"unknown status {run.status!r}"))
    if run.sense not in SENSES:
        out.append(Violation("run", f"unknown sense {run.sense!r}"))
    if run.wall_time < 0:
        out.append(Violation("time_domain", f"negative wall_time {run.wall_time}"))
    if run.status != "aborted" and run.wall_time > run.time_limit + WALL_TIME_SLACK:
        out.append(
            Violation("run", f"wall_time {run.wall_time} exceeds time_limit {run.time_limit}")
        )

    out.extend(_check_bounds(trace))
    out.extend(_check_work(trace.work))
    if trace.core_activity:
        out.extend(core_activity_violations(trace))

    if run.status == "optimal":
        from .measures import relative_gap  # local import: measures imports this module

        primal, dual = math.inf, -math.inf
        if trace.bounds:
            last = normalize_sense(trace).bounds[-1]
            primal, dual = last.primal, last.dual
        closed = relative_gap(primal, dual) <= rel_tol or (
            math.isfinite(primal) and math.isfinite(dual) and primal - dual <= abs_tol
        )
        if not closed:
            out.append(Violation("status", "status 'optimal' but final gap is not closed"))
    return out


def _check_bounds(trace: Trace) -> Iterator[Violation]:
    sign = 1.0 if trace.run.sense == "min" else -1.0
    prev: BoundEvent | None = None
    for i, e in enumerate(trace.bounds):
        if e.t < 0:
            yield Violation("time_domain", f"bound event {i} at negative time {e.t}")
        if e.t > trace.run.wall_time:
            yield Violation("time_domain", f"bound event {i} at t={e.t} after wall_time")
        if any(math.isnan(v) for v in (e.t, e.primal, e.dual)):
            yield Violation("value", f"bound event {i} contains NaN")
            prev = e
            continue
        if prev is not None:
            if e.t <= prev.t:
                yield Violation("time_order", f"bound event {i} at t={e.t} not after t={prev.t}")
            if sign * e.primal > sign * prev.primal:
                yield Violation("monotonicity", f"primal bound worsens at event {i}")
            if sign * e.dual < sign * prev.dual:
                yield Violation("monotonicity", f"dual bound worsens at event {i}")
        prev = e


def _check_work(work: WorkCounters | None) -> Iterator[Violation]:
    if work is None:
        return
    for name in ("nodes_processed", "bounding_problems", "iterations"):
        if getattr(work, name) < 0:
            yield Violation("work", f"{name} is negative")
    if work.iterations < work.bounding_problems:
        yield Violation("work", "fewer iterations than bounding problems")


def core_activity_violations(trace: Trace) -> list[Violation]:
    """Violations of the per-core tiling of ``[0, wall_time]``."""
    return list(_iter_core_violations(trace))


def _iter_core_violations(trace: Trace) -> Iterator[Violation]:
    end_ticks = to_ticks(trace.run.wall_time)
    per_core: dict[int, list[CoreInterval]] = {}
    for iv in trace.core_activity:
        if iv.kind not in CORE_STATES:
            yield Violation("core_interval", f"unknown state {iv.kind!r} on core {iv.core_id}")
        if iv.start > iv.end:
            yield Violation("core_interval", f"core {iv.core_id} interval ends before it starts")
        if not 0 <= iv.core_id < trace.run.cores:
            yield Violation("core_interval", f"core id {iv.core_id} outside [0, {trace.run.cores})")
        per_core.setdefault(iv.core_id, []).append(iv)

    missing = [c for c in range(trace.run.cores) if c not in per_core]
    if missing:
        yield Violation("coverage", f"no activity recorded for cores {missing}")

    for core_id in sorted(per_core):
        cursor = 0
        for iv in sorted(per_core[core_id], key=lambda iv: (iv.start, iv.end)):
            start = to_ticks(iv.start)
            if start < cursor:
                yield Violation("core_interval", f"core {core_id} has overlapping intervals")
            elif start > cursor:
                yield Violation("coverage", f"core {core_id} has a gap at t={from_ticks(cursor)}")
            cursor = max(cursor, to_ticks(iv.end))
        if cursor != end_ticks:
            yield Violation("coverage", f"core {core_id} activity ends at {from_ticks(cursor)}, not wall_time")


# ---------------------------------------------------------------------------
# .bbt serialization


def _num_out(x: float) -> float | str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


def _num_in(x: object) -> float:
    if isinstance(x, str):
        if x in ("inf", "-inf"):
            return float(x)
        raise TraceFormatError(f"bad numeric token {x!r}")
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise TraceFormatError(f"expected a number, got {x!r}")
    return float(x)


def trace_records(trace: Trace) -> Iterator[dict]:
    run = trace.run
    yield {
        "kind": "run",
        "instance": run.instance_id,
        "solver": run.solver_id,
        "cores": run.cores,
        "seed": run.seed,
        "time_limit": float(run.time_limit),
        "status": run.status,
        "wall_time": float(run.wall_time),
        "sense": run.sense,
    }
    for e in trace.bounds:
        yield {"kind": "bound", "t": float(e.t), "primal": _num_out(e.primal), "dual": _num_out(e.dual)}
    for iv in trace.core_activity:
        yield {"kind": "core", "id": iv.core_id, "start": float(iv.start), "end": float(iv.end), "state": iv.kind}
    if trace.work is not None:
        w = trace.work
        yield {"kind": "work", "nodes": w.nodes_processed, "lps": w.bounding_problems, "iters": w.iterations}


def dumps_trace(trace: Trace) -> str:
    return "".join(json.dumps(rec, separators=(",", ":")) + "\n" for rec in trace_records(trace))


def write_trace(trace: Trace, path: str | Path) -> None:
    Path(path).write_text(dumps_trace(trace), encoding="utf-8")


def parse_trace(lines: Iterable[str]) -> Trace:
    run: RunRecord | None = None
    bounds: list[BoundEvent] = []
    cores: list[CoreInterval] = []
    work: WorkCounters | None = None
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            kind = rec["kind"]
            if kind == "run":
                if run is not None:
                    raise TraceFormatError("duplicate run header")
                run = RunRecord(
                    instance_id=str(rec["instance"]),
                    solver_id=str(rec["solver"]),
                    cores=int(rec["cores"]),
                    seed=int(rec["seed"]),
                    time_limit=_num_in(rec["time_limit"]),
                    status=str(rec["status"]),
                    wall_time=_num_in(rec["wall_time"]),
                    sense=str(rec.get("sense", "min")),
                )
            elif run is None:
                raise TraceFormatError("first record must be the run header")
            elif kind == "bound":
                bounds.append(BoundEvent(_num_in(rec["t"]), _num_in(rec["primal"]), _num_in(rec["dual"])))
            elif kind == "core":
                cores.append(
                    CoreInterval(int(rec["id"]), _num_in(rec["start"]), _num_in(rec["end"]), str(rec["state"]))
                )
            elif kind == "work":
                work = WorkCounters(int(rec["nodes"]), int(rec["lps"]), int(rec["iters"]))
            else:
                raise TraceFormatError(f"unknown record kind {kind!r}")
        except TraceFormatError as exc:
            raise TraceFormatError(f"line {lineno}: {exc}") from None
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise TraceFormatError(f"line {lineno}: {exc!r}") from None
    if run is None:
        raise TraceFormatError("missing run header")
    return Trace(run=run, bounds=tuple(bounds), work=work, core_activity=tuple(cores))


def loads_trace(text: str) -> Trace:
    return parse_trace(text.splitlines())


def read_trace(path: str | Path | IO[str]) -> Trace:
    if hasattr(path, "read"):
        return parse_trace(path)  # type: ignore[arg-type]
    with open(path, encoding="utf-8") as fh:
        return parse_trace(fh)
