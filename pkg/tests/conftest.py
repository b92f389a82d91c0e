from __future__ import annotations

import pytest

from bnb_assess.trace_model import BoundEvent, CoreInterval, RunRecord, Trace, WorkCounters


def make_trace(
    events=(),
    wall=10.0,
    limit=None,
    sense="min",
    cores=1,
    status="optimal",
    activity=(),
    work=None,
    instance="p1",
    solver="s",
    seed=0,
) -> Trace:
    run = RunRecord(instance, solver, cores, seed, wall if limit is None else limit, status, wall, sense)
    return Trace(run, [BoundEvent(*e) for e in events], work, [CoreInterval(*iv) for iv in activity])


@pytest.fixture
def trace_factory():
    return make_trace


@pytest.fixture
def counters():
    return WorkCounters(100, 340, 5000)
