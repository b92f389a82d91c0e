"""Sequential knapsack branch-and-bound and a discrete-event model of running it on N cores.

All times are simulated: the clock counts integer microseconds, node costs are
drawn from a seeded stream, and the emitted trace is a pure function of the
instance and the configuration.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from ..trace_model import (
    TICKS_PER_SECOND,
    BoundEvent,
    CoreInterval,
    RunRecord,
    Trace,
    WorkCounters,
    from_ticks,
)
from .knapsack import GreedyBound, KnapsackInstance, subset_value_table

MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SimConfig:
    name: str = "bnb"
    cores: int = 1
    seed: int = 0
    node_cost_mean: float = 0.001
    node_cost_jitter: float = 0.0
    comm_latency: float = 0.0
    bound_broadcast_period: float = 0.0
    search_order: Literal["best_first", "depth_first"] = "best_first"
    tie_break_seed: int = 0
    workload_mode: Literal["tree_search", "independent_tasks"] = "tree_search"
    n_tasks: int = 1000
    time_limit: float = 3600.0

    def __post_init__(self) -> None:
        if self.cores < 1:
            raise ValueError("cores must be >= 1")
        if not 0 <= self.node_cost_jitter < 1:
            raise ValueError("node_cost_jitter must be in [0, 1)")
        if self.comm_latency < 0 or self.bound_broadcast_period < 0:
            raise ValueError("latency and broadcast period must be non-negative")
        if self.node_cost_mean <= 0 or self.time_limit <= 0:
            raise ValueError("node cost and time limit must be positive")
        if self.search_order not in ("best_first", "depth_first"):
            raise ValueError(f"unknown search order {self.search_order!r}")
        if self.workload_mode not in ("tree_search", "independent_tasks"):
            raise ValueError(f"unknown workload mode {self.workload_mode!r}")
        if self.n_tasks < 1:
            raise ValueError("n_tasks must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown SimConfig fields: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class SimResult:
    trace: Trace
    optimal_value: float  # best value found; the optimum unless the run hit its time limit
    solution: tuple[int, ...]


@dataclass(slots=True)
class _Node:
    id: int
    level: int
    weight: float
    value: float
    taken: tuple[int, ...]
    key: float  # parent's bound: a valid upper bound for this subtree
    rank: int  # 0 for the include branch, 1 for exclude


def _mix(x: int) -> int:
    # splitmix64 finalizer
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


class _Search:
    """Node bookkeeping shared by the sequential and parallel drivers."""

    def __init__(self, instance: KnapsackInstance, config: SimConfig) -> None:
        self.config = config
        self.bound = GreedyBound(instance)
        self.n = instance.n_items
        self.next_id = 0
        self.pool: list[tuple[tuple, int, _Node]] = []
        self.rng = random.Random(config.seed)
        self.mean_ticks = max(1, round(config.node_cost_mean * TICKS_PER_SECOND))
        self.nodes = 0
        self.iterations = 0
        self.best_value = -math.inf
        self.best_items: tuple[int, ...] = ()
        # max-heap over keys of live nodes (pooled or in flight), lazily cleaned
        self._keys: list[tuple[float, int]] = []
        self._live: set[int] = set()

    def new_node(self, level: int, weight: float, value: float, taken: tuple[int, ...], key: float, rank: int) -> _Node:
        node = _Node(self.next_id, level, weight, value, taken, key, rank)
        self.next_id += 1
        return node

    def priority(self, node: _Node) -> tuple:
        tie = _mix((self.config.tie_break_seed << 32) ^ node.id)
        if self.config.search_order == "best_first":
            return (-node.key, tie)
        return (-node.level, node.rank, tie)

    def push(self, node: _Node) -> None:
        heapq.heappush(self.pool, (self.priority(node), node.id, node))
        heapq.heappush(self._keys, (-node.key, node.id))
        self._live.add(node.id)

    def pop(self) -> _Node:
        return heapq.heappop(self.pool)[2]

    def retire(self, node: _Node) -> None:
        self._live.discard(node.id)

    def open_bound(self) -> float:
        while self._keys and self._keys[0][1] not in self._live:
            heapq.heappop(self._keys)
        return -self._keys[0][0] if self._keys else -math.inf

    def dual(self) -> float:
        return max(self.best_value, self.open_bound())

    def node_ticks(self) -> int:
        u = self.rng.uniform(-1.0, 1.0)
        return max(1, round(self.mean_ticks * (1.0 + self.config.node_cost_jitter * u)))

    def root(self) -> _Node:
        return self.new_node(0, 0.0, 0.0, (), math.inf, 0)

    def process(self, node: _Node, incumbent_view: float) -> tuple[list[_Node], tuple[float, tuple[int, ...]] | None]:
        """Bound and branch one node against the processing core's incumbent view.

        Returns the children and the greedy completion when it beats the view.
        """
        b = self.bound
        bound, gval, gend, scanned, exact = b.evaluate(node.level, node.weight, node.value)
        self.nodes += 1
        self.iterations += max(1, scanned)
        found = None
        if gval > incumbent_view:
            found = (gval, node.taken + tuple(b.order[node.level:gend]))
            incumbent_view = gval
        if exact or bound <= incumbent_view or node.level >= self.n:
            return [], found
        k = node.level
        children = []
        if node.weight + b.weights[k] <= b.capacity:
            children.append(self.new_node(k + 1, node.weight + b.weights[k], node.value + b.values[k],
                                          node.taken + (b.order[k],), bound, 0))
        children.append(self.new_node(k + 1, node.weight, node.value, node.taken, bound, 1))
        return children, found


class _BoundLog:
    """Bound events in maximization sense, one per distinct tick."""

    def __init__(self) -> None:
        self.events: list[tuple[int, float, float]] = []
        self.state = (-math.inf, math.inf)

    def record(self, tick: int, primal: float, dual: float) -> None:
        if (primal, dual) == self.state:
            return
        self.state = (primal, dual)
        if self.events and self.events[-1][0] == tick:
            self.events[-1] = (tick, primal, dual)
        else:
            self.events.append((tick, primal, dual))

    def bound_events(self) -> tuple[BoundEvent, ...]:
        return tuple(BoundEvent(from_ticks(t), p, d) for t, p, d in self.events)


def _trace(instance: KnapsackInstance, config: SimConfig, cores: int, end: int, status: str,
           log: _BoundLog, work: WorkCounters, activity: list[CoreInterval]) -> Trace:
    run = RunRecord(
        instance_id=instance.id,
        solver_id=config.name,
        cores=cores,
        seed=config.seed,
        time_limit=config.time_limit,
        status=status,
        wall_time=from_ticks(end),
        sense="max",
    )
    return Trace(run=run, bounds=log.bound_events(), work=work, core_activity=tuple(activity))


def solve_sequential(instance: KnapsackInstance, config: SimConfig | None = None) -> SimResult:
    """Plain single-core branch and bound; communication settings are ignored."""
    config = replace(config or SimConfig(), cores=1)
    if config.workload_mode == "independent_tasks":
        return simulate_parallel(instance, replace(config, comm_latency=0.0, bound_broadcast_period=0.0))
    search = _Search(instance, config)
    limit = round(config.time_limit * TICKS_PER_SECOND)
    log = _BoundLog()
    search.push(search.root())
    now = 0
    status = "optimal"
    while search.pool:
        node = search.pop()
        if node.key <= search.best_value:
            search.retire(node)
            continue
        finish = now + search.node_ticks()
        if finish > limit:
            now, status = limit, "time_limit"
            break
        now = finish
        children, found = search.process(node, search.best_value)
        if found is not None:
            search.best_value, search.best_items = found
        for child in children:
            search.push(child)
        search.retire(node)
        log.record(now, search.best_value, search.dual())
    log.record(now, search.best_value, search.dual())
    work = WorkCounters(search.nodes, search.nodes, search.iterations)
    activity = [CoreInterval(0, 0.0, from_ticks(now), "busy")] if now > 0 else []
    return SimResult(
        _trace(instance, config, 1, now, status, log, work, activity),
        search.best_value,
        tuple(sorted(search.best_items)),
    )


class _Core:
    __slots__ = ("id", "state", "since", "node", "pending_ticks", "view", "intervals")

    def __init__(self, core_id: int) -> None:
        self.id = core_id
        self.state = "idle"
        self.since = 0
        self.node: _Node | None = None
        self.pending_ticks = 0
        self.view = -math.inf
        self.intervals: list[CoreInterval] = []

    def switch(self, state: str, tick: int) -> None:
        if tick > self.since:
            self.intervals.append(CoreInterval(self.id, from_ticks(self.since), from_ticks(tick), self.state))
        self.state = state
        self.since = tick


def simulate_parallel(instance: KnapsackInstance, config: SimConfig) -> SimResult:
    """Discrete-event simulation of the search on ``config.cores`` virtual cores.

    Idle cores pull the highest-priority node from one central pool; every
    hand-off costs ``comm_latency`` of communication time on the receiving
    core.  A core that improves the incumbent knows it at once, everybody
    else (including the pool's pruning) learns it at the next multiple of
    ``bound_broadcast_period``.  The global dual bound is the best key over
    pooled and in-flight nodes.
    """
    if config.workload_mode == "independent_tasks":
        return _simulate_tasks(instance, config)

    search = _Search(instance, config)
    limit = round(config.time_limit * TICKS_PER_SECOND)
    latency = round(config.comm_latency * TICKS_PER_SECOND)
    period = round(config.bound_broadcast_period * TICKS_PER_SECOND)
    cores = [_Core(i) for i in range(config.cores)]
    log = _BoundLog()
    known = -math.inf  # incumbent value everybody has been told about
    events: list[tuple[int, int, str, int]] = []
    seq = 0
    broadcast_pending = False
    in_flight = 0

    def schedule(tick: int, kind: str, core_id: int) -> None:
        nonlocal seq
        heapq.heappush(events, (tick, seq, kind, core_id))
        seq += 1

    def dispatch(now: int) -> None:
        nonlocal in_flight
        for core in cores:
            if core.state != "idle":
                continue
            while search.pool:
                node = search.pop()
                if node.key <= known:
                    search.retire(node)
                    continue
                core.node = node
                core.view = max(core.view, known)
                in_flight += 1
                ticks = search.node_ticks()
                if latency:
                    core.switch("comm", now)
                    core.pending_ticks = ticks
                    schedule(now + latency, "start", core.id)
                else:
                    core.switch("busy", now)
                    schedule(now + ticks, "finish", core.id)
                break

    search.push(search.root())
    dispatch(0)
    now = 0
    status = "optimal"
    while True:
        if in_flight == 0 and not search.pool:
            break
        tick, _, kind, core_id = heapq.heappop(events)
        if tick > limit:
            now, status = limit, "time_limit"
            break
        now = tick
        if kind == "broadcast":
            broadcast_pending = False
            known = search.best_value
            for core in cores:
                core.view = max(core.view, known)
        elif kind == "start":
            core = cores[core_id]
            core.switch("busy", now)
            schedule(now + core.pending_ticks, "finish", core_id)
        else:
            core = cores[core_id]
            node = core.node
            assert node is not None
            children, found = search.process(node, core.view)
            if found is not None:
                core.view = found[0]
                if found[0] > search.best_value:
                    search.best_value, search.best_items = found
                    if period == 0:
                        known = search.best_value
                    elif not broadcast_pending:
                        broadcast_pending = True
                        schedule((now // period + 1) * period, "broadcast", -1)
            for child in children:
                search.push(child)
            search.retire(node)
            core.node = None
            in_flight -= 1
            core.switch("idle", now)
        dispatch(now)
        log.record(now, search.best_value, search.dual())

    end = now
    log.record(end, search.best_value, search.dual())
    activity: list[CoreInterval] = []
    for core in cores:
        core.switch("idle", end)
        activity.extend(core.intervals)
    work = WorkCounters(search.nodes, search.nodes, search.iterations)
    return SimResult(
        _trace(instance, config, config.cores, end, status, log, work, activity),
        search.best_value,
        tuple(sorted(search.best_items)),
    )


def _simulate_tasks(instance: KnapsackInstance, config: SimConfig) -> SimResult:
    """Exhaustive enumeration cut into ``n_tasks`` equal-cost independent tasks.

    Task j scans a contiguous block of subset indices.  There is no tree and
    no pruning, so the schedule is limited only by granularity and latency.
    """
    table = subset_value_table(instance)
    edges = np.linspace(0, table.size, config.n_tasks + 1).round().astype(np.int64)
    block_best = [
        (float(table[a:b].max()), int(a + table[a:b].argmax())) if b > a else (-math.inf, -1)
        for a, b in zip(edges[:-1], edges[1:])
    ]
    root_bound = GreedyBound(instance).evaluate(0, 0.0, 0.0)[0]

    rng = random.Random(config.seed)
    mean_ticks = max(1, round(config.node_cost_mean * TICKS_PER_SECOND))
    latency = round(config.comm_latency * TICKS_PER_SECOND)
    limit = round(config.time_limit * TICKS_PER_SECOND)
    cores = [_Core(i) for i in range(config.cores)]
    free_at = [(0, c) for c in range(config.cores)]  # (tick the core asks for work, core id)
    finishes: list[tuple[int, int]] = []
    for task in range(config.n_tasks):
        ask, cid = heapq.heappop(free_at)
        u = rng.uniform(-1.0, 1.0)
        ticks = max(1, round(mean_ticks * (1.0 + config.node_cost_jitter * u)))
        core = cores[cid]
        if latency:
            core.switch("comm", ask)
        core.switch("busy", ask + latency)
        done = ask + latency + ticks
        core.switch("idle", done)
        finishes.append((done, task))
        heapq.heappush(free_at, (done, cid))
    finishes.sort()

    end = finishes[-1][0]
    status = "optimal"
    if end > limit:
        end, status = limit, "time_limit"
    log = _BoundLog()
    best, best_index = -math.inf, -1
    completed = 0
    scanned = 0
    for tick, task in finishes:
        if tick > end:
            break
        completed += 1
        a, b = int(edges[task]), int(edges[task + 1])
        scanned += max(1, b - a)
        value, index = block_best[task]
        if value > best:
            best, best_index = value, index
        dual = best if completed == config.n_tasks else max(best, root_bound)
        log.record(tick, best, dual)

    activity: list[CoreInterval] = []
    for core in cores:
        # a core's timeline may run past a time limit; clip it
        clipped = [
            CoreInterval(iv.core_id, iv.start, min(iv.end, from_ticks(end)), iv.kind)
            for iv in core.intervals
            if iv.start < from_ticks(end)
        ]
        last = round(clipped[-1].end * TICKS_PER_SECOND) if clipped else 0
        if last < end:
            clipped.append(CoreInterval(core.id, from_ticks(last), from_ticks(end), "idle"))
        activity.extend(clipped)
    subset = tuple(k for k in range(instance.n_items) if best_index >= 0 and best_index >> k & 1)
    work = WorkCounters(completed, completed, scanned)
    return SimResult(_trace(instance, config, config.cores, end, status, log, work, activity), best, subset)


def seed_sweep(instance: KnapsackInstance, config: SimConfig, seeds: list[int]) -> list[SimResult]:
    """One independent simulation per seed (only the cost-noise seed varies)."""
    if not seeds:
        raise ValueError("empty seed list")
    return [simulate_parallel(instance, replace(config, seed=s)) for s in seeds]
