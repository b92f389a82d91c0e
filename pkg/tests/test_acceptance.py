"""Acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line (visible in ``pytest -v``
output) before asserting.  Run ``python tests/test_acceptance.py`` for just the
summary lines.
"""

from __future__ import annotations

import filecmp
import math
import random
import statistics
import sys
import time
from dataclasses import replace
from pathlib import Path

import pytest

from bnb_assess.aggregate import shifted_geometric_mean
from bnb_assess.cli import main
from bnb_assess.measures import (
    MeasureValue,
    overhead_breakdown,
    parallel_efficiency,
    primal_dual_integral,
    relative_gap,
    speedup,
)
from bnb_assess.profiles import ProfileCurve, performance_profiles
from bnb_assess.sim import (
    SimConfig,
    brute_force_knapsack,
    generate_instance,
    seed_sweep,
    simulate_parallel,
    solve_sequential,
)
from bnb_assess.svg import render_svg
from bnb_assess.trace_model import BoundEvent, RunRecord, Trace, to_ticks, validate_trace

DATA = Path(__file__).parent / "data"
_capture = None


def verdict(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}" + (f" ({detail})" if detail else "")
    if _capture is not None:
        with _capture.disabled():
            print("\n" + line)
    else:
        print(line)
    assert ok, line


@pytest.fixture(autouse=True)
def _uncaptured(capsys):
    global _capture
    _capture = capsys
    yield
    _capture = None


# 1 ---------------------------------------------------------------------------

TABULATED_CORES = (1, 4, 8, 16, 32)
ALPS = (132.835, 75.133, 43.736, 22.212, 13.339)
ALPS_SPEEDUP = (1.768, 3.037, 5.98, 9.958)
COMMERCIAL = (0.01, 0.01, 0.02, 0.03, 0.22)
COMMERCIAL_SPEEDUP = (1, 0.5, 0.333, 0.045)


def test_criterion_01_tabulated_speedups():
    got_a = [speedup(ALPS[0], t) for t in ALPS[1:]]
    got_c = [speedup(COMMERCIAL[0], t) for t in COMMERCIAL[1:]]
    ok = all(abs(g - e) <= 1e-3 for g, e in zip(got_a, ALPS_SPEEDUP)) and all(
        abs(g - e) <= 1e-3 for g, e in zip(got_c, COMMERCIAL_SPEEDUP)
    )
    verdict(1, "table speed-ups within 0.001", ok, "ALPS " + " ".join(f"{g:.3f}" for g in got_a))


# 2 ---------------------------------------------------------------------------


def _extended_real(rng: random.Random) -> float:
    r = rng.random()
    if r < 0.05:
        return math.inf
    if r < 0.10:
        return -math.inf
    if r < 0.20:
        return 0.0
    return rng.choice((-1, 1)) * 10 ** rng.uniform(-6, 6)


def test_criterion_02_gap_properties():
    rng = random.Random(2)
    start = time.perf_counter()
    failures = []
    for _ in range(10_000):
        p, d = _extended_real(rng), _extended_real(rng)
        g = relative_gap(p, d)
        c = 10 ** rng.uniform(-3, 3)
        if not 0 <= g <= 1:
            failures.append(("range", p, d))
        if g != relative_gap(d, p):
            failures.append(("symmetry", p, d))
        if abs(relative_gap(c * p, c * d) - g) > 1e-12:
            failures.append(("scale", p, d))
        if math.isfinite(p) and math.isfinite(d):
            if p == 0 and d == 0:
                expected = 0.0
            elif p * d >= 0:
                expected = abs(p - d) / max(abs(p), abs(d))
            else:
                expected = 1.0
            if g != expected:
                failures.append(("cases", p, d))
    cases_ok = relative_gap(0, 0) == 0 and relative_gap(10, 5) == 0.5 and relative_gap(3, -2) == 1
    elapsed = time.perf_counter() - start
    verdict(2, "gap properties on 10^4 extended-real pairs", not failures and cases_ok and elapsed < 1,
            f"{len(failures)} failures, {elapsed:.2f}s")


# 3 ---------------------------------------------------------------------------


def _trace(events, wall, limit):
    run = RunRecord("p", "s", 1, 0, limit, "time_limit", wall)
    return Trace(run, [BoundEvent(*e) for e in events])


def test_criterion_03_pdi_properties():
    start = time.perf_counter()
    oracle = primal_dual_integral(_trace([(2, 10, 5), (6, 4, 4)], 6, 6), 6).value
    rng = random.Random(3)
    problems = 0
    for _ in range(300):
        times = sorted(rng.sample(range(1, 1000), rng.randint(0, 8)))
        events, primal, dual = [], 1000.0, 0.0
        for t in times:
            primal -= rng.uniform(0, 50)
            dual = min(primal, dual + rng.uniform(0, 50))
            events.append((t / 100, primal, dual))
        tr = _trace(events, 10.0, 10.0)
        horizons = sorted(rng.uniform(0.01, 10) for _ in range(4))
        vals = [primal_dual_integral(tr, h).value for h in horizons]
        problems += any(v > h + 1e-12 for v, h in zip(vals, horizons))
        problems += any(b < a - 1e-12 for a, b in zip(vals, vals[1:]))
        # refinement: repeating the bounds in force at extra times changes nothing
        extra = []
        for t in sorted(rng.uniform(0, 10) for _ in range(5)):
            if all(abs(t - e[0]) > 1e-9 for e in events):
                before = [e for e in events if e[0] < t]
                if before:
                    extra.append((t, before[-1][1], before[-1][2]))
        refined = _trace(sorted(events + extra), 10.0, 10.0)
        a, b = primal_dual_integral(tr).value, primal_dual_integral(refined).value
        problems += abs(a - b) > 1e-9 * max(1.0, a)
    elapsed = time.perf_counter() - start
    verdict(3, "PDI bounded, monotone, refinement invariant, hand oracle 4.0",
            oracle == 4.0 and problems == 0 and elapsed < 1, f"oracle {oracle!r}, {problems} failures, {elapsed:.2f}s")


# 4 ---------------------------------------------------------------------------


def test_criterion_04_shifted_geometric_mean():
    rng = random.Random(4)
    start = time.perf_counter()
    bad_gm = bad_am = bad_shift = 0
    for _ in range(10_000):
        xs = [10 ** rng.uniform(-3, 4) for _ in range(rng.randint(1, 20))]
        gm = statistics.geometric_mean(xs)
        if abs(shifted_geometric_mean(xs, 0) - gm) > 1e-12 * gm:
            bad_gm += 1
        s = rng.uniform(0, 100)
        if shifted_geometric_mean(xs, s) > statistics.fmean(xs) * (1 + 1e-12):
            bad_am += 1
        # translation consistency: SG_s(x + c) = SG_{s + c}(x) + c
        c = rng.uniform(0, 50)
        lhs = shifted_geometric_mean([x + c for x in xs], s)
        rhs = shifted_geometric_mean(xs, s + c) + c
        if abs(lhs - rhs) > 1e-9 * abs(rhs):
            bad_shift += 1
    elapsed = time.perf_counter() - start
    verdict(4, "shifted geometric mean identities on 10^4 lists", bad_gm == bad_am == bad_shift == 0,
            f"{bad_gm}/{bad_am}/{bad_shift} failures, {elapsed:.2f}s")


# 5 + 6 -----------------------------------------------------------------------

_oracle_runs: dict = {}


def _oracle_sweep():
    if _oracle_runs:
        return _oracle_runs
    start = time.perf_counter()
    mismatches, violations, conservation, n_traces = [], [], [], 0
    for i in range(200):
        family = "uncorrelated" if i % 2 == 0 else "strongly_correlated"
        inst = generate_instance(family, 5 + (i // 2) % 16, i)
        opt = brute_force_knapsack(inst)[0]
        results = [solve_sequential(inst)]
        for n in (1, 2, 4, 8):
            for seed in range(3):
                cfg = SimConfig(
                    cores=n, seed=seed, node_cost_jitter=0.3, comm_latency=0.0001, bound_broadcast_period=0.001,
                    search_order="best_first" if seed % 2 == 0 else "depth_first", tie_break_seed=seed,
                )
                results.append(simulate_parallel(inst, cfg))
        for r in results:
            n_traces += 1
            if r.optimal_value != opt:
                mismatches.append((inst.id, r.trace.run.cores, r.trace.run.seed))
            if validate_trace(r.trace):
                violations.append(inst.id)
            busy, idle, comm = overhead_breakdown(r.trace)
            total = to_ticks(busy) + to_ticks(idle) + to_ticks(comm)
            if total != r.trace.run.cores * to_ticks(r.trace.run.wall_time):
                conservation.append(inst.id)
    _oracle_runs.update(
        elapsed=time.perf_counter() - start, mismatches=mismatches, violations=violations,
        conservation=conservation, n_traces=n_traces,
    )
    return _oracle_runs


def test_criterion_05_oracle_equivalence():
    res = _oracle_sweep()
    ok = not res["mismatches"] and res["elapsed"] < 60
    verdict(5, "sequential and parallel runs match brute force on 200 instances", ok,
            f"{res['n_traces']} runs, {len(res['mismatches'])} mismatches, {res['elapsed']:.1f}s")


def test_criterion_06_conservation():
    res = _oracle_sweep()
    ok = not res["violations"] and not res["conservation"]
    verdict(6, "busy + idle + comm = N*T exactly and every trace validates", ok,
            f"{res['n_traces']} traces, {len(res['conservation'])} conservation / {len(res['violations'])} validation failures")


# 7 ---------------------------------------------------------------------------


def test_criterion_07_scalability_sanity():
    start = time.perf_counter()
    inst = generate_instance("uncorrelated", 14, 0)
    cfg = SimConfig(workload_mode="independent_tasks", n_tasks=1000, node_cost_mean=0.001)
    t1 = simulate_parallel(inst, cfg).trace.run.wall_time
    task_eff = {n: parallel_efficiency(speedup(t1, simulate_parallel(inst, replace(cfg, cores=n)).trace.run.wall_time), n)
                for n in (2, 4, 8)}
    # analytic schedule: ceil(1000 / N) rounds of one task each
    analytic = {n: 1000 / (n * math.ceil(1000 / n)) for n in (2, 4, 8)}
    tasks_ok = all(task_eff[n] >= 0.99 and abs(task_eff[n] - analytic[n]) < 1e-12 for n in task_eff)

    tree_eff = {}
    tree_cfg = SimConfig(comm_latency=0.0002, bound_broadcast_period=0.001)
    for seed in (0, 1, 2):
        inst = generate_instance("strongly_correlated", 20, seed)
        seq = solve_sequential(inst, tree_cfg).trace
        if seq.work.nodes_processed < 1000:
            continue
        for n in (2, 4, 8):
            par = simulate_parallel(inst, replace(tree_cfg, cores=n)).trace
            tree_eff[(inst.id, n)] = parallel_efficiency(speedup(seq.run.wall_time, par.run.wall_time), n)
    tree_ok = bool(tree_eff) and all(e < 1 for e in tree_eff.values())
    elapsed = time.perf_counter() - start
    detail = (
        "tasks E=" + ",".join(f"{task_eff[n]:.4f}" for n in (2, 4, 8))
        + "; tree max E=" + (f"{max(tree_eff.values()):.3f}" if tree_eff else "n/a")
        + f" over {len(tree_eff)} runs, {elapsed:.1f}s"
    )
    verdict(7, "independent tasks scale perfectly, tree search with latency does not",
            tasks_ok and tree_ok and elapsed < 30, detail)


# 8 ---------------------------------------------------------------------------

VARIABILITY_INSTANCE = ("strongly_correlated", 18, 4)


def test_criterion_08_seed_variability():
    start = time.perf_counter()
    inst = generate_instance(*VARIABILITY_INSTANCE)
    cfg = SimConfig(cores=4, node_cost_jitter=0.5, comm_latency=0.0002, bound_broadcast_period=0.002,
                    search_order="depth_first")
    counts = [r.trace.work.nodes_processed for r in seed_sweep(inst, cfg, [0, 1, 2, 3, 4])]
    spread = (max(counts) - min(counts)) / statistics.fmean(counts)
    elapsed = time.perf_counter() - start
    verdict(8, "5-seed sweep at N=4 gives distinct node counts", len(set(counts)) >= 2 and elapsed < 30,
            f"{inst.id} nodes {counts}, relative spread {spread:.3f}")


# 9 ---------------------------------------------------------------------------


def _fixture_table():
    t = lambda v, c=False: MeasureValue("time_to_optimality", v, "seconds", c)  # noqa: E731
    return {
        "p1": {"A": t(1.0), "B": t(2.0)},
        "p2": {"A": t(4.0), "B": t(2.0)},
        "p3": {"A": t(3.0), "B": t(3.0)},
        "p4": {"A": t(10.0), "B": t(3600.0, True)},
    }


def test_criterion_09_profiles_and_golden_svg(tmp_path):
    table = _fixture_table()
    curves, _ = performance_profiles(table)
    # ratios over p1..p3: A = (1, 2, 1), B = (2, 1, 1)
    hand = {"A": ((1.0, 2 / 3), (2.0, 1.0)), "B": ((1.0, 2 / 3), (2.0, 1.0))}
    exact = all(c.points == hand[c.label] for c in curves)
    with_to, ratios = performance_profiles(table, include_timeouts=True)
    # ratios over p1..p4: A = (1, 2, 1, 1), B = (2, 1, 1, inf)
    hand_to = {"A": ((1.0, 3 / 4), (2.0, 1.0)), "B": ((1.0, 2 / 4), (2.0, 3 / 4))}
    exact_to = all(c.points == hand_to[c.label] for c in with_to)
    solve_rate_b = sum(not row["B"].censored for row in table.values()) / len(table)
    plateau = with_to[1].final_fraction == solve_rate_b

    first = render_svg(with_to, "performance profile", "ratio to best", log_x=True)
    second = render_svg(performance_profiles(_fixture_table(), include_timeouts=True)[0],
                        "performance profile", "ratio to best", log_x=True)
    golden = (DATA / "golden_profile.svg").read_text(encoding="utf-8")
    svg_ok = first == second == golden
    verdict(9, "hand CDFs exact, timeout plateau = solve rate, golden SVG byte-exact",
            exact and exact_to and plateau and svg_ok,
            f"B plateau {with_to[1].final_fraction} vs solve rate {solve_rate_b}")


# 10 --------------------------------------------------------------------------


def _pipeline(out: Path) -> int:
    manifest = str(DATA / "e2e_manifest.json")
    steps = [
        ["simulate"],
        ["analyze", "--measures", "wall_time,time_to_optimality,pdi,final_gap,nodes"],
        ["profile", "--kind", "performance"],
        ["profile", "--kind", "speedup", "--basis", "wall"],
        ["profile", "--kind", "speedup", "--basis", "pdi"],
        ["report"],
    ]
    for step in steps:
        code = main(["--manifest", manifest, "--out", str(out), *step])
        if code:
            return code
    return 0


def test_criterion_10_end_to_end_determinism(tmp_path, monkeypatch):
    monkeypatch.setenv("BNB_ASSESS_NO_COLOR", "1")
    start = time.perf_counter()
    codes = (_pipeline(tmp_path / "a"), _pipeline(tmp_path / "b"))
    elapsed = time.perf_counter() - start
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    others = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*") if p.is_file())
    _, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", [str(f) for f in files], shallow=False)
    expected = {
        Path("measures.csv"), Path("report.txt"), Path("profile_performance_time_to_optimality.svg"),
        Path("profile_speedup_wall.svg"), Path("profile_speedup_pdi.svg"),
    }
    ok = codes == (0, 0) and files == others and not mismatch and not errors and expected <= set(files) and elapsed < 120
    verdict(10, "manifest pipeline reproduces byte-identical outputs", ok,
            f"{len(files)} files, {len(mismatch)} differ, {elapsed:.1f}s")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
