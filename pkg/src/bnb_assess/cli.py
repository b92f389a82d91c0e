"""``bnb-assess`` command line: simulate, analyze, profile, report.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import os
import shutil
import sys
from collections import defaultdict
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import __version__
from .aggregate import (
    AggregationPolicy,
    aggregate,
    default_shift,
    max_contribution,
    per_instance_scalability,
    shifted_geometric_mean,
)
from .manifest import ExperimentManifest, ManifestError, load_manifest
from .measures import MEASURE_NAMES, MeasureValue, measure_registry
from .profiles import (
    ProfileCurve,
    combined_time_gap_profile,
    cumulative_profile,
    performance_profiles,
    speedup_curve,
)
from .sim import KnapsackInstance, SimConfig, simulate_parallel
from .svg import render_combined_svg, render_speedup_svg, render_svg
from .tables import (
    MeasureRow,
    collapse_seeds,
    format_table,
    read_measures_csv,
    write_measures_csv,
    write_rows_csv,
)
from .trace_model import TraceFormatError, dumps_trace, read_trace, validate_trace

log = logging.getLogger("bnb_assess")

DEFAULT_MEASURES = ("wall_time", "time_to_optimality", "time_to_first_solution", "pdi", "final_gap", "nodes")
PROFILE_KINDS = ("performance", "cumulative", "combined", "speedup")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def trace_filename(instance: str, solver: str, cores: int, seed: int) -> str:
    return f"{instance}__{solver}__c{cores}__s{seed}.bbt"


# ---------------------------------------------------------------------------
# simulate


def _run_one(job: tuple[KnapsackInstance, SimConfig]) -> str:
    instance, config = job
    return dumps_trace(simulate_parallel(instance, config).trace)


def cmd_simulate(
    manifest: ExperimentManifest,
    out_dir: Path,
    seed_override: int | None = None,
    jobs: int = 1,
) -> list[Path]:
    """Write one trace per instance x config x core count x seed."""
    instances = manifest.load_instances()
    configs = manifest.sim_configs()
    seeds = [seed_override] if seed_override is not None else list(manifest.seeds)
    trace_dir = out_dir / "traces"
    try:
        trace_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create {trace_dir}: {exc}") from None

    plan = []
    for inst in instances:
        for cfg in configs:
            for n in manifest.core_counts:
                for seed in seeds:
                    plan.append((inst, replace(cfg, cores=n, seed=seed)))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            texts = list(pool.map(_run_one, plan, chunksize=4))
    else:
        texts = [_run_one(job) for job in plan]

    written = []
    for (inst, cfg), text in zip(plan, texts):
        path = trace_dir / trace_filename(inst.id, cfg.name, cfg.cores, cfg.seed)
        path.write_text(text, encoding="utf-8")
        written.append(path)
    for src_dir in manifest.trace_dirs():
        for src in sorted(src_dir.glob("*.bbt")):
            dst = trace_dir / src.name
            shutil.copyfile(src, dst)
            written.append(dst)
    return written


# ---------------------------------------------------------------------------
# analyze


def cmd_analyze(
    trace_dir: Path,
    measures: Sequence[str] = DEFAULT_MEASURES,
    rel_tol: float = 1e-6,
    abs_tol: float = 1e-9,
    gap_target: float = 0.01,
    horizon: float | None = None,
) -> tuple[list[MeasureRow], list[str]]:
    """Evaluate ``measures`` on every ``.bbt`` file; malformed files become warnings."""
    registry = measure_registry(rel_tol, abs_tol, gap_target, horizon)
    unknown = [m for m in measures if m not in registry]
    if unknown:
        raise UsageError(f"unknown measures {unknown}; choose from {', '.join(MEASURE_NAMES)}")
    if not trace_dir.is_dir():
        raise DataError(f"{trace_dir} is not a directory")

    rows: list[MeasureRow] = []
    warnings: list[str] = []
    for path in sorted(trace_dir.glob("*.bbt")):
        try:
            trace = read_trace(path)
        except (TraceFormatError, OSError, UnicodeDecodeError) as exc:
            warnings.append(f"{path.name}: unreadable trace ({exc})")
            continue
        problems = validate_trace(trace)
        if problems:
            warnings.append(f"{path.name}: invalid trace ({problems[0].code}: {problems[0].message})")
            continue
        run = trace.run
        for name in measures:
            try:
                value = registry[name](trace)
            except (LookupError, ValueError) as exc:
                warnings.append(f"{path.name}: {name} not available ({exc})")
                continue
            rows.append(MeasureRow(run.instance_id, run.solver_id, run.cores, run.seed, value))
    return rows, warnings


# ---------------------------------------------------------------------------
# profile


def _entities(rows: Sequence[MeasureRow], measure: str, compare: str, cores: int | None, solver: str | None):
    """Measure table instance -> label -> value for the chosen comparison axis."""
    collapsed = collapse_seeds(rows, measure)
    if not collapsed:
        raise DataError(f"no rows for measure {measure!r}")
    core_set = sorted({k[2] for k in collapsed})
    solver_set = sorted({k[1] for k in collapsed})
    table: dict[str, dict[str, MeasureValue]] = defaultdict(dict)
    for (inst, sol, n), m in collapsed.items():
        if compare == "cores":
            if solver is None and len(solver_set) > 1:
                raise UsageError("several solvers present; pick one with --solver when comparing core counts")
            if solver is not None and sol != solver:
                continue
            table[inst][f"N={n}"] = m
        else:
            if cores is not None and n != cores:
                continue
            if solver is not None and sol != solver:
                continue
            label = sol if (cores is not None or len(core_set) == 1) else f"{sol}@{n}"
            table[inst][label] = m
    if not table:
        raise DataError("no data left after filtering")
    labels = sorted({lab for row in table.values() for lab in row}, key=_label_key)
    return dict(table), labels


def _label_key(label: str):
    if label.startswith("N="):
        return (0, int(label[2:]), label)
    return (1, 0, label)


def cmd_profile(
    csv_path: Path,
    kind: str,
    out_dir: Path,
    measure: str | None = None,
    basis: str = "wall",
    include_timeouts: bool = False,
    ratio_shift: float = 0.0,
    log_x: bool | None = None,
    compare: str = "solver",
    cores: int | None = None,
    solver: str | None = None,
    baseline: int = 1,
    shift: float | None = None,
) -> tuple[Path, Path]:
    """Build one kind of profile from a measures CSV and write its CSV and SVG."""
    if kind not in PROFILE_KINDS:
        raise UsageError(f"unknown profile kind {kind!r}")
    try:
        rows = read_measures_csv(csv_path)
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"cannot read measures CSV: {exc}") from None
    out_dir.mkdir(parents=True, exist_ok=True)

    if kind == "speedup":
        return _speedup_profile(rows, out_dir, basis, measure, baseline, solver, shift)

    measure = measure or "time_to_optimality"
    stem = out_dir / f"profile_{kind}_{measure}" if compare == "solver" else out_dir / f"profile_{kind}_{measure}_by_cores"
    table, labels = _entities(rows, measure, compare, cores, solver)

    if kind == "performance":
        curves, ratios = performance_profiles(table, include_timeouts, ratio_shift, labels)
        if ratios.dropped:
            log.warning("performance profile: %d instance(s) dropped (%s)", len(ratios.dropped),
                        "unsolved by every solver" if include_timeouts else "timed out for some solver")
        if not ratios.ratios:
            raise DataError("no instance left for the performance profile")
        _write_curves(stem, curves)
        svg = render_svg(curves, f"performance profile: {measure}", "ratio to best",
                         log_x=True if log_x is None else log_x)
    elif kind == "cumulative":
        curves = [cumulative_profile([table[p][lab] for p in sorted(table) if lab in table[p]], lab) for lab in labels]
        _write_curves(stem, curves)
        svg = render_svg(curves, f"cumulative profile: {measure}", _unit_label(measure, rows), log_x=bool(log_x))
    else:
        gaps, _ = _entities(rows, "final_gap", compare, cores, solver)
        time_curves, gap_curves = [], []
        for lab in labels:
            runs = [(table[p][lab], gaps[p][lab].value) for p in sorted(table) if lab in table[p] and lab in gaps.get(p, {})]
            t, g = combined_time_gap_profile(runs, lab)
            time_curves.append(t)
            gap_curves.append(g)
        write_rows_csv(
            ("panel", "label", "x", "fraction"),
            [("time", c.label, x, f) for c in time_curves for x, f in c.points]
            + [("gap", c.label, x, f) for c in gap_curves for x, f in c.points],
            stem.with_suffix(".csv"),
        )
        svg = render_combined_svg(time_curves, gap_curves, f"solved: {measure} / unsolved: final gap")
    stem.with_suffix(".svg").write_text(svg, encoding="utf-8")
    return stem.with_suffix(".csv"), stem.with_suffix(".svg")


def _unit_label(measure: str, rows: Sequence[MeasureRow]) -> str:
    units = {r.measure.unit for r in rows if r.measure.name == measure}
    return f"{measure} ({units.pop()})" if len(units) == 1 else measure


def _write_curves(stem: Path, curves: Sequence[ProfileCurve]) -> None:
    write_rows_csv(("label", "x", "fraction"), [(c.label, x, f) for c in curves for x, f in c.points],
                   stem.with_suffix(".csv"))


def _speedup_profile(rows, out_dir, basis, measure, baseline, solver, shift):
    if basis not in ("wall", "pdi"):
        raise UsageError(f"unknown speed-up basis {basis!r}")
    measure = measure or ("time_to_optimality" if basis == "wall" else "pdi")
    collapsed = collapse_seeds(rows, measure)
    if not collapsed:
        raise DataError(f"no rows for measure {measure!r}")
    by_solver: dict[str, dict[str, dict[int, MeasureValue]]] = defaultdict(lambda: defaultdict(dict))
    for (inst, sol, n), m in collapsed.items():
        if solver is None or sol == solver:
            by_solver[sol][inst][n] = m

    curves = []
    for sol in sorted(by_solver):
        per_inst = by_solver[sol]
        if basis == "wall":
            # wall-clock speed-up only over instances every core count finished
            per_inst = {p: d for p, d in per_inst.items() if not any(m.censored for m in d.values())}
        core_counts = sorted({n for d in per_inst.values() for n in d})
        if baseline not in core_counts:
            raise DataError(f"solver {sol!r}: no runs at baseline core count {baseline}")
        complete = {p: d for p, d in per_inst.items() if all(n in d for n in core_counts)}
        if not complete:
            raise DataError(f"solver {sol!r}: no instance has runs at every core count")
        s = default_shift(next(iter(next(iter(complete.values())).values())).unit) if shift is None else shift
        agg = {n: shifted_geometric_mean([complete[p][n].value for p in sorted(complete)], s) for n in core_counts}
        curves.append(speedup_curve(agg, baseline, sol))

    stem = out_dir / f"profile_speedup_{basis}"
    write_rows_csv(
        ("label", "cores", "speedup"),
        [(c.label, n, v) for c in curves for n, v in ((c.baseline_cores, 1.0), *c.points)]
        + [("ideal", n, v) for n, v in sorted({p for c in curves for p in ((c.baseline_cores, 1.0), *c.ideal)})],
        stem.with_suffix(".csv"),
    )
    title = "speed-up (wall clock)" if basis == "wall" else "speed-up (primal-dual integral)"
    stem.with_suffix(".svg").write_text(render_speedup_svg(curves, title), encoding="utf-8")
    return stem.with_suffix(".csv"), stem.with_suffix(".svg")


# ---------------------------------------------------------------------------
# report


def _color() -> bool:
    return sys.stdout.isatty() and not os.environ.get("BNB_ASSESS_NO_COLOR")


def _num(x: float, digits: int = 3) -> str:
    if x != x:  # NaN
        return "-"
    return f"{x:.{digits}f}"


def cmd_report(rows: Sequence[MeasureRow], manifest: ExperimentManifest | None = None) -> list[str]:
    """Plain-text summary: means per solver and core count, scalability, seed spread."""
    lines: list[str] = []
    if manifest is not None:
        lines.append(
            f"cores {list(manifest.core_counts)}  seeds {list(manifest.seeds)}  time limit {manifest.time_limit:g}s"
        )
        lines.append("")
    baseline = manifest.baseline_cores if manifest is not None else None

    groups: dict[tuple[str, int], dict[str, list[MeasureValue]]] = defaultdict(lambda: defaultdict(list))
    for r in rows:
        groups[(r.solver, r.cores)][r.measure.name].append(r.measure)

    header = ("solver", "cores", "runs", "unsolved", "sgm time", "sgm nodes", "sgm pdi", "max share")
    table = []
    for solver, cores in sorted(groups):
        g = groups[(solver, cores)]
        times = g.get("time_to_optimality", [])
        runs = len(times) or max((len(v) for v in g.values()), default=0)
        cells = [solver, str(cores), str(runs)]
        if times:
            res = aggregate(times, AggregationPolicy("shifted_geometric", 10.0, "exclude_and_count"))
            cells += [str(res.n_censored), _num(res.summary)]
        else:
            cells += ["-", "-"]
        for name, s in (("nodes", 100.0), ("pdi", 10.0)):
            ms = g.get(name, [])
            cells.append(_num(aggregate(ms, AggregationPolicy("shifted_geometric", s, "censor_at_limit")).summary, 1 if name == "nodes" else 3) if ms else "-")
        solved = [m.value for m in times if not m.censored]
        cells.append(_num(max_contribution(solved)) if solved else "-")
        table.append(cells)
    lines.append("Shifted geometric means (time shift 10 s, node shift 100; unsolved runs excluded from time)")
    lines += format_table(header, table)

    collapsed = collapse_seeds(rows, "time_to_optimality")
    if collapsed:
        lines += ["", "Per-instance scalability (time to optimality, mean over seeds)"]
        body, notes = [], []
        for solver in sorted({k[1] for k in collapsed}):
            per: dict[str, dict[int, MeasureValue]] = defaultdict(dict)
            for (inst, sol, n), m in collapsed.items():
                if sol == solver:
                    per[inst][n] = m
            srows, issues = per_instance_scalability(per, baseline)
            body += [[solver, r.instance, str(r.cores), _num(r.speedup), _num(r.efficiency)] for r in srows]
            for issue in issues:
                where = f" at {issue.cores} cores" if issue.cores is not None else ""
                notes.append(f"  excluded {solver}/{issue.instance}{where}: {issue.reason}")
        if body:
            lines += format_table(("solver", "instance", "cores", "speed-up", "efficiency"), body)
        lines += notes

    spread_rows = []
    nodes: dict[tuple[str, str, int], list[float]] = defaultdict(list)
    for r in rows:
        if r.measure.name == "nodes":
            nodes[(r.instance, r.solver, r.cores)].append(r.measure.value)
    for (inst, sol, n), counts in sorted(nodes.items(), key=lambda kv: (kv[0][1], kv[0][0], kv[0][2])):
        if len(counts) < 2:
            continue
        mean = sum(counts) / len(counts)
        spread = (max(counts) - min(counts)) / mean if mean else 0.0
        spread_rows.append([sol, inst, str(n), str(len(counts)), str(len(set(counts))),
                            f"{min(counts):.0f}", f"{max(counts):.0f}", _num(spread)])
    if spread_rows:
        lines += ["", "Seed variability of node counts"]
        lines += format_table(("solver", "instance", "cores", "seeds", "distinct", "min", "max", "rel spread"), spread_rows)
    return lines


# ---------------------------------------------------------------------------
# argument handling


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_globals(p: argparse.ArgumentParser, top: bool) -> None:
    d = None if top else argparse.SUPPRESS
    p.add_argument("--manifest", type=Path, default=d, help="experiment manifest (JSON)")
    p.add_argument("--out", type=Path, default=d, help="output directory")
    p.add_argument("--seed-override", type=int, default=d, metavar="K", help="run only seed K")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bnb-assess", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    _add_globals(parser, True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run the manifest's simulations and write .bbt traces")
    _add_globals(p, False)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("analyze", help="compute measures for a directory of traces")
    _add_globals(p, False)
    p.add_argument("trace_dir", type=Path, nargs="?")
    p.add_argument("--measures", default=",".join(DEFAULT_MEASURES),
                   help=f"comma-separated subset of: {', '.join(MEASURE_NAMES)}")
    p.add_argument("--rel-tol", type=float, default=1e-6)
    p.add_argument("--abs-tol", type=float, default=1e-9)
    p.add_argument("--gap-target", type=float, default=0.01)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--csv", type=Path, default=None, help="output file (default <out>/measures.csv)")

    p = sub.add_parser("profile", help="build a profile (CSV + SVG) from a measures CSV")
    _add_globals(p, False)
    p.add_argument("csv", type=Path, nargs="?")
    p.add_argument("--kind", choices=PROFILE_KINDS, required=True)
    p.add_argument("--measure", default=None)
    p.add_argument("--basis", choices=("wall", "pdi"), default="wall", help="speed-up basis")
    p.add_argument("--include-timeouts", action="store_true")
    p.add_argument("--ratio-shift", type=float, default=0.0)
    p.add_argument("--log-x", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--compare", choices=("solver", "cores"), default="solver")
    p.add_argument("--cores", type=int, default=None)
    p.add_argument("--solver", default=None)
    p.add_argument("--baseline", type=int, default=1)
    p.add_argument("--shift", type=float, default=None, help="shift for the speed-up summary mean")

    p = sub.add_parser("report", help="plain-text summary tables")
    _add_globals(p, False)
    p.add_argument("csv", type=Path, nargs="?")
    return parser


def _default_out(args, manifest: ExperimentManifest | None) -> Path:
    if args.out is not None:
        return args.out
    if manifest is not None:
        return manifest.resolve(manifest.output_dir)
    return Path("out")


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version, usage errors
        return int(exc.code or 0)
    try:
        manifest = load_manifest(args.manifest) if args.manifest is not None else None
        out = _default_out(args, manifest)

        if args.command == "simulate":
            if manifest is None:
                raise UsageError("simulate needs --manifest")
            paths = cmd_simulate(manifest, out, args.seed_override, args.jobs)
            print(f"wrote {len(paths)} traces to {out / 'traces'}")

        elif args.command == "analyze":
            trace_dir = args.trace_dir or out / "traces"
            measures = [m.strip() for m in args.measures.split(",") if m.strip()]
            rows, warnings = cmd_analyze(trace_dir, measures, args.rel_tol, args.abs_tol, args.gap_target, args.horizon)
            for w in warnings:
                log.warning("%s", w)
            dest = args.csv or out / "measures.csv"
            dest.parent.mkdir(parents=True, exist_ok=True)
            write_measures_csv(rows, dest)
            print(f"wrote {len(rows)} rows to {dest}")

        elif args.command == "profile":
            csv_path = args.csv or out / "measures.csv"
            paths = cmd_profile(
                csv_path, args.kind, out, args.measure, args.basis, args.include_timeouts, args.ratio_shift,
                args.log_x, args.compare, args.cores, args.solver, args.baseline, args.shift,
            )
            print("wrote " + " and ".join(str(p) for p in paths))

        elif args.command == "report":
            csv_path = args.csv or out / "measures.csv"
            try:
                rows = read_measures_csv(csv_path)
            except (OSError, ValueError, KeyError) as exc:
                raise DataError(f"cannot read measures CSV: {exc}") from None
            lines = cmd_report(rows, manifest)
            out.mkdir(parents=True, exist_ok=True)
            (out / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
            bold, reset = ("\033[1m", "\033[0m") if _color() else ("", "")
            for line in lines:
                is_title = bool(line) and not line.startswith(" ") and line[0].isupper()
                print(f"{bold}{line}{reset}" if is_title else line)
    except UsageError as exc:
        print(f"bnb-assess: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ManifestError, TraceFormatError, ValueError, OSError) as exc:
        print(f"bnb-assess: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
