"""CSV exchange between pipeline stages."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

from .measures import MeasureValue

MEASURE_COLUMNS = ("instance", "solver", "cores", "seed", "measure", "value", "unit", "censored")


@dataclass(frozen=True)
class MeasureRow:
    instance: str
    solver: str
    cores: int
    seed: int
    measure: MeasureValue


def fmt(x: float) -> str:
    return repr(float(x))


def write_measures_csv(rows: Iterable[MeasureRow], path: str | Path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MEASURE_COLUMNS)
    for r in rows:
        m = r.measure
        w.writerow([r.instance, r.solver, r.cores, r.seed, m.name, fmt(m.value), m.unit, int(m.censored)])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_measures_csv(path: str | Path) -> list[MeasureRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != MEASURE_COLUMNS:
            raise ValueError(f"{path}: not a measures CSV (header {reader.fieldnames})")
        rows = []
        for rec in reader:
            m = MeasureValue(rec["measure"], float(rec["value"]), rec["unit"], rec["censored"] in ("1", "true", "True"))
            rows.append(MeasureRow(rec["instance"], rec["solver"], int(rec["cores"]), int(rec["seed"]), m))
    return rows


def collapse_seeds(rows: Sequence[MeasureRow], measure: str) -> dict[tuple[str, str, int], MeasureValue]:
    """One value per (instance, solver, cores): the mean over seeds.

    The collapsed value counts as censored if any seed was censored.
    """
    groups: dict[tuple[str, str, int], list[MeasureValue]] = defaultdict(list)
    for r in rows:
        if r.measure.name == measure:
            groups[(r.instance, r.solver, r.cores)].append(r.measure)
    out = {}
    for key in sorted(groups):
        ms = groups[key]
        out[key] = MeasureValue(measure, sum(m.value for m in ms) / len(ms), ms[0].unit, any(m.censored for m in ms))
    return out


def write_rows_csv(header: Sequence[str], rows: Iterable[Sequence[object]], path: str | Path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def format_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> list[str]:
    """Right-aligned plain-text columns (first column left-aligned)."""
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]

    def line(cells: Sequence[object]) -> str:
        parts = [str(c).ljust(w) if i == 0 else str(c).rjust(w) for i, (c, w) in enumerate(zip(cells, widths))]
        return "  ".join(parts).rstrip()

    return [line(header), "  ".join("-" * w for w in widths), *(line(r) for r in rows)]
