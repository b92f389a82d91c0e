"""Experiment manifests: one JSON file describing a whole benchmark computation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .sim import KnapsackInstance, SimConfig, generate_instance, load_instance


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentManifest:
    """A declarative run plan.

    ``instances`` entries are ``{"file": path}`` or
    ``{"generate": {"family": ..., "n_items": ..., "seed": ...}}``.
    ``solver_configs`` entries are SimConfig fields, or ``{"traces": dir}``
    for traces produced elsewhere.  Relative paths resolve against the
    manifest's own directory.
    """

    instances: tuple[dict, ...]
    solver_configs: tuple[dict, ...]
    core_counts: tuple[int, ...]
    seeds: tuple[int, ...]
    time_limit: float
    output_dir: Path
    base_dir: Path = field(default=Path("."))

    def __post_init__(self) -> None:
        if not self.instances:
            raise ManifestError("manifest lists no instances")
        if not self.solver_configs:
            raise ManifestError("manifest lists no solver configs")
        if not self.core_counts or any(c < 1 for c in self.core_counts):
            raise ManifestError("core_counts must be a non-empty list of positive integers")
        if list(self.core_counts) != sorted(set(self.core_counts)):
            raise ManifestError("core_counts must be strictly ascending")
        if not self.seeds:
            raise ManifestError("manifest lists no seeds")
        if self.time_limit <= 0:
            raise ManifestError("time_limit must be positive")

    def resolve(self, p: str | Path) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    def load_instances(self) -> list[KnapsackInstance]:
        out = []
        for entry in self.instances:
            if "file" in entry:
                out.append(load_instance(self.resolve(entry["file"])))
            elif "generate" in entry:
                g = entry["generate"]
                try:
                    out.append(generate_instance(g["family"], int(g["n_items"]), int(g.get("seed", 0))))
                except KeyError as exc:
                    raise ManifestError(f"generator entry missing {exc}") from None
            else:
                raise ManifestError(f"instance entry needs 'file' or 'generate': {entry!r}")
        ids = [inst.id for inst in out]
        if len(set(ids)) != len(ids):
            raise ManifestError("duplicate instance ids")
        return out

    def sim_configs(self) -> list[SimConfig]:
        out = []
        for entry in self.solver_configs:
            if "traces" in entry:
                continue
            try:
                cfg = SimConfig.from_dict(entry)
            except (TypeError, ValueError) as exc:
                raise ManifestError(f"bad solver config {entry!r}: {exc}") from None
            out.append(replace(cfg, time_limit=self.time_limit))
        names = [c.name for c in out]
        if len(set(names)) != len(names):
            raise ManifestError("solver config names must be unique")
        return out

    def trace_dirs(self) -> list[Path]:
        return [self.resolve(entry["traces"]) for entry in self.solver_configs if "traces" in entry]

    @property
    def baseline_cores(self) -> int:
        return self.core_counts[0]


def load_manifest(path: str | Path) -> ExperimentManifest:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from None
    try:
        return ExperimentManifest(
            instances=tuple(raw["instances"]),
            solver_configs=tuple(raw["solver_configs"]),
            core_counts=tuple(int(c) for c in raw["core_counts"]),
            seeds=tuple(int(s) for s in raw["seeds"]),
            time_limit=float(raw["time_limit"]),
            output_dir=Path(raw.get("output_dir", "out")),
            base_dir=path.parent,
        )
    except KeyError as exc:
        raise ManifestError(f"manifest missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ManifestError):
            raise
        raise ManifestError(f"malformed manifest: {exc}") from None
