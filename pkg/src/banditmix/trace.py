"""Run traces: JSON-lines persistence, summaries, and plot-data export.

A trace file starts with a single header object naming the schema version,
the arm order, the seed, and the config hash; every following line is one
per-step record.  Floats are written with Python's shortest round-trip
representation, so reading a trace back reproduces the arrays bit for bit.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .registry import ArmRegistry

__all__ = [
    "SCHEMA_VERSION",
    "TRACE_KIND",
    "EXPORT_KINDS",
    "TraceRecord",
    "TraceWriter",
    "read_trace",
    "RunSummary",
    "summarize",
    "export_plot_data",
    "save_world_checkpoint",
    "load_world_checkpoint",
]

SCHEMA_VERSION = 1
TRACE_KIND = "banditmix-trace"

EXPORT_KINDS = ("proportions_over_time", "instance_coverage", "q_over_time")


@dataclass(frozen=True)
class TraceRecord:
    """One training step: the distribution sampled from, estimates, counts.

    ``probabilities`` is the distribution in effect when the step's batch was
    drawn; ``q`` and ``rewards`` reflect any reward round that ran at this
    step.  ``wall_time_ms`` is always written as 0 so traces stay
    byte-reproducible.
    """

    step: int
    probabilities: tuple[float, ...]
    q: tuple[float, ...]
    learning_rate: float
    cumulative_counts: tuple[int, ...]
    rewards: tuple[float, ...] | None = None
    wall_time_ms: int = 0

    def to_json_obj(self) -> dict:
        obj = {
            "step": self.step,
            "probabilities": list(self.probabilities),
            "q": list(self.q),
            "learning_rate": self.learning_rate,
            "cumulative_counts": list(self.cumulative_counts),
            "wall_time_ms": self.wall_time_ms,
        }
        if self.rewards is not None:
            obj["rewards"] = list(self.rewards)
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "TraceRecord":
        rewards = obj.get("rewards")
        return cls(
            step=int(obj["step"]),
            probabilities=tuple(obj["probabilities"]),
            q=tuple(obj["q"]),
            learning_rate=float(obj["learning_rate"]),
            cumulative_counts=tuple(int(c) for c in obj["cumulative_counts"]),
            rewards=None if rewards is None else tuple(rewards),
            wall_time_ms=int(obj.get("wall_time_ms", 0)),
        )


class TraceWriter:
    """Streams records to a JSONL file, header first, flushing per record."""

    def __init__(self, path: str | Path, arm_names: tuple[str, ...], seed: int, config_hash: str):
        self.path = Path(path)
        self.arm_names = tuple(arm_names)
        self._fh: io.TextIOBase | None = None
        self._last_step = -1
        self._header = {
            "schema_version": SCHEMA_VERSION,
            "kind": TRACE_KIND,
            "arm_names": list(self.arm_names),
            "seed": int(seed),
            "config_hash": config_hash,
        }

    def __enter__(self) -> "TraceWriter":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", encoding="utf-8", newline="\n")
        self._fh.write(json.dumps(self._header) + "\n")
        self._fh.flush()
        return self

    def write(self, record: TraceRecord) -> None:
        if self._fh is None:
            raise ValueError("writer is not open")
        if record.step <= self._last_step:
            raise ValueError(
                f"records must have strictly increasing steps; "
                f"got {record.step} after {self._last_step}"
            )
        k = len(self.arm_names)
        for name in ("probabilities", "q", "cumulative_counts"):
            if len(getattr(record, name)) != k:
                raise ValueError(f"record {name} must have {k} entries")
        self._fh.write(json.dumps(record.to_json_obj()) + "\n")
        self._fh.flush()
        self._last_step = record.step

    def __exit__(self, *exc_info) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def read_trace(path: str | Path) -> tuple[dict, list[TraceRecord]]:
    """Read a trace file back as ``(header, records)``."""
    with Path(path).open("r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line:
            raise ValueError(f"{path}: empty trace file")
        header = json.loads(header_line)
        if header.get("kind") != TRACE_KIND:
            raise ValueError(f"{path}: not a trace file (kind={header.get('kind')!r})")
        if header.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(
                f"{path}: unsupported schema version {header.get('schema_version')!r}"
            )
        records = [TraceRecord.from_json_obj(json.loads(line)) for line in fh if line.strip()]
    last = -1
    for r in records:
        if r.step <= last:
            raise ValueError(f"{path}: record steps must be strictly increasing")
        last = r.step
    return header, records


@dataclass(frozen=True)
class RunSummary:
    """End-of-run aggregates derived from the trace."""

    seed: int
    config_hash: str
    steps: int
    final_losses: tuple[float, ...] | None
    coverage_ratio: tuple[float, ...]
    mean_step_tv: float

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "config_hash": self.config_hash,
            "steps": self.steps,
            "final_losses": None if self.final_losses is None else list(self.final_losses),
            "coverage_ratio": list(self.coverage_ratio),
            "mean_step_tv": self.mean_step_tv,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RunSummary":
        fl = obj["final_losses"]
        return cls(
            seed=int(obj["seed"]),
            config_hash=obj["config_hash"],
            steps=int(obj["steps"]),
            final_losses=None if fl is None else tuple(fl),
            coverage_ratio=tuple(obj["coverage_ratio"]),
            mean_step_tv=float(obj["mean_step_tv"]),
        )


def summarize(
    records: list[TraceRecord],
    registry: ArmRegistry,
    *,
    seed: int,
    config_hash: str,
    final_losses: tuple[float, ...] | None = None,
) -> RunSummary:
    """Aggregate a trace into a summary.

    ``coverage_ratio[k]`` is draws of arm ``k`` divided by its instance
    count: how many passes over that source the run amounted to.  The
    schedule-churn measure is the mean total-variation distance between
    consecutive steps' distributions.
    """
    if not records:
        raise ValueError("cannot summarize an empty trace")
    counts = np.asarray(records[-1].cumulative_counts, dtype=np.float64)
    coverage = counts / registry.counts.astype(np.float64)
    if len(records) >= 2:
        probs = np.asarray([r.probabilities for r in records], dtype=np.float64)
        tv = 0.5 * np.sum(np.abs(np.diff(probs, axis=0)), axis=1)
        mean_tv = float(np.mean(tv))
    else:
        mean_tv = 0.0
    return RunSummary(
        seed=seed,
        config_hash=config_hash,
        steps=len(records),
        final_losses=final_losses,
        coverage_ratio=tuple(coverage.tolist()),
        mean_step_tv=mean_tv,
    )


def export_plot_data(records: list[TraceRecord], kind: str, arm_names: tuple[str, ...]) -> str:
    """Render one trace series as CSV: a step column plus one column per arm."""
    if kind not in EXPORT_KINDS:
        raise ValueError(f"unknown export kind {kind!r}; choose from {EXPORT_KINDS}")
    field = {
        "proportions_over_time": "probabilities",
        "instance_coverage": "cumulative_counts",
        "q_over_time": "q",
    }[kind]
    lines = ["step," + ",".join(arm_names)]
    for r in records:
        values = getattr(r, field)
        if len(values) != len(arm_names):
            raise ValueError(f"record at step {r.step} has {len(values)} arms, expected {len(arm_names)}")
        lines.append(f"{r.step}," + ",".join(repr(v) if isinstance(v, float) else str(v) for v in values))
    return "\n".join(lines) + "\n"


def save_world_checkpoint(path: str | Path, state: dict) -> None:
    """Persist a world ``state_dict`` as JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(state, indent=2) + "\n", encoding="utf-8")


def load_world_checkpoint(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
