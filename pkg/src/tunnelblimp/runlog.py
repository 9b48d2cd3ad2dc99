"""Run records: the timestamped log every metric is computed from, with
append-friendly newline-delimited persistence (one JSON object per line,
human-inspectable and crash-tolerant)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class RunRecord:
    """Everything observed during one simulated run.

    Entry lists hold plain dicts so the on-disk form and the in-memory form
    stay field-identical. run_id is derived from (scenario, seed) only, so a
    rerun of the same pair reproduces the same record bit for bit.
    """

    run_id: str
    scenario: str
    seed: int
    config: dict = field(default_factory=dict)
    map: dict = field(default_factory=dict)
    status: str = "running"
    started_at: float = 0.0
    ended_at: float | None = None
    poses: list[dict] = field(default_factory=list)
    navs: list[dict] = field(default_factory=list)
    frames: list[dict] = field(default_factory=list)
    commands: list[dict] = field(default_factory=list)
    link_events: list[dict] = field(default_factory=list)
    detections: list[dict] = field(default_factory=list)
    reports: list[dict] = field(default_factory=list)
    corner_events: list[dict] = field(default_factory=list)
    metrics: dict | None = None

    _ENTRY_KINDS = ("poses", "navs", "frames", "commands", "link_events",
                    "detections", "reports", "corner_events")

    def summary(self) -> dict:
        return {
            "run_id": self.run_id, "scenario": self.scenario, "seed": self.seed,
            "status": self.status, "duration": (self.ended_at or 0.0) - self.started_at,
            "poses": len(self.poses), "frames": len(self.frames),
            "commands": len(self.commands), "reports": len(self.reports),
            "metrics": self.metrics,
        }


def run_id_for(scenario: str, seed: int) -> str:
    return f"{scenario}-s{seed}"


def save_run(record: RunRecord, runs_dir) -> Path:
    """Write one .jsonl file per run: a header line, then type-tagged entry
    lines in log order, then a footer with end status and metrics."""
    runs_dir = Path(runs_dir)
    runs_dir.mkdir(parents=True, exist_ok=True)
    path = runs_dir / f"{record.run_id}.jsonl"
    with open(path, "w") as f:
        header = {"type": "run", "run_id": record.run_id, "scenario": record.scenario,
                  "seed": record.seed, "config": record.config, "map": record.map,
                  "started_at": record.started_at}
        f.write(json.dumps(header) + "\n")
        for kind in RunRecord._ENTRY_KINDS:
            for entry in getattr(record, kind):
                f.write(json.dumps({"type": kind, **entry}) + "\n")
        footer = {"type": "end", "status": record.status, "ended_at": record.ended_at,
                  "metrics": record.metrics}
        f.write(json.dumps(footer) + "\n")
    return path


def load_run(path) -> RunRecord:
    path = Path(path)
    record = None
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            kind = doc.pop("type")
            if kind == "run":
                record = RunRecord(run_id=doc["run_id"], scenario=doc["scenario"],
                                   seed=doc["seed"], config=doc["config"],
                                   map=doc["map"], started_at=doc["started_at"])
            elif kind == "end":
                record.status = doc["status"]
                record.ended_at = doc["ended_at"]
                record.metrics = doc["metrics"]
            else:
                getattr(record, kind).append(doc)
    if record is None:
        raise ValueError(f"{path} holds no run header")
    return record


def find_run(run_id: str, runs_dir) -> RunRecord:
    path = Path(runs_dir) / f"{run_id}.jsonl"
    if not path.exists():
        raise FileNotFoundError(f"no run {run_id!r} under {runs_dir}")
    return load_run(path)


def list_runs(runs_dir) -> list[str]:
    d = Path(runs_dir)
    if not d.exists():
        return []
    return sorted(p.stem for p in d.glob("*.jsonl"))
