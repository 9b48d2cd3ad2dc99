"""Operator-side service: receives telemetry frames, persists runs, accepts
recovery commands with bounded retransmission, and records artifact
reports with class-scoped duplicate suppression."""

from __future__ import annotations

import math
import threading
from dataclasses import asdict, dataclass

from .runlog import RunRecord, run_id_for, save_run
from .telemetry import (Command, LinkState, LossyLink, SituationalFrame,
                        deserialize_frame, serialize_command)
from .world import ARTIFACT_CLASSES

DUPLICATE_REPORT_RADIUS_M = 5.0  # matches the scoring-style report tolerance
MAX_RETRANSMITS = 3
ACK_TIMEOUT_S = 1.5


@dataclass(frozen=True)
class ArtifactReport:
    cls: str
    position: tuple[float, float, float]
    frame_seq: int
    reported_at: float


class CommandRejected(ValueError):
    """Command failed validation; the detail names the offending field."""


class BaseStation:
    """Holds the active run, the latest-frame view, command statuses and
    artifact reports. One link-delivery writer and any number of concurrent
    readers are supported; mutations are serialized by a lock."""

    def __init__(self, runs_dir=None):
        self.runs_dir = runs_dir
        self._lock = threading.RLock()
        self.record: RunRecord | None = None
        self.latest_frame: SituationalFrame | None = None
        self.latest_received_at: float | None = None
        self._last_seq: int | None = None
        self._next_cmd_seq = 1
        self._pending: dict[int, dict] = {}  # cmd seq -> command entry (live view)
        self._finished: list[RunRecord] = []
        self.now = 0.0  # advanced by the simulation clock

    # -- run lifecycle -------------------------------------------------------
    def start_run(self, scenario: str, seed: int = 0, config: dict | None = None,
                  map_doc: dict | None = None) -> RunRecord:
        with self._lock:
            if self.record is not None and self.record.status == "running":
                raise RuntimeError(f"run {self.record.run_id} is still active")
            self.record = RunRecord(run_id=run_id_for(scenario, seed), scenario=scenario,
                                    seed=seed, config=config or {}, map=map_doc or {})
            self.latest_frame = None
            self.latest_received_at = None
            self._last_seq = None
            self._pending.clear()
            self.now = 0.0
            return self.record

    def end_run(self, status: str = "completed", ended_at: float | None = None,
                metrics: dict | None = None) -> RunRecord:
        with self._lock:
            if self.record is None:
                raise RuntimeError("no active run")
            for entry in self.record.commands:
                if entry["status"] == "queued":
                    entry["status"] = "failed"
                    entry["resolved_at"] = ended_at
            self._pending.clear()
            self.record.status = status
            self.record.ended_at = ended_at if ended_at is not None else self.now
            self.record.metrics = metrics
            if self.runs_dir is not None:
                save_run(self.record, self.runs_dir)
            self._finished.append(self.record)
            return self.record

    def require_run(self) -> RunRecord:
        if self.record is None or self.record.status != "running":
            raise RuntimeError("no active run")
        return self.record

    # -- telemetry ingest ----------------------------------------------------
    def ingest_frame(self, frame: SituationalFrame, raw: bytes, received_at: float) -> dict:
        """Append a delivered frame. Out-of-order frames are stored but
        flagged stale and do not move the latest view."""
        with self._lock:
            record = self.require_run()
            stale = self._last_seq is not None and frame.seq <= self._last_seq
            entry = {
                "seq": frame.seq, "received_at": received_at, "stale": stale,
                "altitude": frame.altitude, "mode": frame.mode,
                "nav_d": frame.nav_d, "nav_phi": frame.nav_phi,
                "points": [[p.bin_index, p.range, p.bearing] for p in frame.points],
                "raw": raw.hex(),
            }
            record.frames.append(entry)
            if not stale:
                self._last_seq = frame.seq
                self.latest_frame = frame
                self.latest_received_at = received_at
            self.now = max(self.now, received_at)
            return {"accepted": True, "stale": stale}

    def ingest_raw(self, raw: bytes, fov: float, received_at: float) -> dict:
        return self.ingest_frame(deserialize_frame(raw, fov), raw, received_at)

    def latest_state(self, now: float | None = None) -> dict:
        """Operator view: the newest delivered frame plus link staleness."""
        with self._lock:
            now = self.now if now is None else now
            run = self.record.run_id if self.record is not None else None
            if self.latest_frame is None:
                return {"run_id": run, "frame": None, "staleness": None}
            f = self.latest_frame
            return {
                "run_id": run,
                "staleness": now - self.latest_received_at,
                "frame": {
                    "seq": f.seq, "altitude": f.altitude, "mode": f.mode,
                    "nav_d": f.nav_d, "nav_phi": f.nav_phi,
                    "points": [[p.bin_index, p.range, p.bearing] for p in f.points],
                    "received_at": self.latest_received_at,
                },
            }

    # -- commands ------------------------------------------------------------
    def issue_command(self, kind: str, magnitude: float = 0.5, duration: float = 1.0,
                      issued_at: float | None = None) -> str:
        """Validate, log, and queue a supervisor command for the downlink.
        Returns the command id used to track its terminal status."""
        with self._lock:
            record = self.require_run()
            issued_at = self.now if issued_at is None else issued_at
            cmd = Command(seq=self._next_cmd_seq, kind=kind, magnitude=magnitude,
                          duration=duration)
            try:
                cmd.validate()
            except ValueError as e:
                raise CommandRejected(str(e)) from e
            self._next_cmd_seq += 1
            command_id = f"{record.run_id}-c{cmd.seq}"
            entry = {"command_id": command_id, "seq": cmd.seq, "kind": cmd.kind,
                     "magnitude": cmd.magnitude, "duration": cmd.duration,
                     "issued_at": issued_at, "status": "queued", "attempts": 0,
                     "last_attempt": None, "resolved_at": None}
            record.commands.append(entry)
            self._pending[cmd.seq] = entry
            return command_id

    def service_command_channel(self, downlink: LossyLink, link: LinkState,
                                now: float) -> None:
        """Send queued commands and retransmit unacked ones, marking failure
        after MAX_RETRANSMITS extra attempts."""
        with self._lock:
            self.now = max(self.now, now)
            for seq, entry in list(self._pending.items()):
                if entry["status"] != "queued":
                    self._pending.pop(seq, None)
                    continue
                due = (entry["attempts"] == 0
                       or now - entry["last_attempt"] >= ACK_TIMEOUT_S)
                if not due:
                    continue
                if entry["attempts"] > MAX_RETRANSMITS:
                    entry["status"] = "failed"
                    entry["resolved_at"] = now
                    self._pending.pop(seq, None)
                    continue
                cmd = Command(seq=seq, kind=entry["kind"], magnitude=entry["magnitude"],
                              duration=entry["duration"])
                downlink.send(serialize_command(cmd), link, now)
                entry["attempts"] += 1
                entry["last_attempt"] = now

    def on_ack(self, seq: int, now: float) -> None:
        with self._lock:
            entry = self._pending.pop(seq, None)
            if entry is not None and entry["status"] == "queued":
                entry["status"] = "delivered"
                entry["resolved_at"] = now

    def command_status(self, command_id: str) -> dict | None:
        with self._lock:
            for record in ([self.record] if self.record else []) + self._finished:
                for entry in record.commands:
                    if entry["command_id"] == command_id:
                        return dict(entry)
            return None

    # -- artifact reports ----------------------------------------------------
    def record_detection(self, cls: str, position, frame_seq: int = 0,
                         reported_at: float | None = None) -> ArtifactReport | None:
        """Append an artifact report unless a same-class report already
        exists within the duplicate radius."""
        with self._lock:
            record = self.require_run()
            if cls not in ARTIFACT_CLASSES:
                raise ValueError(f"unknown artifact class {cls!r}")
            reported_at = self.now if reported_at is None else reported_at
            for prior in record.reports:
                if prior["cls"] != cls:
                    continue
                dx = prior["position"][0] - position[0]
                dy = prior["position"][1] - position[1]
                dz = prior["position"][2] - position[2]
                if math.sqrt(dx * dx + dy * dy + dz * dz) <= DUPLICATE_REPORT_RADIUS_M:
                    return None
            report = ArtifactReport(cls=cls, position=tuple(position),
                                    frame_seq=frame_seq, reported_at=reported_at)
            entry = asdict(report)
            entry["position"] = list(entry["position"])  # keep the log JSON-clean
            record.reports.append(entry)
            return report

    def runs_overview(self) -> list[dict]:
        with self._lock:
            out = [r.summary() for r in self._finished]
            if self.record is not None and self.record.status == "running":
                out.append(self.record.summary())
            return out

    def find_record(self, run_id: str) -> RunRecord | None:
        with self._lock:
            if self.record is not None and self.record.run_id == run_id:
                return self.record
            for r in self._finished:
                if r.run_id == run_id:
                    return r
            return None
