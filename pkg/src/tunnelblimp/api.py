"""HTTP surface of the base station for the supervisor console: run
browsing, live state polling, a server-push frame stream, command
submission, and artifact reports."""

from __future__ import annotations

import asyncio
import json
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse, StreamingResponse
from pydantic import BaseModel

from .basestation import BaseStation, CommandRejected

STREAM_POLL_S = 0.1  # frame stream polls the latest view at 10 Hz


class CommandIn(BaseModel):
    kind: str
    magnitude: float = 0.5
    duration: float = 1.0


class RunStart(BaseModel):
    scenario: str = "manual"
    seed: int = 0


def create_app(station: BaseStation, ui_dir=None) -> FastAPI:
    app = FastAPI(title="tunnelblimp base station")

    @app.get("/runs")
    def runs():
        return station.runs_overview()

    @app.get("/runs/{run_id}")
    def run_detail(run_id: str):
        record = station.find_record(run_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}")
        return {
            "run_id": record.run_id, "scenario": record.scenario, "seed": record.seed,
            "status": record.status, "started_at": record.started_at,
            "ended_at": record.ended_at, "metrics": record.metrics,
            "frames": record.frames, "commands": record.commands,
            "reports": record.reports, "corner_events": record.corner_events,
        }

    @app.post("/runs")
    def start_run(body: RunStart):
        try:
            record = station.start_run(body.scenario, body.seed)
        except RuntimeError as e:
            raise HTTPException(status_code=409, detail=str(e))
        return {"run_id": record.run_id}

    @app.get("/live/state")
    def live_state():
        return station.latest_state()

    @app.get("/live/frames")
    async def live_frames():
        async def gen():
            last_seq = None
            last_staleness_bucket = None
            while True:
                state = station.latest_state()
                frame = state["frame"]
                seq = frame["seq"] if frame else None
                # push on new frame or once per whole second of staleness
                bucket = int(state["staleness"]) if state["staleness"] is not None else None
                if seq != last_seq or bucket != last_staleness_bucket:
                    last_seq = seq
                    last_staleness_bucket = bucket
                    yield f"data: {json.dumps(state)}\n\n"
                await asyncio.sleep(STREAM_POLL_S)

        return StreamingResponse(gen(), media_type="text/event-stream")

    @app.post("/commands")
    def post_command(body: CommandIn):
        try:
            command_id = station.issue_command(body.kind, body.magnitude, body.duration)
        except CommandRejected as e:
            raise HTTPException(status_code=422, detail=str(e))
        except RuntimeError as e:
            raise HTTPException(status_code=409, detail=str(e))
        return {"command_id": command_id, "status": "queued"}

    @app.get("/commands/{command_id}")
    def command_status(command_id: str):
        status = station.command_status(command_id)
        if status is None:
            raise HTTPException(status_code=404, detail=f"unknown command {command_id!r}")
        return status

    @app.get("/reports")
    def reports():
        record = station.record
        return record.reports if record is not None else []

    if ui_dir is not None and Path(ui_dir).exists():
        ui_path = Path(ui_dir)

        @app.get("/ui")
        def ui_index():
            return FileResponse(ui_path / "index.html")

        @app.get("/ui/{name:path}")
        def ui_asset(name: str):
            target = (ui_path / name).resolve()
            if not str(target).startswith(str(ui_path.resolve())) or not target.is_file():
                raise HTTPException(status_code=404)
            return FileResponse(target)

    return app
