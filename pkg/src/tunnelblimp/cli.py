"""Command-line entry points: run scenarios (optionally serving the live
console), recompute metrics, batch comparisons, and textual replay."""

from __future__ import annotations

import argparse
import json
import sys
import threading
import time
from pathlib import Path

from .basestation import BaseStation
from .harness import (BatchReport, Metrics, _aggregate, batch_report,
                      compute_metrics_record, load_config, midline_reference_points,
                      run_scenario)
from .runlog import find_run, list_runs
from .world import map_from_dict

DEFAULT_RUNS_DIR = "runs"


def cmd_run(args) -> int:
    config = load_config(args.config)
    if not args.serve:
        record = run_scenario(config, args.seed, runs_dir=args.runs_dir)
        print(f"run {record.run_id}: {record.status}")
        print(json.dumps(record.metrics, indent=2))
        return 0

    import uvicorn

    from .api import create_app

    station = BaseStation(runs_dir=args.runs_dir)
    ui_dir = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    app = create_app(station, ui_dir=ui_dir if ui_dir.exists() else None)
    done = threading.Event()

    def run_sim():
        try:
            record = run_scenario(config, args.seed, station=station,
                                  runs_dir=args.runs_dir, realtime=True,
                                  speed=args.speed, stop_check=done.is_set)
            print(f"run {record.run_id}: {record.status}")
        finally:
            done.set()

    sim = threading.Thread(target=run_sim, daemon=True)
    sim.start()
    print(f"base station on http://{args.host}:{args.port}  "
          f"(live state: /live/state, console: /ui)")
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    finally:
        done.set()
        sim.join(timeout=5)
    return 0


def cmd_metrics(args) -> int:
    record = find_run(args.run, args.runs_dir)
    refs = midline_reference_points(map_from_dict(record.map))
    metrics = compute_metrics_record(record, refs)
    print(json.dumps(metrics.to_dict(), indent=2))
    return 0


def cmd_batch(args) -> int:
    configs = [load_config(p) for p in sorted(Path(args.configs).glob("*.yaml"))]
    if not configs:
        print(f"no *.yaml configs under {args.configs}", file=sys.stderr)
        return 2
    seeds = [int(s) for s in args.seeds.split(",")]
    report = batch_report(configs, seeds, runs_dir=args.runs_dir)
    print(report.render_text())
    if args.out:
        Path(f"{args.out}.txt").write_text(report.render_text() + "\n")
        Path(f"{args.out}.csv").write_text(report.render_csv() + "\n")
        print(f"wrote {args.out}.txt and {args.out}.csv")
    return 0


def cmd_replay(args) -> int:
    record = find_run(args.run, args.runs_dir)
    frames = {round(f["received_at"], 3): f for f in record.frames}
    t0 = None
    for pose in record.poses:
        if t0 is not None and args.speed > 0:
            time.sleep(max(0.0, (pose["t"] - t0) / args.speed))
        t0 = pose["t"]
        line = (f"t={pose['t']:7.2f}  x={pose['x']:6.2f} y={pose['y']:6.2f} "
                f"z={pose['z']:5.2f}  mode={pose['mode']}  "
                f"collisions={pose['collisions']}")
        f = frames.get(round(pose["t"], 3))
        if f is not None:
            line += f"  | frame #{f['seq']} ({len(f['points'])} pts)"
        print(line)
    print(f"status: {record.status}")
    return 0


def cmd_list(args) -> int:
    for run_id in list_runs(args.runs_dir):
        print(run_id)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="tunnelblimp",
                                     description="blimp-in-tunnel simulator and teleop harness")
    parser.add_argument("--runs-dir", default=DEFAULT_RUNS_DIR,
                        help="directory for persisted run logs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute one scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--serve", action="store_true",
                   help="serve the base station API and live console during the run")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--speed", type=float, default=1.0, help="realtime pacing factor")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("metrics", help="recompute metrics for a stored run")
    p.add_argument("--run", required=True)
    p.set_defaults(fn=cmd_metrics)

    p = sub.add_parser("batch", help="run a directory of configs over seeds")
    p.add_argument("--configs", required=True)
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--out", default=None, help="output path prefix for .txt/.csv tables")
    p.set_defaults(fn=cmd_batch)

    p = sub.add_parser("replay", help="print a stored run as a timeline")
    p.add_argument("--run", required=True)
    p.add_argument("--speed", type=float, default=0.0,
                   help="wall-clock pacing; 0 prints immediately")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("list", help="list stored runs")
    p.set_defaults(fn=cmd_list)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
