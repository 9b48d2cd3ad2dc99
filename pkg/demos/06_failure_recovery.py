"""The stuck-detection and human-recovery loop, headless.

The corner assist is disabled so the blimp wedges at an l-track corner and
declares STUCK. A scripted supervisor then recovers it through the base
station exactly as an operator would: back up, turn, nudge forward, resume
autonomy.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from tunnelblimp.basestation import BaseStation
from tunnelblimp.control import ModeValue
from tunnelblimp.harness import config_from_dict, run_scenario
from tunnelblimp.world import map_from_dict

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

cfg = config_from_dict({
    "name": "corner-wedge-demo",
    "map": {"builtin": "l_track", "width": 3.3, "leg_length": 10.0},
    "initial_pose": {"x": 1.0, "y": 0.0, "z": 0.4, "yaw_deg": 0.0},
    "control": {"shaping": {"corner_turn_gain": 0.0}},  # cripple corner turning
    "duration_limit": 150.0,
})

script = [(0.0, "backward", 0.6, 2.0), (2.5, "turn_left", 0.8, 3.0),
          (6.0, "forward", 0.6, 2.0), (8.5, "resume_auto", 0.5, 0.5)]
progress = {"stuck_at": None, "i": 0}

def supervisor(t, state, station):
    frame = station.latest_frame
    if progress["stuck_at"] is None and frame and frame.mode == int(ModeValue.STUCK):
        progress["stuck_at"] = t
        print(f"t={t:.1f}s supervisor sees STUCK in the telemetry")
    if progress["stuck_at"] is not None and progress["i"] < len(script):
        offset, kind, mag, dur = script[progress["i"]]
        if t >= progress["stuck_at"] + 1.0 + offset:
            station.issue_command(kind, mag, dur, issued_at=t)
            print(f"t={t:.1f}s supervisor sends {kind} ({mag:.1f} x {dur:.1f} s)")
            progress["i"] += 1

rec = run_scenario(cfg, seed=0, station=BaseStation(), on_tick=supervisor)
print(f"status: {rec.status}")
print("corner outcomes:", {k: v for k, v in rec.metrics.items() if k.startswith("corners")})
print("command statuses:", [(c["kind"], c["status"]) for c in rec.commands])

track = map_from_dict(rec.map)
fig, ax = plt.subplots(figsize=(7, 8))
for (a, b) in track.wall_segments:
    ax.plot([a[0], b[0]], [a[1], b[1]], "k-", lw=2)
colors = {1: "tab:blue", 2: "tab:orange", 3: "tab:red", 4: "tab:green"}
for p in rec.poses[::4]:
    ax.plot(p["x"], p["y"], ".", ms=3, color=colors.get(p["mode"], "gray"))
handles = [plt.Line2D([], [], marker="o", ls="", color=c, label=ModeValue(v).name)
           for v, c in colors.items()]
ax.legend(handles=handles)
ax.set_aspect("equal")
ax.set_title("wedge at the corner, teleop recovery, resume to finish")
fig.savefig(OUT / "failure_recovery.png", dpi=110, bbox_inches="tight")
print(f"figure saved to {OUT / 'failure_recovery.png'}")
