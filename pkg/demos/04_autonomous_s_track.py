"""A full autonomous run on the s-track.

Runs the closed loop (sense, perceive, mode, control, step, telemetry) and
plots the trajectory over the track together with the mode timeline and the
midline reference points used for the trajectory-error metric.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from tunnelblimp.harness import load_config, midline_reference_points, run_scenario
from tunnelblimp.world import map_from_dict

HERE = pathlib.Path(__file__).parent
OUT = HERE / "output"
OUT.mkdir(exist_ok=True)

cfg = load_config(HERE.parent / "scenarios" / "s_track_auto.yaml")
rec = run_scenario(cfg, seed=0)
print(f"status: {rec.status}")
for k, v in rec.metrics.items():
    print(f"  {k}: {v}")

track = map_from_dict(rec.map)
refs = midline_reference_points(track)

fig, (ax, ax2) = plt.subplots(1, 2, figsize=(13, 7), width_ratios=[1.2, 1])
for (a, b) in track.wall_segments:
    ax.plot([a[0], b[0]], [a[1], b[1]], "k-", lw=2)
xs = [p["x"] for p in rec.poses]
ys = [p["y"] for p in rec.poses]
ax.plot(xs, ys, "b-", lw=1.2, label="trajectory")
ax.plot([r[0] for r in refs], [r[1] for r in refs], "g*", ms=14,
        label="midline reference points")
ax.set_aspect("equal")
ax.legend()
ax.set_title(f"autonomous s-track run (err {rec.metrics['trajectory_error_mean']:.2f} m)")

t = [p["t"] for p in rec.poses]
ax2.step(t, [p["mode"] for p in rec.poses], where="post", label="mode")
ax2.plot(t, [p["z"] for p in rec.poses], label="altitude (m)")
ax2.set_yticks([0, 1, 2, 3, 4])
ax2.set_yticklabels(["IDLE/0", "AUTO/1", "DEGRADED/2", "STUCK/3", "TELEOP/4"])
ax2.set_xlabel("time (s)")
ax2.legend()
ax2.set_title("mode timeline")
fig.savefig(OUT / "autonomous_s_track.png", dpi=110, bbox_inches="tight")
print(f"figure saved to {OUT / 'autonomous_s_track.png'}")
