"""Tunnel maps and geometric queries.

Builds the s-shaped test track, shows the miter-joined wall geometry, and
demonstrates the two queries everything else is built on: signed centerline
offsets and raycasts. Saves a figure to demos/output/.
"""

import math
import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tunnelblimp import build_s_track

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

track = build_s_track(width=3.3, leg_length=10.0)
print(f"s-track: {len(track.segments)} segments, centerline {track.total_length:.1f} m")

# signed lateral offset: positive to the left of the travel direction
for p in [(5.0, 0.0), (5.0, 0.8), (5.0, -0.8), (10.0, 5.0)]:
    d, idx, heading = track.centerline_frame(p)
    print(f"  point {p}: d={d:+.2f} m on segment {idx} (axis {math.degrees(heading):.0f} deg)")

# a range-scan fan from inside the first corner
origin = (8.5, 0.0)
angles = np.linspace(-math.pi / 2, math.pi / 2, 60)
fig, ax = plt.subplots(figsize=(7, 9))
for (a, b) in track.wall_segments:
    ax.plot([a[0], b[0]], [a[1], b[1]], "k-", lw=2)
cx = [track.point_at_arclength(s) for s in np.linspace(0, track.total_length, 200)]
ax.plot([p[0] for p in cx], [p[1] for p in cx], "b--", lw=0.8, label="centerline")
for theta in angles:
    r = track.raycast(origin, theta, 9.0)
    if r is None:
        continue
    ax.plot([origin[0], origin[0] + r * math.cos(theta)],
            [origin[1], origin[1] + r * math.sin(theta)], "r-", lw=0.4, alpha=0.6)
ax.plot(*origin, "ro", label="scan origin")
ax.set_aspect("equal")
ax.legend()
ax.set_title("s-track walls, centerline, and a raycast fan")
fig.savefig(OUT / "tunnel_geometry.png", dpi=110, bbox_inches="tight")
print(f"figure saved to {OUT / 'tunnel_geometry.png'}")
