"""From a depth-scan slice to the tunnel-following state.

Projects a scan to the ground plane, extracts wall lines, classifies them,
and compares the resulting (d, phi) estimates to ground truth across a
sweep of poses.
"""

import math
import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tunnelblimp import BlimpState, depth_scan
from tunnelblimp.perception import (classify_walls, extract_lines, perceive,
                                    project_to_plane)
from tunnelblimp.world import build_straight

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

m = build_straight(3.3, 200)

# one pose, end to end
st = BlimpState(position=(100.0, 0.5, 0.6), yaw=math.radians(8))
scan = depth_scan(m, st, fov=math.pi / 2, n_rays=64, max_range=8.0, noise_sigma=0.02, rng=1)
pts = project_to_plane(scan)
lines = classify_walls(extract_lines(pts, rng=0))
nav = perceive(scan, rng=0)
d0, _, heading = m.centerline_frame(st.xy)
phi0 = st.yaw - heading
print("walls seen:", [(w.cls, round(w.inlier_count, 0)) for w in lines])
print(f"estimate d={nav.d:+.3f} (truth {d0:+.3f}), "
      f"phi={math.degrees(nav.phi):+.1f} deg (truth {math.degrees(phi0):+.1f})")

# sweep poses and collect estimation errors
rng = np.random.default_rng(3)
d_err, phi_err = [], []
for _ in range(300):
    st = BlimpState(position=(float(rng.uniform(40, 160)), float(rng.uniform(-1, 1)), 0.6),
                    yaw=float(rng.uniform(-0.35, 0.35)))
    scan = depth_scan(m, st, fov=math.pi / 2, n_rays=64, max_range=8.0,
                      noise_sigma=0.02, rng=rng)
    nav = perceive(scan, rng=rng)
    d0, _, heading = m.centerline_frame(st.xy)
    d_err.append(nav.d - d0)
    phi_err.append(math.degrees(nav.phi - (st.yaw - heading)))
print(f"over 300 noisy poses: |d err| p95 = {np.percentile(np.abs(d_err), 95)*100:.1f} cm, "
      f"|phi err| p95 = {np.percentile(np.abs(phi_err), 95):.2f} deg")

fig, axes = plt.subplots(1, 3, figsize=(13, 4))
axes[0].scatter(pts[:, 0], pts[:, 1], s=8)
axes[0].set_title("scan points (body frame)")
axes[0].set_aspect("equal")
axes[1].hist(np.array(d_err) * 100, bins=40)
axes[1].set_title("lateral offset error (cm)")
axes[2].hist(phi_err, bins=40)
axes[2].set_title("heading error estimate error (deg)")
fig.savefig(OUT / "wall_perception.png", dpi=110, bbox_inches="tight")
print(f"figure saved to {OUT / 'wall_perception.png'}")
