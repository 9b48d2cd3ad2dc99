"""The 8-bin awareness frame and the lossy link model.

Encodes a live scan into the <=36-byte frame, checks the 1 Hz budget, and
sweeps the delivery-ratio model against along-tunnel distance and
accumulated lateral turn displacement (the two effects the radio survey
identified).
"""

import math
import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tunnelblimp import BlimpState, depth_scan, encode_awareness, link_budget_ok
from tunnelblimp.telemetry import (LinkState, delivery_probability,
                                   deserialize_frame, serialize_frame, transmit)
from tunnelblimp.world import build_straight

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)
FOV = math.pi / 2

m = build_straight(3.3, 200)
scan = depth_scan(m, BlimpState(position=(100, 0.3, 0.6), yaw=0.1),
                  fov=FOV, n_rays=64, max_range=8.0)
frame = encode_awareness(scan, altitude=0.61, mode=1, nav_d=0.3, nav_phi=0.1, seq=42)
raw = serialize_frame(frame, FOV)
print(f"frame #{frame.seq}: {len(frame.points)} points, {len(raw)} bytes on the wire")
print(f"1 Hz budget at the default data rate: {link_budget_ok(len(raw), 1.0)}")
back = deserialize_frame(raw, FOV)
print(f"round trip altitude {back.altitude:.2f} m, d {back.nav_d:+.2f} m")

params = dict(base_success=0.98, distance_decay=0.004, lateral_decay=0.06,
              latency_mean=0.2, latency_jitter=0.05)
dists = np.linspace(0, 500, 60)
p_dist = [delivery_probability(LinkState(distance=d, **params)) for d in dists]
lats = np.linspace(0, 50, 60)
p_lat = [delivery_probability(LinkState(accumulated_lateral=l, **params)) for l in lats]

# empirical check at a few points
rng = np.random.default_rng(0)
emp = []
for d in (50, 150, 300):
    link = LinkState(distance=d, **params)
    hits = sum(transmit(b"x", link, rng).delivered for _ in range(2000)) / 2000
    emp.append((d, hits))
    print(f"distance {d} m: model {delivery_probability(link):.3f}, empirical {hits:.3f}")

fig, (a1, a2) = plt.subplots(1, 2, figsize=(11, 4))
a1.plot(dists, p_dist)
a1.plot([e[0] for e in emp], [e[1] for e in emp], "ro", label="Monte Carlo")
a1.set_xlabel("along-tunnel distance (m)")
a1.set_ylabel("delivery probability")
a1.legend()
a2.plot(lats, p_lat)
a2.set_xlabel("accumulated lateral turn displacement (m)")
fig.suptitle("link delivery ratio vs distance and turns")
fig.savefig(OUT / "telemetry_link.png", dpi=110, bbox_inches="tight")
print(f"figure saved to {OUT / 'telemetry_link.png'}")
