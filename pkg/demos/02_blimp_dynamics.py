"""Blimp plant behavior: sluggish damped-integrator responses.

Shows the forward-speed step response toward its terminal value, the yaw
response to differential thrust, and altitude hold with the PID loop from
0.2 m up to the 0.6 m goal.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from tunnelblimp import Actuation, BlimpState, DynamicsParams, step
from tunnelblimp.control import PidGains, PidState, altitude_command
from tunnelblimp.sensors import altimeter
from tunnelblimp.world import build_straight

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

m = build_straight(3.3, 2000)
params = DynamicsParams()
dt = 0.05

# forward step response at full symmetric thrust
s = BlimpState(position=(10, 0, 1.0), yaw=0.0)
speeds, yaw_rates = [], []
for _ in range(int(20 / dt)):
    s = step(s, Actuation(1.0, 1.0, 0.0), m, params, dt)
    speeds.append(s.v_forward)
terminal = params.max_forward_accel / params.linear_drag
print(f"terminal forward speed: {terminal:.2f} m/s, reached {speeds[-1]:.2f} m/s in 20 s")

s = BlimpState(position=(10, 0, 1.0), yaw=0.0)
for _ in range(int(20 / dt)):
    s = step(s, Actuation(-0.5, 0.5, 0.0), m, params, dt)
    yaw_rates.append(s.yaw_rate)
print(f"terminal yaw rate at 0.5 differential: {yaw_rates[-1]:.2f} rad/s")

# altitude PID from a low start
gains = PidGains(kp=2.0, ki=0.25, kd=1.6, integral_limit=0.6)
s = BlimpState(position=(10, 0, 0.2), yaw=0.0)
pid = PidState()
alts = []
for _ in range(int(60 / dt)):
    u, pid = altitude_command(altimeter(s), gains, pid, dt)
    s = step(s, Actuation(0, 0, u), m, params, dt)
    alts.append(s.position[2])
print(f"altitude after 60 s: {alts[-1]:.3f} m (goal 0.6)")

t = [i * dt for i in range(len(speeds))]
fig, axes = plt.subplots(3, 1, figsize=(7, 8), sharex=False)
axes[0].plot(t, speeds)
axes[0].axhline(terminal, ls="--", c="gray")
axes[0].set_ylabel("forward speed (m/s)")
axes[1].plot(t, yaw_rates)
axes[1].set_ylabel("yaw rate (rad/s)")
t2 = [i * dt for i in range(len(alts))]
axes[2].plot(t2, alts)
axes[2].axhspan(0.55, 0.65, color="g", alpha=0.15)
axes[2].set_ylabel("altitude (m)")
axes[2].set_xlabel("time (s)")
fig.savefig(OUT / "blimp_dynamics.png", dpi=110, bbox_inches="tight")
print(f"figure saved to {OUT / 'blimp_dynamics.png'}")
