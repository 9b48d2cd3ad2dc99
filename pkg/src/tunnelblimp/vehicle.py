"""Fixed-step blimp dynamics: buoyancy-neutral damped rigid body.

Model is a damped double integrator per axis (forward, vertical, yaw)
driven by normalized differential thrust. Wall contact is resolved by
projection with restitution; contacts are counted as discrete collisions
with a debounce, never fatal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .world import TunnelMap

CONTACT_DEBOUNCE_S = 0.5   # min contact-free gap before a new collision counts
WALL_PUSH_IN = 1e-7        # m, keeps the resolved position strictly inside


@dataclass(frozen=True)
class Actuation:
    """Normalized thrust commands, each clamped to [-1, 1]."""

    thrust_left: float = 0.0
    thrust_right: float = 0.0
    thrust_vertical: float = 0.0

    def clamped(self) -> "Actuation":
        c = lambda v: max(-1.0, min(1.0, v))
        return Actuation(c(self.thrust_left), c(self.thrust_right), c(self.thrust_vertical))


@dataclass(frozen=True)
class BlimpState:
    """Pose and rates of the blimp plus collision bookkeeping."""

    position: tuple[float, float, float]
    yaw: float
    v_forward: float = 0.0
    v_vertical: float = 0.0
    yaw_rate: float = 0.0
    collision_count: int = 0
    time: float = 0.0
    last_contact_time: float = -math.inf  # internal, drives the contact debounce

    @property
    def xy(self) -> tuple[float, float]:
        return (self.position[0], self.position[1])


@dataclass(frozen=True)
class DynamicsParams:
    """Blimp plant parameters. Defaults are tuned so the s-track closes in
    roughly 70-120 s at the shipped controller gains."""

    max_forward_accel: float = 0.5    # m/s^2 at full symmetric thrust
    max_yaw_accel: float = 1.2        # rad/s^2 at full differential thrust
    max_vert_accel: float = 0.5       # m/s^2 at full vertical thrust
    linear_drag: float = 0.5          # 1/s
    yaw_drag: float = 1.8             # 1/s
    airflow_coupling: float = 0.45    # fraction of zone wind advected onto the hull
    restitution: float = 0.05         # [0, 1)
    sink_bias: float = 0.0            # m/s constant sink; 0.02 models a slightly-heavy trim

    def __post_init__(self):
        if self.linear_drag <= 0 or self.yaw_drag <= 0:
            raise ValueError("drag coefficients must be > 0")
        if not 0.0 <= self.restitution < 1.0:
            raise ValueError("restitution must be in [0, 1)")


def sample_airflow(map: TunnelMap, position) -> tuple[float, float]:
    """Sum of airflow-zone velocities at position (m/s); zero outside all zones."""
    vx = vy = 0.0
    for z in map.airflow_zones:
        if z.contains(position):
            vx += z.velocity[0]
            vy += z.velocity[1]
    return (vx, vy)


def step(state: BlimpState, act: Actuation, map: TunnelMap, params: DynamicsParams,
         dt: float) -> BlimpState:
    """Advance the blimp one fixed step (semi-implicit Euler).

    Forward acceleration follows the mean of the two horizontal thrusts, yaw
    acceleration their difference; airflow zones advect the hull. Wall or
    floor/ceiling penetration is resolved by projecting back to the surface
    and reflecting the normal velocity with restitution; each contact onset
    after a contact-free debounce period increments collision_count.
    """
    if not 0.0 < dt <= 0.1:
        raise ValueError(f"dt must be in (0, 0.1], got {dt}")
    act = act.clamped()

    u_fwd = 0.5 * (act.thrust_left + act.thrust_right)
    u_yaw = 0.5 * (act.thrust_right - act.thrust_left)

    v_f = state.v_forward + (params.max_forward_accel * u_fwd
                             - params.linear_drag * state.v_forward) * dt
    w = state.yaw_rate + (params.max_yaw_accel * u_yaw
                          - params.yaw_drag * state.yaw_rate) * dt
    v_z = state.v_vertical + (params.max_vert_accel * act.thrust_vertical
                              - params.linear_drag * state.v_vertical) * dt

    yaw = _wrap(state.yaw + w * dt)
    wind = sample_airflow(map, state.position)
    drift = (wind[0] * params.airflow_coupling, wind[1] * params.airflow_coupling)
    x = state.position[0] + (v_f * math.cos(yaw) + drift[0]) * dt
    y = state.position[1] + (v_f * math.sin(yaw) + drift[1]) * dt
    z = state.position[2] + (v_z - params.sink_bias) * dt

    time = state.time + dt
    contact = False

    if not map.contains((x, y)):
        (wx, wy), (nx, ny) = map.nearest_wall_point((x, y))
        x, y = wx + nx * WALL_PUSH_IN, wy + ny * WALL_PUSH_IN
        hx, hy = math.cos(yaw), math.sin(yaw)
        vwx, vwy = v_f * hx, v_f * hy
        vn = vwx * nx + vwy * ny
        if vn < 0.0:  # moving into the wall
            vwx -= (1.0 + params.restitution) * vn * nx
            vwy -= (1.0 + params.restitution) * vn * ny
        v_f = vwx * hx + vwy * hy
        contact = True

    ceiling = map.height_at((x, y))
    if z < 0.0:
        z = 0.0
        if v_z < 0.0:
            v_z = -params.restitution * v_z
        contact = True
    elif z > ceiling:
        z = ceiling
        if v_z > 0.0:
            v_z = -params.restitution * v_z
        contact = True

    collisions = state.collision_count
    last_contact = state.last_contact_time
    if contact:
        if time - last_contact >= CONTACT_DEBOUNCE_S:
            collisions += 1
        last_contact = time

    return replace(state, position=(x, y, z), yaw=yaw, v_forward=v_f, v_vertical=v_z,
                   yaw_rate=w, collision_count=collisions, time=time,
                   last_contact_time=last_contact)


def _wrap(a: float) -> float:
    return (a + math.pi) % (2 * math.pi) - math.pi
