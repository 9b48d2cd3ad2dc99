"""PID altitude hold, tunnel-centering control, and the fail-safe mode
machine that hands over to teleoperation.

Two parallel PID loops drive the centering differential (one on lateral
offset d, one on heading error phi). The mode machine watches estimate
confidence and windowed displacement to detect perception failures and
physical wedging, and yields to supervisor commands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum

from .perception import NavState
from .sensors import AltitudeReading
from .vehicle import Actuation

ALTITUDE_SETPOINT = 0.6  # m


@dataclass(frozen=True)
class PidGains:
    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0
    integral_limit: float = 1.0
    output_limit: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.output_limit <= 1.0:
            raise ValueError("output_limit must be in (0, 1]")
        if self.integral_limit < 0.0:
            raise ValueError("integral_limit must be >= 0")


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    prev_error: float = 0.0
    initialized: bool = False
    last_output: float = 0.0


def pid_step(gains: PidGains, pid: PidState, setpoint: float, measurement: float,
             dt: float) -> tuple[float, PidState]:
    """One PID update on error = setpoint - measurement.

    The integral is clamped (anti-windup), the derivative acts on the error
    and is suppressed on the first call, and the output saturates at
    +-output_limit.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    error = setpoint - measurement
    integral = max(-gains.integral_limit, min(gains.integral_limit,
                                              pid.integral + error * dt))
    deriv = 0.0 if not pid.initialized else (error - pid.prev_error) / dt
    out = gains.kp * error + gains.ki * integral + gains.kd * deriv
    out = max(-gains.output_limit, min(gains.output_limit, out))
    return out, PidState(integral, error, True, out)


def altitude_command(reading: AltitudeReading, gains: PidGains, pid: PidState,
                     dt: float) -> tuple[float, PidState]:
    """Vertical thrust holding the goal altitude; an invalid reading holds
    the previous output and freezes the integral."""
    if not reading.valid:
        return pid.last_output, pid
    return pid_step(gains, pid, ALTITUDE_SETPOINT, reading.altitude, dt)


@dataclass(frozen=True)
class CenteringParams:
    """Forward-wall slowdown and corner-turn shaping for centering control."""

    slow_start: float = 2.0        # m, cruise starts scaling down here
    slow_stop: float = 0.8         # m, cruise reaches zero here
    turn_start: float = 3.5        # m, corner turn bias starts ramping here
    corner_turn_gain: float = 0.6  # differential added toward the open side


def centering_command(nav: NavState, gains_d: PidGains, gains_phi: PidGains,
                      pid_d: PidState, pid_phi: PidState, cruise: float, dt: float,
                      shaping: CenteringParams = CenteringParams(),
                      ) -> tuple[Actuation, PidState, PidState]:
    """Differential thrust steering (d, phi) to zero at the given cruise.

    A reported front wall scales the cruise linearly to zero between
    slow_start and slow_stop and biases the differential toward the open
    side, which is what carries the blimp around 90 degree corners.
    """
    if nav.confidence <= 0.0:
        raise ValueError("centering_command requires nav.confidence > 0")
    u_d, pid_d = pid_step(gains_d, pid_d, 0.0, nav.d, dt)
    u_phi, pid_phi = pid_step(gains_phi, pid_phi, 0.0, nav.phi, dt)
    u = u_d + u_phi
    scale = 1.0
    if nav.front_distance is not None:
        span = shaping.slow_start - shaping.slow_stop
        scale = max(0.0, min(1.0, (nav.front_distance - shaping.slow_stop) / span))
        turn_span = shaping.turn_start - shaping.slow_stop
        closeness = max(0.0, min(1.0, (shaping.turn_start - nav.front_distance) / turn_span))
        u += shaping.corner_turn_gain * closeness * nav.open_side
    fwd = cruise * scale
    return (Actuation(fwd - u, fwd + u, 0.0).clamped(), pid_d, pid_phi)


class ModeValue(IntEnum):
    IDLE = 0
    AUTO = 1
    DEGRADED = 2
    STUCK = 3
    TELEOP = 4


# edges the mode machine is allowed to take (self-loops implicit)
MODE_EDGES = frozenset({
    (ModeValue.AUTO, ModeValue.DEGRADED),
    (ModeValue.AUTO, ModeValue.STUCK),
    (ModeValue.AUTO, ModeValue.TELEOP),
    (ModeValue.DEGRADED, ModeValue.AUTO),
    (ModeValue.DEGRADED, ModeValue.STUCK),
    (ModeValue.DEGRADED, ModeValue.TELEOP),
    (ModeValue.STUCK, ModeValue.AUTO),
    (ModeValue.STUCK, ModeValue.TELEOP),
    (ModeValue.TELEOP, ModeValue.AUTO),
    (ModeValue.IDLE, ModeValue.AUTO),
    (ModeValue.IDLE, ModeValue.TELEOP),
})


@dataclass(frozen=True)
class Mode:
    value: ModeValue = ModeValue.AUTO
    entered_at: float = 0.0
    conf_ok_since: float | None = None  # internal hysteresis timer


@dataclass(frozen=True)
class ModeParams:
    stuck_window: float = 10.0   # s
    stuck_dist: float = 0.3      # m, displacement below which we are stuck
    degraded_conf: float = 0.5
    reentry_hold: float = 2.0    # s of good confidence before autonomous re-entry


def _enter(mode: Mode, value: ModeValue, now: float, conf_ok) -> Mode:
    if (mode.value, value) not in MODE_EDGES:
        raise ValueError(f"illegal mode transition {mode.value.name} -> {value.name}")
    return Mode(value, now, conf_ok)


def mode_step(mode: Mode, nav: NavState, progress_window, teleop_cmd,
              params: ModeParams = ModeParams()) -> Mode:
    """Advance the fail-safe mode machine one tick.

    progress_window is the recent (t, x, y) history; displacement across it
    below stuck_dist declares STUCK once the current mode has been held for
    a full window. Any teleop command preempts to TELEOP; resume_auto
    returns TELEOP to AUTO. Leaving STUCK autonomously requires confidence
    to recover after the STUCK entry and stay good for reentry_hold.
    """
    now = nav.timestamp
    if teleop_cmd is not None:
        kind = getattr(teleop_cmd, "kind", teleop_cmd)
        if kind == "resume_auto":
            if mode.value == ModeValue.TELEOP:
                return _enter(mode, ModeValue.AUTO, now, None)
            return mode
        if mode.value != ModeValue.TELEOP:
            return _enter(mode, ModeValue.TELEOP, now, None)
        return mode
    if mode.value in (ModeValue.TELEOP, ModeValue.IDLE):
        return mode

    conf_ok = mode.conf_ok_since
    if nav.confidence >= params.degraded_conf:
        conf_ok = now if conf_ok is None else conf_ok
    else:
        conf_ok = None

    if mode.value in (ModeValue.AUTO, ModeValue.DEGRADED):
        if now - mode.entered_at >= params.stuck_window:
            recent = [(x, y) for (t, x, y) in progress_window
                      if t >= now - params.stuck_window]
            if len(recent) >= 2:
                disp = math.hypot(recent[-1][0] - recent[0][0],
                                  recent[-1][1] - recent[0][1])
                if disp < params.stuck_dist:
                    return _enter(mode, ModeValue.STUCK, now, conf_ok)

    if mode.value == ModeValue.AUTO:
        if nav.confidence < params.degraded_conf:
            return _enter(mode, ModeValue.DEGRADED, now, conf_ok)
        return replace(mode, conf_ok_since=conf_ok)

    if mode.value == ModeValue.DEGRADED:
        if conf_ok is not None and now - conf_ok >= params.reentry_hold:
            return _enter(mode, ModeValue.AUTO, now, conf_ok)
        return replace(mode, conf_ok_since=conf_ok)

    # STUCK: autonomous exit only on confidence recovered after entry
    if (conf_ok is not None and conf_ok > mode.entered_at
            and now - conf_ok >= params.reentry_hold):
        return _enter(mode, ModeValue.AUTO, now, conf_ok)
    return replace(mode, conf_ok_since=conf_ok)
