"""Scenario runner and metrics pipeline.

A run is a fixed-step closed loop (sense, perceive, mode, control, step,
telemetry) fully determined by (config, seed): every random draw comes from
a named substream of the run seed. Metrics reproduce the experiment
statistics: midline trajectory error, duration, collision count, and corner
outcome accounting.
"""

from __future__ import annotations

import math
import time as wallclock
from collections import deque
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import yaml

from . import perception, sensors, vehicle, world
from .basestation import BaseStation
from .control import (ALTITUDE_SETPOINT, CenteringParams, Mode, ModeParams,
                      ModeValue, PidGains, PidState, altitude_command,
                      centering_command, mode_step)
from .perception import LineExtractionParams, NavState
from .rng import substream
from .runlog import RunRecord, save_run
from .telemetry import (Command, LinkState, LossyLink, deserialize_ack,
                        deserialize_command, deserialize_detection,
                        encode_awareness, link_state_from_map, payload_kind,
                        serialize_ack, serialize_detection, serialize_frame)
from .vehicle import Actuation, BlimpState, DynamicsParams
from .world import ARTIFACT_CLASSES, TunnelMap, corner_joints


class ConfigError(ValueError):
    """Scenario config failed validation; message lists every bad field."""


@dataclass(frozen=True)
class SensorParams:
    fov_deg: float = 90.0
    n_rays: int = 64
    max_range: float = 8.0
    noise_sigma: float = 0.0
    altimeter_sigma: float = 0.0
    altimeter_dropout: float = 0.0


@dataclass(frozen=True)
class ControlParams:
    altitude_gains: PidGains = PidGains(kp=2.0, ki=0.25, kd=1.6, integral_limit=0.6)
    d_gains: PidGains = PidGains(kp=0.35, ki=0.0, kd=0.25, output_limit=0.35)
    phi_gains: PidGains = PidGains(kp=0.9, ki=0.0, kd=0.15, output_limit=0.5)
    cruise: float = 0.65
    degraded_cruise_scale: float = 0.5
    shaping: CenteringParams = CenteringParams()
    mode: ModeParams = ModeParams()


@dataclass(frozen=True)
class LinkParams:
    base_success: float = 1.0
    distance_decay: float = 0.0
    lateral_decay: float = 0.0
    latency_mean: float = 0.15
    latency_jitter: float = 0.05
    data_rate_bps: float = 5470.0


@dataclass(frozen=True)
class DetectorModel:
    """Parametric stand-in for the onboard object detector."""

    max_range: float = 6.0
    fov_deg: float = 90.0
    tp_rate: float = 0.74
    fp_rate_per_min: float = 0.5
    position_noise: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.tp_rate <= 1.0:
            raise ValueError("tp_rate must be in [0, 1]")
        if self.fp_rate_per_min < 0:
            raise ValueError("fp_rate_per_min must be >= 0")


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of a run; (config, seed) determines everything."""

    name: str
    map: dict
    initial_pose: dict = field(default_factory=lambda: {"x": 1.0, "y": 0.0, "z": 0.4,
                                                        "yaw_deg": 0.0})
    dynamics: DynamicsParams = DynamicsParams()
    sensors: SensorParams = SensorParams()
    perception: LineExtractionParams = LineExtractionParams()
    side_angle_tol_deg: float = 40.0
    front_angle_tol_deg: float = 25.0
    control: ControlParams = ControlParams()
    link: LinkParams = LinkParams()
    detector: DetectorModel = DetectorModel()
    mode: str = "auto"                  # auto | teleop-scripted | auto-with-recovery
    duration_limit: float = 180.0
    dt: float = 0.05
    telemetry_hz: float = 1.0
    base_position: tuple[float, float] | None = None
    teleop_script: tuple[dict, ...] = ()
    end_margin: float = 1.0
    stuck_abort: float = 90.0
    corner_radius: float | None = None  # default: corridor width

    def build_map(self) -> TunnelMap:
        return build_map(self.map)


def build_map(doc: dict) -> TunnelMap:
    """Map from a config fragment: a builtin constructor or inline segments."""
    doc = dict(doc)
    builtin = doc.pop("builtin", None)
    if builtin is not None:
        builders = {"s_track": world.build_s_track, "l_track": world.build_l_track,
                    "straight": world.build_straight}
        if builtin not in builders:
            raise ConfigError(f"map.builtin must be one of {sorted(builders)}, got {builtin!r}")
        extras = {k: doc.pop(k) for k in list(doc)
                  if k in ("width", "leg_length", "length", "height", "turn")}
        base = builders[builtin](**extras)
        if any(k in doc for k in ("obstacles", "artifacts", "airflow_zones")):
            merged = world.map_to_dict(base)
            for k in ("obstacles", "artifacts", "airflow_zones"):
                merged[k] = merged.get(k, []) + list(doc.get(k, []))
            return world.map_from_dict(merged)
        return base
    return world.map_from_dict(doc)


_GAIN_FIELDS = ("kp", "ki", "kd", "integral_limit", "output_limit")


def _merge_dataclass(cls_default, doc: dict, path: str, errors: list[str]):
    """Overlay a config dict onto a frozen dataclass, collecting bad keys."""
    if not isinstance(doc, dict):
        errors.append(f"{path}: expected a mapping, got {type(doc).__name__}")
        return cls_default
    valid = {f for f in cls_default.__dataclass_fields__}
    updates = {}
    for k, v in doc.items():
        if k not in valid:
            errors.append(f"{path}.{k}: unknown field")
            continue
        current = getattr(cls_default, k)
        if isinstance(current, (PidGains, CenteringParams, ModeParams)):
            updates[k] = _merge_dataclass(current, v, f"{path}.{k}", errors)
        else:
            updates[k] = v
    try:
        return replace(cls_default, **updates)
    except (TypeError, ValueError) as e:
        errors.append(f"{path}: {e}")
        return cls_default


def config_from_dict(doc: dict) -> ScenarioConfig:
    """Validate a scenario document, reporting every offending field."""
    errors: list[str] = []
    if not isinstance(doc, dict):
        raise ConfigError("scenario document must be a mapping")
    name = doc.get("name")
    if not name:
        errors.append("name: required")
    map_doc = doc.get("map")
    if not isinstance(map_doc, dict):
        errors.append("map: required mapping (builtin or inline segments)")
    cfg = ScenarioConfig(name=name or "unnamed", map=map_doc or {"builtin": "straight"})
    for key in ("dynamics", "sensors", "perception", "control", "link", "detector"):
        if key in doc:
            cfg = replace(cfg, **{key: _merge_dataclass(getattr(cfg, key), doc[key],
                                                        key, errors)})
    for key in ("initial_pose", "side_angle_tol_deg", "front_angle_tol_deg", "mode",
                "duration_limit", "dt", "telemetry_hz", "end_margin", "stuck_abort",
                "corner_radius"):
        if key in doc:
            cfg = replace(cfg, **{key: doc[key]})
    if "base_position" in doc and doc["base_position"] is not None:
        cfg = replace(cfg, base_position=tuple(doc["base_position"]))
    if "teleop_script" in doc:
        script = doc["teleop_script"]
        for i, entry in enumerate(script):
            missing = {"t", "kind"} - set(entry)
            if missing:
                errors.append(f"teleop_script[{i}]: missing {sorted(missing)}")
        cfg = replace(cfg, teleop_script=tuple(dict(e) for e in script))
    if cfg.mode not in ("auto", "teleop-scripted", "auto-with-recovery"):
        errors.append(f"mode: must be auto, teleop-scripted or auto-with-recovery, "
                      f"got {cfg.mode!r}")
    if not 0.0 < cfg.dt <= 0.1:
        errors.append(f"dt: must be in (0, 0.1], got {cfg.dt}")
    if cfg.duration_limit <= 0:
        errors.append(f"duration_limit: must be > 0, got {cfg.duration_limit}")
    if cfg.telemetry_hz <= 0:
        errors.append(f"telemetry_hz: must be > 0, got {cfg.telemetry_hz}")
    if map_doc is not None and isinstance(map_doc, dict):
        try:
            build_map(map_doc)
        except (world.MapError, ConfigError, TypeError) as e:
            errors.append(f"map: {e}")
    if errors:
        raise ConfigError("invalid scenario config:\n  " + "\n  ".join(errors))
    return cfg


def config_to_dict(cfg: ScenarioConfig) -> dict:
    doc = asdict(cfg)
    doc["teleop_script"] = list(cfg.teleop_script)
    if cfg.base_position is not None:
        doc["base_position"] = list(cfg.base_position)
    return doc


def load_config(path) -> ScenarioConfig:
    with open(path) as f:
        return config_from_dict(yaml.safe_load(f))


class TeleopExecutor:
    """Executes bounded teleop pulses; a new command replaces the active one."""

    _MAP = {
        "forward": lambda m: Actuation(m, m, 0.0),
        "backward": lambda m: Actuation(-m, -m, 0.0),
        "turn_left": lambda m: Actuation(-m, m, 0.0),
        "turn_right": lambda m: Actuation(m, -m, 0.0),
        "up": lambda m: Actuation(0.0, 0.0, m),
        "down": lambda m: Actuation(0.0, 0.0, -m),
        "stop": lambda m: Actuation(0.0, 0.0, 0.0),
    }

    def __init__(self):
        self.active: Command | None = None
        self.started_at = 0.0

    def apply(self, cmd: Command, now: float) -> None:
        if cmd.kind in self._MAP:
            self.active = cmd
            self.started_at = now

    def actuation(self, now: float) -> Actuation:
        if self.active is None or now - self.started_at >= self.active.duration:
            return Actuation()
        return self._MAP[self.active.kind](self.active.magnitude)


class ScriptedPilot:
    """Deterministic stand-in for the remote-control operator: ground-truth
    waypoint servoing issued as teleop pulses with reaction-time jitter."""

    def __init__(self, map: TunnelMap, rng, period: float = 0.9, jitter: float = 0.25,
                 lookahead: float = 2.5):
        self.map = map
        self.rng = rng
        self.period = period
        self.jitter = jitter
        self.lookahead = lookahead
        self.next_t = 0.2

    def poll(self, state: BlimpState, t: float) -> list[tuple[str, float, float]]:
        if t < self.next_t:
            return []
        self.next_t = t + self.period + float(self.rng.uniform(-self.jitter, self.jitter))
        s = self.map.arclength_of(state.xy)
        tx, ty = self.map.point_at_arclength(s + self.lookahead)
        err = _wrap(math.atan2(ty - state.position[1], tx - state.position[0]) - state.yaw)
        cmds = []
        if abs(err) > 0.25:
            kind = "turn_left" if err > 0 else "turn_right"
            cmds.append((kind, min(1.0, 0.35 + 0.5 * abs(err)), 0.6))
        else:
            cmds.append(("forward", 0.8, self.period + 0.5))
        dz = ALTITUDE_SETPOINT - state.position[2]
        if abs(dz) > 0.15:
            cmds.append(("up" if dz > 0 else "down", 0.6, 0.5))
        return cmds


class _CornerTracker:
    """Per-joint encounter bookkeeping for the corner outcome statistics.

    An encounter opens when the blimp enters the corner region and closes
    when it leaves the region past the joint; assistance (STUCK or TELEOP
    inside the region) turns a traversal into a recovery.
    """

    def __init__(self, map: TunnelMap, radius: float):
        self.radius = radius
        self.joints = [(i, pos, float(map._cum_length[i])) for i, pos, _ in corner_joints(map)]
        self.state = {i: {"entered_at": None, "assisted": False, "done": False}
                      for i, _, _ in self.joints}
        self.events: list[dict] = []

    def update(self, state: BlimpState, mode: Mode, s_arc: float, t: float) -> None:
        for i, pos, s_joint in self.joints:
            st = self.state[i]
            if st["done"]:
                continue
            inside = math.hypot(state.position[0] - pos[0],
                                state.position[1] - pos[1]) <= self.radius
            if st["entered_at"] is None:
                if inside:
                    st["entered_at"] = t
                continue
            if inside and mode.value in (ModeValue.STUCK, ModeValue.TELEOP):
                st["assisted"] = True
            if not inside and s_arc > s_joint + self.radius / 2:
                st["done"] = True
                self.events.append({"joint": i, "entered_at": st["entered_at"],
                                    "exited_at": t,
                                    "outcome": "recovered" if st["assisted"]
                                    else "traversed_auto"})

    def finalize(self, t: float, completed: bool) -> None:
        for i, _, _ in self.joints:
            st = self.state[i]
            if st["done"] or st["entered_at"] is None:
                continue
            outcome = "unrecovered"
            if completed:
                outcome = "recovered" if st["assisted"] else "traversed_auto"
            self.events.append({"joint": i, "entered_at": st["entered_at"],
                                "exited_at": t, "outcome": outcome})


def simulate_detections(state: BlimpState, map: TunnelMap, model: DetectorModel,
                        rng, dt: float = 0.05) -> list[dict]:
    """Detections this tick: each unoccluded artifact inside the sensing
    cone fires with probability tp_rate (position perturbed by noise);
    false positives arrive as a Poisson process."""
    fov = math.radians(model.fov_deg)
    out = []
    x, y, z = state.position
    for art in map.artifacts:
        dx, dy = art.position[0] - x, art.position[1] - y
        dist = math.hypot(dx, dy)
        if dist > model.max_range or dist < 1e-6:
            continue
        bearing = math.atan2(dy, dx)
        if abs(_wrap(bearing - state.yaw)) > fov / 2:
            continue
        try:
            hit = map.raycast((x, y), bearing, dist - 1e-6)
        except world.OutOfTrackError:
            continue
        if hit is not None:
            continue  # a wall blocks the line of sight
        if rng.uniform() < model.tp_rate:
            noise = (rng.normal(0.0, model.position_noise, size=3)
                     if model.position_noise > 0 else np.zeros(3))
            out.append({"cls": art.cls, "position": [art.position[0] + noise[0],
                                                     art.position[1] + noise[1],
                                                     art.position[2] + noise[2]],
                        "artifact_id": art.id})
    for _ in range(rng.poisson(model.fp_rate_per_min * dt / 60.0)):
        bearing = state.yaw + rng.uniform(-fov / 2, fov / 2)
        r = rng.uniform(0.5, model.max_range)
        out.append({"cls": ARTIFACT_CLASSES[rng.integers(0, len(ARTIFACT_CLASSES))],
                    "position": [x + r * math.cos(bearing), y + r * math.sin(bearing),
                                 rng.uniform(0.2, 1.5)],
                    "artifact_id": None})
    return out


def run_scenario(config: ScenarioConfig, seed: int = 0, station: BaseStation | None = None,
                 runs_dir=None, realtime: bool = False, speed: float = 1.0,
                 stop_check=None, on_tick=None) -> RunRecord:
    """Execute one deterministic closed-loop run and return its RunRecord.

    on_tick(t, state, station), if given, runs at the start of every tick
    (scripted supervisors in tests hang off it). With realtime=True the loop
    is paced against the wall clock (for serving the live console);
    determinism claims apply only to non-realtime runs.
    """
    map = config.build_map()
    dt = config.dt
    fov = math.radians(config.sensors.fov_deg)
    side_tol = math.radians(config.side_angle_tol_deg)
    front_tol = math.radians(config.front_angle_tol_deg)
    nominal_width = map.segments[0].width

    rng_scan = substream(seed, "sensors.depth")
    rng_alt = substream(seed, "sensors.altimeter")
    rng_perc = substream(seed, "perception")
    rng_up = substream(seed, "link.up")
    rng_down = substream(seed, "link.down")
    rng_det = substream(seed, "detector")
    rng_rc = substream(seed, "rc_pilot")

    station = station or BaseStation(runs_dir=None)
    record = station.start_run(config.name, seed, config=config_to_dict(config),
                               map_doc=world.map_to_dict(map))

    pose0 = config.initial_pose
    state = BlimpState(position=(float(pose0.get("x", 0.0)), float(pose0.get("y", 0.0)),
                                 float(pose0.get("z", 0.4))),
                       yaw=math.radians(float(pose0.get("yaw_deg", 0.0))))
    mode = Mode(ModeValue.TELEOP if config.mode == "teleop-scripted" else ModeValue.AUTO, 0.0)
    pid_alt = PidState()
    pid_d = PidState()
    pid_phi = PidState()
    last_good_nav = NavState(0.0, 0.0, 1.0, 0.0)
    last_altitude = state.position[2]

    uplink = LossyLink(rng_up, "uplink")
    downlink = LossyLink(rng_down, "downlink")
    base_pos = config.base_position or map.segments[0].start
    link_params = dict(base_success=config.link.base_success,
                       distance_decay=config.link.distance_decay,
                       lateral_decay=config.link.lateral_decay,
                       latency_mean=config.link.latency_mean,
                       latency_jitter=config.link.latency_jitter)

    executor = TeleopExecutor()
    pilot = ScriptedPilot(map, rng_rc) if config.mode == "teleop-scripted" else None
    script = sorted(config.teleop_script, key=lambda e: e["t"])
    script_i = 0
    seen_cmd_seqs: set[int] = set()
    window: deque = deque()
    assist_front: float | None = None  # front-wall servo state carried through
    assist_open = 0                    # classification dropouts mid-corner
    corner_tracker = _CornerTracker(map, config.corner_radius or nominal_width)
    frame_period = 1.0 / config.telemetry_hz
    next_frame_t = 0.0
    frame_seq = 0
    stuck_since = None
    status = "timeout"
    t = 0.0
    wall_start = wallclock.monotonic()

    n_ticks = int(round(config.duration_limit / dt))
    for tick in range(n_ticks):
        t = tick * dt
        if realtime:
            lag = (t / speed) - (wallclock.monotonic() - wall_start)
            if lag > 0:
                wallclock.sleep(lag)
        if stop_check is not None and stop_check():
            status = "aborted"
            break
        if on_tick is not None:
            on_tick(t, state, station)

        scan = sensors.depth_scan(map, state, fov=fov, n_rays=config.sensors.n_rays,
                                  max_range=config.sensors.max_range,
                                  noise_sigma=config.sensors.noise_sigma, rng=rng_scan)
        alt_reading = sensors.altimeter(state, config.sensors.altimeter_sigma,
                                        config.sensors.altimeter_dropout, rng=rng_alt)
        if alt_reading.valid:
            last_altitude = alt_reading.altitude
        nav = perceive_tick(scan, config, nominal_width, front_tol, side_tol, rng_perc, t)
        if nav.confidence >= config.control.mode.degraded_conf:
            last_good_nav = nav

        link_geo = link_state_from_map(map, state.xy, base_pos)
        link = LinkState(distance=link_geo[0], accumulated_lateral=link_geo[1],
                         **link_params)

        # blimp side: drain the command queue once per tick
        arrived: list[Command] = []
        for payload in downlink.poll(t):
            if payload_kind(payload) != "command":
                continue
            cmd = deserialize_command(payload)
            uplink.send(serialize_ack(cmd.seq), link, t)  # ack even duplicates
            if cmd.seq not in seen_cmd_seqs:
                seen_cmd_seqs.add(cmd.seq)
                arrived.append(cmd)
        if arrived:
            for cmd in arrived:
                mode = mode_step(mode, replace(nav, timestamp=t), window, cmd,
                                 config.control.mode)
                executor.apply(cmd, t)
        else:
            mode = mode_step(mode, nav, window, None, config.control.mode)

        window.append((t, state.position[0], state.position[1]))
        while window and window[0][0] < t - (config.control.mode.stuck_window + 1.0):
            window.popleft()

        # front-wall servoing stays live through classification dropouts at
        # corners: the front line outlives the side walls, and mid-turn the
        # last front/open pair keeps the turn going until the new corridor
        # classifies
        if nav.front_distance is not None:
            assist_front = nav.front_distance
            if nav.open_side != 0:
                assist_open = nav.open_side
        elif nav.confidence >= config.control.mode.degraded_conf:
            assist_front = None
            assist_open = 0

        if mode.value == ModeValue.TELEOP:
            act = executor.actuation(t)
        elif mode.value == ModeValue.STUCK:
            act = Actuation()
        else:
            base_nav = nav if nav.confidence >= config.control.mode.degraded_conf \
                else last_good_nav
            ctrl_nav = replace(base_nav, front_distance=assist_front,
                               open_side=assist_open, timestamp=t)
            cruise = config.control.cruise
            if mode.value == ModeValue.DEGRADED:
                cruise *= config.control.degraded_cruise_scale
            act, pid_d, pid_phi = centering_command(
                ctrl_nav, config.control.d_gains, config.control.phi_gains,
                pid_d, pid_phi, cruise, dt, config.control.shaping)
            v_thrust, pid_alt = altitude_command(alt_reading, config.control.altitude_gains,
                                                 pid_alt, dt)
            act = replace(act, thrust_vertical=v_thrust)

        # telemetry subsample at the configured rate
        if t >= next_frame_t - 1e-9:
            frame = encode_awareness(scan, last_altitude, int(mode.value),
                                     last_good_nav.d, last_good_nav.phi, frame_seq)
            uplink.send(serialize_frame(frame, fov), link, t)
            frame_seq += 1
            next_frame_t += frame_period

        for det in simulate_detections(state, map, config.detector, rng_det, dt):
            record.detections.append({"t": t, **det})
            uplink.send(serialize_detection(ARTIFACT_CLASSES.index(det["cls"]),
                                            det["position"]), link, t)

        # base side: retransmits, then deliveries that have arrived by now
        station.service_command_channel(downlink, link, t)
        for payload in uplink.poll(t):
            kind = payload_kind(payload)
            if kind == "frame":
                station.ingest_raw(payload, fov, t)
            elif kind == "ack":
                station.on_ack(deserialize_ack(payload), t)
            elif kind == "detection":
                ci, pos = deserialize_detection(payload)
                station.record_detection(ARTIFACT_CLASSES[ci], pos,
                                         frame_seq=max(0, frame_seq - 1), reported_at=t)

        while script_i < len(script) and script[script_i]["t"] <= t:
            entry = script[script_i]
            station.issue_command(entry["kind"], entry.get("magnitude", 0.5),
                                  entry.get("duration", 1.0), issued_at=t)
            script_i += 1
        if pilot is not None:
            for kind, mag, dur in pilot.poll(state, t):
                station.issue_command(kind, mag, dur, issued_at=t)

        gt = _ground_truth(map, state)
        record.poses.append({"t": t, "x": state.position[0], "y": state.position[1],
                             "z": state.position[2], "yaw": state.yaw,
                             "v_forward": state.v_forward,
                             "collisions": state.collision_count,
                             "mode": int(mode.value)})
        record.navs.append({"t": t, "d": nav.d, "phi": nav.phi,
                            "confidence": nav.confidence,
                            "front": nav.front_distance, "open_side": nav.open_side,
                            "gt_d": gt[0], "gt_phi": gt[1]})

        state = vehicle.step(state, act, map, config.dynamics, dt)
        t = (tick + 1) * dt

        corner_tracker.update(state, mode, map.arclength_of(state.xy), t)

        if mode.value == ModeValue.STUCK:
            stuck_since = stuck_since if stuck_since is not None else t
            if t - stuck_since >= config.stuck_abort:
                status = "stuck_abort"
                break
        else:
            stuck_since = None

        if map.arclength_of(state.xy) >= map.total_length - config.end_margin:
            status = "completed"
            break

    # drain in-flight deliveries before closing the record
    t_drain = t + 5.0
    for payload in uplink.poll(t_drain):
        kind = payload_kind(payload)
        if kind == "frame":
            station.ingest_raw(payload, fov, t_drain)
        elif kind == "ack":
            station.on_ack(deserialize_ack(payload), t_drain)

    record.poses.append({"t": t, "x": state.position[0], "y": state.position[1],
                         "z": state.position[2], "yaw": state.yaw,
                         "v_forward": state.v_forward,
                         "collisions": state.collision_count, "mode": int(mode.value)})
    corner_tracker.finalize(t, status == "completed")
    record.corner_events.extend(corner_tracker.events)
    record.link_events.extend(uplink.events)
    record.link_events.extend(downlink.events)

    metrics = compute_metrics_record(record, midline_reference_points(map))
    station.end_run(status=status, ended_at=t, metrics=metrics.to_dict())
    if runs_dir is not None:
        save_run(record, runs_dir)
    return record


def perceive_tick(scan, config: ScenarioConfig, nominal_width: float, front_tol: float,
                  side_tol: float, rng, t: float) -> NavState:
    nav = perception.perceive(scan, config.perception, nominal_width,
                              front_tol, side_tol, rng)
    return replace(nav, timestamp=t)


def _ground_truth(map: TunnelMap, state: BlimpState) -> tuple[float, float]:
    try:
        d, _, heading = map.centerline_frame(state.xy)
    except world.OutOfTrackError:
        return (math.nan, math.nan)
    return (d, _wrap(state.yaw - heading))


def midline_reference_points(map: TunnelMap, n: int = 5) -> list[tuple[float, float]]:
    """Evenly spaced reference points on the track midline."""
    total = map.total_length
    return [map.point_at_arclength(total * (i + 1) / (n + 1)) for i in range(n)]


@dataclass(frozen=True)
class Metrics:
    trajectory_error_mean: float
    trajectory_error_std: float
    duration: float
    collision_count: int
    corners_encountered: int
    corners_traversed_auto: int
    corners_recovered: int
    corners_unrecovered: int
    distance_covered: float
    completed: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def compute_metrics(poses: list[dict], reference_points, corner_events=(),
                    completed: bool = True) -> Metrics:
    """Metrics from a pose log: per reference point the minimum lateral
    distance to the trajectory, averaged over the points; duration from the
    first to the last tick; collisions from the vehicle counter."""
    if not poses:
        raise ValueError("cannot compute metrics on an empty trajectory")
    xy = np.array([[p["x"], p["y"]] for p in poses])
    refs = np.asarray(list(reference_points), dtype=float)
    errors = []
    for ref in refs:
        errors.append(float(np.sqrt(((xy - ref) ** 2).sum(axis=1)).min()))
    errors = np.array(errors)
    steps = np.sqrt((np.diff(xy, axis=0) ** 2).sum(axis=1))
    outcomes = [e["outcome"] for e in corner_events]
    return Metrics(
        trajectory_error_mean=float(errors.mean()),
        trajectory_error_std=float(errors.std()),
        duration=float(poses[-1]["t"] - poses[0]["t"]),
        collision_count=int(poses[-1]["collisions"]),
        corners_encountered=len(outcomes),
        corners_traversed_auto=outcomes.count("traversed_auto"),
        corners_recovered=outcomes.count("recovered"),
        corners_unrecovered=outcomes.count("unrecovered"),
        distance_covered=float(steps.sum()),
        completed=completed,
    )


def compute_metrics_record(record: RunRecord, reference_points) -> Metrics:
    return compute_metrics(record.poses, reference_points, record.corner_events,
                           completed=record.status in ("running", "completed"))


def batch_report(configs: list[ScenarioConfig], seeds: list[int],
                 runs_dir=None) -> "BatchReport":
    """Run every (config, seed) pair and aggregate per-condition means."""
    if not configs:
        raise ValueError("batch_report needs at least one config")
    rows = []
    for cfg in configs:
        per_seed = []
        for seed in seeds:
            record = run_scenario(cfg, seed, runs_dir=runs_dir)
            per_seed.append(Metrics(**record.metrics))
        rows.append(_aggregate(cfg.name, per_seed))
    return BatchReport(rows)


def _aggregate(name: str, ms: list[Metrics]) -> dict:
    arr = lambda f: np.array([getattr(m, f) for m in ms], dtype=float)
    return {
        "condition": name,
        "runs": len(ms),
        "completed": int(sum(m.completed for m in ms)),
        "trajectory_error_mean": float(arr("trajectory_error_mean").mean()),
        "trajectory_error_std": float(arr("trajectory_error_mean").std()),
        "duration_mean": float(arr("duration").mean()),
        "collision_mean": float(arr("collision_count").mean()),
        "corners_traversed_auto": int(arr("corners_traversed_auto").sum()),
        "corners_recovered": int(arr("corners_recovered").sum()),
        "corners_unrecovered": int(arr("corners_unrecovered").sum()),
    }


class BatchReport:
    """Per-condition aggregate table, renderable as aligned text or CSV."""

    COLUMNS = ("condition", "runs", "completed", "trajectory_error_mean",
               "trajectory_error_std", "duration_mean", "collision_mean",
               "corners_traversed_auto", "corners_recovered", "corners_unrecovered")

    def __init__(self, rows: list[dict]):
        self.rows = rows

    def render_text(self) -> str:
        def fmt(v):
            return f"{v:.3f}" if isinstance(v, float) else str(v)
        widths = {c: len(c) for c in self.COLUMNS}
        for row in self.rows:
            for c in self.COLUMNS:
                widths[c] = max(widths[c], len(fmt(row[c])))
        lines = ["  ".join(c.ljust(widths[c]) for c in self.COLUMNS)]
        for row in self.rows:
            lines.append("  ".join(fmt(row[c]).ljust(widths[c]) for c in self.COLUMNS))
        return "\n".join(lines)

    def render_csv(self) -> str:
        lines = [",".join(self.COLUMNS)]
        for row in self.rows:
            lines.append(",".join(repr(row[c]) if isinstance(row[c], float)
                                  else str(row[c]) for c in self.COLUMNS))
        return "\n".join(lines)


def _wrap(a: float) -> float:
    return (a + math.pi) % (2 * math.pi) - math.pi
