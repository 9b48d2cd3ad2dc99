"""Situational-awareness telemetry over a constrained lossy link.

The 1 Hz awareness frame carries at most 8 polar range points (the closest
return in each of 8 angular bins), altitude, mode and the navigation state,
packed into a fixed little-endian layout of at most 36 bytes. The link
model degrades delivery probability exponentially with along-tunnel
distance and with the accumulated lateral displacement of intervening
turns.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from heapq import heappop, heappush

import numpy as np

from .rng import as_rng
from .sensors import RangeScan
from .world import TunnelMap, _wrap_angle, corner_joints

FRAME_MAGIC = b"SF"
COMMAND_MAGIC = b"CM"
ACK_MAGIC = b"AK"
DETECTION_MAGIC = b"DT"

FRAME_BUDGET_BYTES = 36
DEFAULT_DATA_RATE_BPS = 5470  # a standard high-rate setting at 125 kHz bandwidth

_HEADER = struct.Struct("<2sHBHhhB")  # magic, seq, mode, alt_cm, d_cm, phi_crad, count
_POINT = struct.Struct("<HB")         # bin | range_cm << 3, bearing byte
_COMMAND = struct.Struct("<2sHBBB")   # magic, seq, kind, magnitude, duration ds
_ACK = struct.Struct("<2sH")
_DETECTION = struct.Struct("<2sBhhh")

COMMAND_KINDS = ("forward", "backward", "turn_left", "turn_right",
                 "up", "down", "stop", "resume_auto")
MAX_COMMAND_DURATION_S = 10.0


class FrameEncodeError(ValueError):
    """Frame or command violates the wire-format invariants."""


@dataclass(frozen=True)
class FramePoint:
    bin_index: int
    range: float    # m
    bearing: float  # rad, body frame


@dataclass(frozen=True)
class SituationalFrame:
    seq: int
    timestamp: float
    points: tuple[FramePoint, ...]
    altitude: float
    mode: int
    nav_d: float
    nav_phi: float


@dataclass(frozen=True)
class Command:
    """Supervisor recovery command: a bounded teleop pulse."""

    seq: int
    kind: str
    magnitude: float = 0.5
    duration: float = 1.0

    def validate(self) -> None:
        if self.kind not in COMMAND_KINDS:
            raise ValueError(f"unknown command kind {self.kind!r}")
        if not 0.0 < self.magnitude <= 1.0:
            raise ValueError(f"magnitude must be in (0, 1], got {self.magnitude}")
        if not 0.0 < self.duration <= MAX_COMMAND_DURATION_S:
            raise ValueError(f"duration must be in (0, {MAX_COMMAND_DURATION_S}] s, "
                             f"got {self.duration}")


@dataclass
class LinkState:
    """Link-budget geometry and loss model parameters."""

    distance: float = 0.0             # m along the tunnel between endpoints
    accumulated_lateral: float = 0.0  # m of sideways displacement across turns
    base_success: float = 1.0
    distance_decay: float = 0.0       # 1/m
    lateral_decay: float = 0.0        # 1/m
    latency_mean: float = 0.15        # s
    latency_jitter: float = 0.05      # s


@dataclass(frozen=True)
class TransmitOutcome:
    delivered: bool
    latency: float | None = None


def encode_awareness(scan: RangeScan, altitude: float, mode: int, nav_d: float,
                     nav_phi: float, seq: int) -> SituationalFrame:
    """Reduce a scan to the closest point per angular bin (8 bins over the
    fov); bins without a finite return are omitted."""
    if scan.fov <= 0:
        raise ValueError("scan fov must be > 0")
    edges = np.linspace(-scan.fov / 2, scan.fov / 2, 9)
    points = []
    for b in range(8):
        lo, hi = edges[b], edges[b + 1]
        if b < 7:
            in_bin = (scan.angles >= lo) & (scan.angles < hi)
        else:
            in_bin = (scan.angles >= lo) & (scan.angles <= hi)
        r = scan.ranges[in_bin]
        finite = ~np.isnan(r)
        if not finite.any():
            continue
        i = int(np.nanargmin(r))
        points.append(FramePoint(b, float(r[i]), float(scan.angles[in_bin][i])))
    return SituationalFrame(seq=seq, timestamp=scan.timestamp, points=tuple(points),
                            altitude=altitude, mode=int(mode), nav_d=nav_d,
                            nav_phi=nav_phi)


def _check_frame(frame: SituationalFrame, fov: float) -> None:
    if len(frame.points) > 8:
        raise FrameEncodeError(f"{len(frame.points)} points exceeds the 8-bin limit")
    bins = [p.bin_index for p in frame.points]
    if len(set(bins)) != len(bins):
        raise FrameEncodeError(f"duplicate bin indices: {bins}")
    for p in frame.points:
        if not 0 <= p.bin_index <= 7:
            raise FrameEncodeError(f"bin index {p.bin_index} out of range")
        if p.range < 0:
            raise FrameEncodeError(f"negative range {p.range}")
        if not -fov / 2 - 1e-9 <= p.bearing <= fov / 2 + 1e-9:
            raise FrameEncodeError(f"bearing {p.bearing} outside fov {fov}")


def serialize_frame(frame: SituationalFrame, fov: float) -> bytes:
    """Pack a frame into the fixed layout: 12-byte header/state block plus
    3 bytes per point (1 cm range and fov/256 bearing quantization)."""
    _check_frame(frame, fov)
    alt_cm = max(0, min(0xFFFF, round(frame.altitude * 100)))
    d_cm = max(-32768, min(32767, round(frame.nav_d * 100)))
    phi_crad = max(-32768, min(32767, round(_wrap_angle(frame.nav_phi) * 100)))
    out = bytearray(_HEADER.pack(FRAME_MAGIC, frame.seq & 0xFFFF, frame.mode & 0x07,
                                 alt_cm, d_cm, phi_crad, len(frame.points)))
    for p in sorted(frame.points, key=lambda q: q.bin_index):
        range_cm = max(0, min(0x1FFF, round(p.range * 100)))
        packed = (p.bin_index & 0x07) | (range_cm << 3)
        bearing_q = max(0, min(255, round((p.bearing + fov / 2) * 256 / fov)))
        out += _POINT.pack(packed, bearing_q)
    if len(out) > FRAME_BUDGET_BYTES:
        raise FrameEncodeError(f"frame is {len(out)} bytes, budget {FRAME_BUDGET_BYTES}")
    return bytes(out)


def deserialize_frame(data: bytes, fov: float) -> SituationalFrame:
    """Inverse of serialize_frame. The receiver supplies fov (shared config)
    and stamps arrival time; timestamp is not carried on the wire."""
    magic, seq, mode, alt_cm, d_cm, phi_crad, count = _HEADER.unpack_from(data, 0)
    if magic != FRAME_MAGIC:
        raise FrameEncodeError(f"bad frame magic {magic!r}")
    if len(data) != _HEADER.size + count * _POINT.size:
        raise FrameEncodeError(f"length {len(data)} does not match {count} points")
    points = []
    for i in range(count):
        packed, bearing_q = _POINT.unpack_from(data, _HEADER.size + i * _POINT.size)
        points.append(FramePoint(bin_index=packed & 0x07,
                                 range=(packed >> 3) / 100.0,
                                 bearing=-fov / 2 + bearing_q * fov / 256))
    return SituationalFrame(seq=seq, timestamp=0.0, points=tuple(points),
                            altitude=alt_cm / 100.0, mode=mode,
                            nav_d=d_cm / 100.0, nav_phi=phi_crad / 100.0)


def serialize_command(cmd: Command) -> bytes:
    cmd.validate()
    return _COMMAND.pack(COMMAND_MAGIC, cmd.seq & 0xFFFF, COMMAND_KINDS.index(cmd.kind),
                         max(1, min(255, round(cmd.magnitude * 255))),
                         max(1, min(100, round(cmd.duration * 10))))


def deserialize_command(data: bytes) -> Command:
    magic, seq, kind, mag, dur = _COMMAND.unpack(data)
    if magic != COMMAND_MAGIC:
        raise FrameEncodeError(f"bad command magic {magic!r}")
    return Command(seq=seq, kind=COMMAND_KINDS[kind], magnitude=mag / 255.0,
                   duration=dur / 10.0)


def serialize_ack(seq: int) -> bytes:
    return _ACK.pack(ACK_MAGIC, seq & 0xFFFF)


def deserialize_ack(data: bytes) -> int:
    magic, seq = _ACK.unpack(data)
    if magic != ACK_MAGIC:
        raise FrameEncodeError(f"bad ack magic {magic!r}")
    return seq


def serialize_detection(class_index: int, position) -> bytes:
    to_cm = lambda v: max(-32768, min(32767, round(v * 100)))
    return _DETECTION.pack(DETECTION_MAGIC, class_index, to_cm(position[0]),
                           to_cm(position[1]), to_cm(position[2]))


def deserialize_detection(data: bytes) -> tuple[int, tuple[float, float, float]]:
    magic, ci, x, y, z = _DETECTION.unpack(data)
    if magic != DETECTION_MAGIC:
        raise FrameEncodeError(f"bad detection magic {magic!r}")
    return ci, (x / 100.0, y / 100.0, z / 100.0)


def payload_kind(data: bytes) -> str:
    """Dispatch tag for a received payload."""
    magics = {FRAME_MAGIC: "frame", COMMAND_MAGIC: "command",
              ACK_MAGIC: "ack", DETECTION_MAGIC: "detection"}
    return magics.get(bytes(data[:2]), "unknown")


def link_budget_ok(frame_bytes: int, rate_hz: float,
                   data_rate_bps: float = DEFAULT_DATA_RATE_BPS) -> bool:
    """True iff the stream fits the radio data rate."""
    if data_rate_bps <= 0:
        raise ValueError("data_rate_bps must be > 0")
    return frame_bytes * 8 * rate_hz <= data_rate_bps


def delivery_probability(link: LinkState) -> float:
    """Separable exponential decay in distance and accumulated lateral
    turn displacement."""
    return (link.base_success
            * math.exp(-link.distance_decay * link.distance)
            * math.exp(-link.lateral_decay * link.accumulated_lateral))


def transmit(payload: bytes, link: LinkState, rng=None) -> TransmitOutcome:
    """Bernoulli delivery at the model probability with jittered latency."""
    rng = as_rng(rng)
    u = rng.uniform()
    latency = link.latency_mean + rng.uniform(-link.latency_jitter, link.latency_jitter)
    if u < delivery_probability(link):
        return TransmitOutcome(True, max(0.0, latency))
    return TransmitOutcome(False, None)


def link_state_from_map(map: TunnelMap, blimp_pos, base_pos) -> tuple[float, float]:
    """Geometry fields (distance, accumulated_lateral) between the two
    endpoints: along-centerline path length, and per intervening turn the
    displacement perpendicular to the pre-turn axis accumulated until the
    next turn (or the far endpoint)."""
    s_blimp = map.arclength_of(blimp_pos)
    s_base = map.arclength_of(base_pos)
    lo, hi = sorted((s_blimp, s_base))
    distance = hi - lo
    joints = [(float(map._cum_length[i]), pos, i) for i, pos, _ in corner_joints(map)]
    lateral = 0.0
    for k, (s_j, pos, i) in enumerate(joints):
        if not lo < s_j < hi:
            continue
        s_next = min(hi, joints[k + 1][0]) if k + 1 < len(joints) else hi
        end_pt = map.point_at_arclength(s_next)
        ux, uy = map.segments[i - 1].direction  # heading before the turn
        cx, cy = end_pt[0] - pos[0], end_pt[1] - pos[1]
        lateral += abs(ux * cy - uy * cx)
    return distance, lateral


class LossyLink:
    """One direction of the radio as a message-passing boundary.

    Producers enqueue with send(); the loss model is applied immediately and
    survivors become visible through poll() once their latency has elapsed.
    All randomness comes from the generator handed in at construction.
    """

    def __init__(self, rng, name: str = "link"):
        self._rng = as_rng(rng)
        self.name = name
        self._heap: list = []
        self._n = 0
        self.events: list[dict] = []  # kept for the run log

    def send(self, payload: bytes, link: LinkState, now: float) -> bool:
        out = transmit(payload, link, self._rng)
        self.events.append({"t": now, "link": self.name, "kind": payload_kind(payload),
                            "bytes": len(payload), "delivered": out.delivered,
                            "p": delivery_probability(link)})
        if out.delivered:
            self._n += 1
            heappush(self._heap, (now + out.latency, self._n, payload))
        return out.delivered

    def poll(self, now: float) -> list[bytes]:
        out = []
        while self._heap and self._heap[0][0] <= now:
            out.append(heappop(self._heap)[2])
        return out
