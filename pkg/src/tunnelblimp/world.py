"""Tunnel geometry: piecewise-linear corridors, geometric queries, map I/O.

The tunnel is 2.5D: a 2D centerline polyline with per-segment width and
height. Walls are the miter-joined offset polylines of the centerline, so
the corridor boundary is watertight at corners. All distances in meters,
angles in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import yaml

ARTIFACT_CLASSES = ("survivor", "backpack", "cellphone", "drill", "fire-extinguisher")


class MapError(ValueError):
    """Invalid map construction parameters."""


class OutOfTrackError(Exception):
    """Queried point lies outside the tunnel corridors."""


@dataclass(frozen=True)
class Segment:
    """One straight corridor piece of the tunnel centerline."""

    start: tuple[float, float]
    end: tuple[float, float]
    width: float
    height: float

    def __post_init__(self):
        if self.length < 1e-9:
            raise MapError(f"degenerate segment: start == end == {self.start}")
        if self.width <= 0 or self.height <= 0:
            raise MapError(f"segment width/height must be > 0, got {self.width}x{self.height}")

    @property
    def length(self) -> float:
        return math.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1])

    @property
    def direction(self) -> tuple[float, float]:
        l = self.length
        return ((self.end[0] - self.start[0]) / l, (self.end[1] - self.start[1]) / l)

    @property
    def heading(self) -> float:
        return math.atan2(self.end[1] - self.start[1], self.end[0] - self.start[0])


@dataclass(frozen=True)
class Obstacle:
    """Axis-aligned box obstacle, full-height unless height given."""

    min_corner: tuple[float, float]
    max_corner: tuple[float, float]
    height: float | None = None

    def __post_init__(self):
        if self.max_corner[0] <= self.min_corner[0] or self.max_corner[1] <= self.min_corner[1]:
            raise MapError(f"obstacle box is empty: {self.min_corner}..{self.max_corner}")

    def contains(self, p) -> bool:
        return (self.min_corner[0] <= p[0] <= self.max_corner[0]
                and self.min_corner[1] <= p[1] <= self.max_corner[1])

    def edges(self):
        (x0, y0), (x1, y1) = self.min_corner, self.max_corner
        return [((x0, y0), (x1, y0)), ((x1, y0), (x1, y1)),
                ((x1, y1), (x0, y1)), ((x0, y1), (x0, y0))]


@dataclass(frozen=True)
class AirflowZone:
    """Rectangular region with a constant drift velocity (m/s), capped at 5 m/s."""

    region: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax
    velocity: tuple[float, float]

    def __post_init__(self):
        if math.hypot(*self.velocity) > 5.0:
            raise MapError(f"airflow speed {math.hypot(*self.velocity):.2f} exceeds 5 m/s cap")

    def contains(self, p) -> bool:
        x0, y0, x1, y1 = self.region
        return x0 <= p[0] <= x1 and y0 <= p[1] <= y1


@dataclass(frozen=True)
class ArtifactPlacement:
    """One placed artifact from the five-class object set."""

    id: str
    cls: str
    position: tuple[float, float, float]

    def __post_init__(self):
        if self.cls not in ARTIFACT_CLASSES:
            raise MapError(f"unknown artifact class {self.cls!r}, expected one of {ARTIFACT_CLASSES}")


def _line_intersection(p, u, q, v):
    """Intersection of lines p + s*u and q + t*v; None if near-parallel."""
    denom = u[0] * v[1] - u[1] * v[0]
    if abs(denom) < 1e-12:
        return None
    s = ((q[0] - p[0]) * v[1] - (q[1] - p[1]) * v[0]) / denom
    return (p[0] + s * u[0], p[1] + s * u[1])


class TunnelMap:
    """Immutable tunnel map: centerline segments plus obstacles, artifacts
    and airflow zones. Wall geometry is precomputed at construction so the
    map is safe for concurrent read access."""

    def __init__(self, segments, obstacles=(), artifacts=(), airflow_zones=(), name="unnamed"):
        if not segments:
            raise MapError("map needs at least one segment")
        for a, b in zip(segments, segments[1:]):
            if math.hypot(b.start[0] - a.end[0], b.start[1] - a.end[1]) > 1e-9:
                raise MapError(f"centerline gap between {a.end} and {b.start}")
        self.segments = tuple(segments)
        self.obstacles = tuple(obstacles)
        self.artifacts = tuple(artifacts)
        self.airflow_zones = tuple(airflow_zones)
        self.name = name
        self._build_walls()

    def _build_walls(self):
        """Offset the centerline by +-width/2 with miter joins; cache wall
        segment arrays for vectorized raycasts and the boundary polygon for
        containment tests."""
        left, right = [], []
        segs = self.segments
        for i, s in enumerate(segs):
            u = s.direction
            n = (-u[1], u[0])  # left normal
            h = s.width / 2.0
            lo = (s.start[0] + n[0] * h, s.start[1] + n[1] * h)
            ro = (s.start[0] - n[0] * h, s.start[1] - n[1] * h)
            if i == 0:
                left.append(lo)
                right.append(ro)
            else:
                prev = segs[i - 1]
                pu = prev.direction
                pn = (-pu[1], pu[0])
                ph = prev.width / 2.0
                pl = (prev.start[0] + pn[0] * ph, prev.start[1] + pn[1] * ph)
                pr = (prev.start[0] - pn[0] * ph, prev.start[1] - pn[1] * ph)
                ml = _line_intersection(pl, pu, lo, u)
                mr = _line_intersection(pr, pu, ro, u)
                # parallel continuation: fall back to the shared offset point
                left.append(ml if ml is not None else lo)
                right.append(mr if mr is not None else ro)
        last = segs[-1]
        u = last.direction
        n = (-u[1], u[0])
        h = last.width / 2.0
        left.append((last.end[0] + n[0] * h, last.end[1] + n[1] * h))
        right.append((last.end[0] - n[0] * h, last.end[1] - n[1] * h))

        self._left_wall = left
        self._right_wall = right
        # closed boundary: left chain, end cap, reversed right chain, start cap
        self._boundary = left + right[::-1]

        walls = list(zip(left, left[1:])) + list(zip(right, right[1:]))
        walls.append((left[-1], right[-1]))   # end cap
        walls.append((right[0], left[0]))     # start cap
        for ob in self.obstacles:
            walls.extend(ob.edges())
        self._wall_segments = walls
        w = np.asarray(walls, dtype=float)     # (n, 2, 2)
        self._wall_a = w[:, 0, :]
        self._wall_ab = w[:, 1, :] - w[:, 0, :]

        xs = [p[0] for p in self._boundary]
        ys = [p[1] for p in self._boundary]
        self._bounds = (min(xs), min(ys), max(xs), max(ys))
        self._cum_length = np.concatenate([[0.0], np.cumsum([s.length for s in segs])])

    @property
    def wall_segments(self):
        return self._wall_segments

    @property
    def total_length(self) -> float:
        return float(self._cum_length[-1])

    @property
    def bounds(self):
        return self._bounds

    def contains(self, p, boundary_tol: float = 1e-9) -> bool:
        """Even-odd test against the corridor boundary, excluding obstacles.
        Points within boundary_tol of a wall count as inside."""
        x, y = p[0], p[1]
        x0, y0, x1, y1 = self._bounds
        if not (x0 - boundary_tol <= x <= x1 + boundary_tol
                and y0 - boundary_tol <= y <= y1 + boundary_tol):
            return False
        inside = False
        b = self._boundary
        j = len(b) - 1
        for i in range(len(b)):
            xi, yi = b[i]
            xj, yj = b[j]
            if (yi > y) != (yj > y):
                x_cross = xi + (y - yi) * (xj - xi) / (yj - yi)
                if x < x_cross:
                    inside = not inside
            j = i
        if not inside and boundary_tol > 0.0:
            # exactly-on-boundary points (track endpoints, wall contacts) count
            a = self._wall_a
            ab = self._wall_ab
            ab2 = (ab ** 2).sum(axis=1)
            q = np.array([x, y])
            t = np.clip(((q - a) * ab).sum(axis=1) / ab2, 0.0, 1.0)
            d2 = ((a + t[:, None] * ab - q) ** 2).sum(axis=1)
            inside = bool(d2.min() <= boundary_tol * boundary_tol)
        if not inside:
            return False
        return not any(ob.contains(p) for ob in self.obstacles)

    def centerline_frame(self, p) -> tuple[float, int, float]:
        """Return (d, segment_index, axis_heading) for point p.

        d is the signed perpendicular offset from the chosen segment's axis,
        positive to the left of the travel direction. The segment is the one
        with minimal clamped perpendicular distance; ties go to the lower
        index. Raises OutOfTrackError if p is outside the corridors.
        """
        if not self.contains(p):
            raise OutOfTrackError(f"point {tuple(p)} is outside the tunnel")
        best = None
        for i, s in enumerate(self.segments):
            ax, ay = s.start
            ux, uy = s.direction
            rx, ry = p[0] - ax, p[1] - ay
            t = max(0.0, min(s.length, rx * ux + ry * uy))
            cx, cy = ax + ux * t, ay + uy * t
            dist = math.hypot(p[0] - cx, p[1] - cy)
            if best is None or dist < best[0]:
                best = (dist, i)
        i = best[1]
        s = self.segments[i]
        ux, uy = s.direction
        d = ux * (p[1] - s.start[1]) - uy * (p[0] - s.start[0])  # cross(u, p-a)
        return d, i, s.heading

    def arclength_of(self, p) -> float:
        """Distance along the centerline of p's projection (m)."""
        _, i, _ = self.centerline_frame(p)
        s = self.segments[i]
        ux, uy = s.direction
        t = max(0.0, min(s.length, (p[0] - s.start[0]) * ux + (p[1] - s.start[1]) * uy))
        return float(self._cum_length[i] + t)

    def point_at_arclength(self, s: float):
        """Centerline point at arc-length s, clamped to the track."""
        s = max(0.0, min(self.total_length, s))
        i = int(np.searchsorted(self._cum_length, s, side="right")) - 1
        i = min(i, len(self.segments) - 1)
        seg = self.segments[i]
        t = s - self._cum_length[i]
        ux, uy = seg.direction
        return (seg.start[0] + ux * t, seg.start[1] + uy * t)

    def height_at(self, p) -> float:
        """Ceiling height of the segment nearest to p."""
        _, i, _ = self.centerline_frame(p)
        return self.segments[i].height

    def raycast(self, origin, direction: float, max_range: float):
        """Range to the nearest wall or obstacle along the ray, None beyond
        max_range. Raises OutOfTrackError if the origin is outside."""
        if not self.contains(origin):
            raise OutOfTrackError(f"ray origin {tuple(origin)} is outside the tunnel")
        t = self._ray_hit(origin, math.cos(direction), math.sin(direction))
        if t is None or t > max_range:
            return None
        return t

    def _ray_hit(self, origin, dx: float, dy: float):
        """Smallest positive ray parameter hitting any wall segment."""
        a = self._wall_a
        ab = self._wall_ab
        ox, oy = origin[0], origin[1]
        # solve o + s*d = a + t*ab for each wall segment
        denom = dx * ab[:, 1] - dy * ab[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            qx = a[:, 0] - ox
            qy = a[:, 1] - oy
            s = (qx * ab[:, 1] - qy * ab[:, 0]) / denom
            t = (qx * dy - qy * dx) / denom
        valid = (np.abs(denom) > 1e-14) & (s > 1e-9) & (t >= -1e-12) & (t <= 1.0 + 1e-12)
        if not valid.any():
            return None
        return float(s[valid].min())

    def raycast_batch(self, origin, directions: np.ndarray, max_range: float) -> np.ndarray:
        """Vectorized raycast over many directions; NaN where no hit within
        max_range. Origin must be inside the tunnel."""
        if not self.contains(origin):
            raise OutOfTrackError(f"ray origin {tuple(origin)} is outside the tunnel")
        a = self._wall_a
        ab = self._wall_ab
        dx = np.cos(directions)[:, None]
        dy = np.sin(directions)[:, None]
        qx = a[None, :, 0] - origin[0]
        qy = a[None, :, 1] - origin[1]
        denom = dx * ab[None, :, 1] - dy * ab[None, :, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (qx * ab[None, :, 1] - qy * ab[None, :, 0]) / denom
            t = (qx * dy - qy * dx) / denom
        valid = (np.abs(denom) > 1e-14) & (s > 1e-9) & (t >= -1e-12) & (t <= 1.0 + 1e-12)
        s = np.where(valid, s, np.inf)
        best = s.min(axis=1)
        return np.where(best <= max_range, best, np.nan)

    def nearest_wall_point(self, p):
        """Closest point on any wall segment and the inward unit normal there."""
        a = self._wall_a
        ab = self._wall_ab
        ab2 = (ab ** 2).sum(axis=1)
        q = np.asarray([p[0], p[1]], dtype=float)
        t = np.clip(((q - a) * ab).sum(axis=1) / ab2, 0.0, 1.0)
        closest = a + t[:, None] * ab
        d2 = ((closest - q) ** 2).sum(axis=1)
        i = int(np.argmin(d2))
        cp = closest[i]
        # inward = toward the corridor interior; probe with the wall normal
        wx, wy = ab[i]
        norm = math.hypot(wx, wy)
        nx, ny = -wy / norm, wx / norm
        probe = (cp[0] + nx * 1e-4, cp[1] + ny * 1e-4)
        if not self.contains(probe):
            nx, ny = -nx, -ny
        return (float(cp[0]), float(cp[1])), (nx, ny)


def build_s_track(width: float = 3.3, leg_length: float = 10.0, height: float = 2.5) -> TunnelMap:
    """S-shaped track: five equal legs forming one left and one right u-turn
    (each u-turn is a pair of same-direction 90 degree corners)."""
    if width <= 0:
        raise MapError(f"width must be > 0, got {width}")
    if leg_length <= width:
        raise MapError(f"leg_length ({leg_length}) must exceed width ({width})")
    L = leg_length
    pts = [(0.0, 0.0), (L, 0.0), (L, L), (0.0, L), (0.0, 2 * L), (L, 2 * L)]
    segs = [Segment(a, b, width, height) for a, b in zip(pts, pts[1:])]
    return TunnelMap(segs, name="s-track")


def build_l_track(width: float = 3.3, leg_length: float = 10.0, height: float = 2.5,
                  turn: str = "left") -> TunnelMap:
    """Two-leg track with a single 90 degree corner."""
    if width <= 0:
        raise MapError(f"width must be > 0, got {width}")
    if leg_length <= width:
        raise MapError(f"leg_length ({leg_length}) must exceed width ({width})")
    L = leg_length
    dy = L if turn == "left" else -L
    pts = [(0.0, 0.0), (L, 0.0), (L, dy)]
    segs = [Segment(a, b, width, height) for a, b in zip(pts, pts[1:])]
    return TunnelMap(segs, name=f"l-track-{turn}")


def build_straight(width: float = 3.3, length: float = 60.0, height: float = 2.5) -> TunnelMap:
    """Single straight corridor along +x."""
    return TunnelMap([Segment((0.0, 0.0), (length, 0.0), width, height)], name="straight")


def corner_joints(map: TunnelMap):
    """Interior joint positions where the centerline changes heading."""
    joints = []
    for i in range(1, len(map.segments)):
        a, b = map.segments[i - 1], map.segments[i]
        turn = _wrap_angle(b.heading - a.heading)
        if abs(turn) > 1e-6:
            joints.append((i, b.start, turn))
    return joints


def _wrap_angle(a: float) -> float:
    return (a + math.pi) % (2 * math.pi) - math.pi


def map_to_dict(m: TunnelMap) -> dict:
    return {
        "name": m.name,
        "segments": [
            {"start": list(s.start), "end": list(s.end), "width": s.width, "height": s.height}
            for s in m.segments
        ],
        "obstacles": [
            {"min": list(o.min_corner), "max": list(o.max_corner),
             **({"height": o.height} if o.height is not None else {})}
            for o in m.obstacles
        ],
        "artifacts": [
            {"id": a.id, "class": a.cls, "position": list(a.position)} for a in m.artifacts
        ],
        "airflow_zones": [
            {"region": list(z.region), "velocity": list(z.velocity)} for z in m.airflow_zones
        ],
    }


def map_from_dict(doc: dict) -> TunnelMap:
    try:
        segs = [Segment(tuple(s["start"]), tuple(s["end"]), float(s["width"]), float(s["height"]))
                for s in doc["segments"]]
        obstacles = [Obstacle(tuple(o["min"]), tuple(o["max"]), o.get("height"))
                     for o in doc.get("obstacles", [])]
        artifacts = [ArtifactPlacement(str(a["id"]), a["class"], tuple(a["position"]))
                     for a in doc.get("artifacts", [])]
        zones = [AirflowZone(tuple(z["region"]), tuple(z["velocity"]))
                 for z in doc.get("airflow_zones", [])]
    except (KeyError, TypeError) as e:
        raise MapError(f"malformed map document: {e}") from e
    return TunnelMap(segs, obstacles, artifacts, zones, name=doc.get("name", "unnamed"))


def save_map(m: TunnelMap, path) -> None:
    with open(path, "w") as f:
        yaml.safe_dump(map_to_dict(m), f, sort_keys=False)


def load_map(path) -> TunnelMap:
    with open(path) as f:
        return map_from_dict(yaml.safe_load(f))
