"""Wall-based navigation state estimation.

Pipeline: project the range scan to the ground plane, extract line segments
with sequential RANSAC, classify them as left/right/front walls, and read
off the tunnel-following state (d, phi): lateral offset from the corridor
center (left positive) and heading error relative to the corridor axis
(positive when the nose points left of the axis).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import as_rng
from .sensors import RangeScan

LEFT, RIGHT, FRONT, UNKNOWN = "left", "right", "front", "unknown"


@dataclass(frozen=True)
class LineExtractionParams:
    ransac_iters: int = 200
    inlier_tol: float = 0.05    # m
    min_inliers: int = 8
    min_length: float = 0.5     # m


@dataclass(frozen=True)
class WallLine:
    """Fitted wall segment in the body frame.

    slope_angle is the line direction normalized into (-pi/2, pi/2];
    intercept is the signed perpendicular distance of the line from the body
    origin along the left normal (-sin a, cos a), so a wall on the left has a
    positive intercept.
    """

    slope_angle: float
    intercept: float
    extent: tuple[float, float]
    cls: str = UNKNOWN
    inlier_count: int = 0

    @property
    def length(self) -> float:
        return self.extent[1] - self.extent[0]

    def foot(self) -> tuple[float, float]:
        """Point on the line closest to the body origin."""
        nx, ny = -math.sin(self.slope_angle), math.cos(self.slope_angle)
        return (self.intercept * nx, self.intercept * ny)


@dataclass(frozen=True)
class NavState:
    """Tunnel-following state estimate with a confidence the mode machine
    uses as the perception-failure signal."""

    d: float
    phi: float
    confidence: float
    timestamp: float = 0.0
    front_distance: float | None = None  # nearest front wall, None if unseen
    open_side: int = 0                   # +1 turn left, -1 turn right at a blocked front


def project_to_plane(scan: RangeScan) -> np.ndarray:
    """Finite beams as (x, y) body-frame points; an all-NaN scan gives (0, 2)."""
    m = scan.finite()
    r = scan.ranges[m]
    a = scan.angles[m]
    return np.column_stack((r * np.cos(a), r * np.sin(a)))


def _normalize_direction(vx: float, vy: float) -> float:
    """Direction angle folded into (-pi/2, pi/2]."""
    a = math.atan2(vy, vx)
    if a <= -math.pi / 2:
        a += math.pi
    elif a > math.pi / 2:
        a -= math.pi
    return a


def _fit_line(points: np.ndarray) -> tuple[float, float]:
    """Total-least-squares line through points: (slope_angle, intercept)."""
    c = points.mean(axis=0)
    q = points - c
    # principal direction of the 2x2 scatter
    sxx = float((q[:, 0] ** 2).sum())
    syy = float((q[:, 1] ** 2).sum())
    sxy = float((q[:, 0] * q[:, 1]).sum())
    angle = 0.5 * math.atan2(2.0 * sxy, sxx - syy)
    a = _normalize_direction(math.cos(angle), math.sin(angle))
    nx, ny = -math.sin(a), math.cos(a)
    return a, float(c[0] * nx + c[1] * ny)


def extract_lines(points: np.ndarray, params: LineExtractionParams = LineExtractionParams(),
                  rng=None) -> list[WallLine]:
    """Greedy sequential RANSAC: repeatedly fit the best-supported line,
    claim its inliers, and continue on the remainder. Segments shorter than
    min_length are claimed but not reported. Deterministic given rng."""
    rng = as_rng(rng)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    lines: list[WallLine] = []
    while len(pts) >= params.min_inliers:
        n = len(pts)
        idx = rng.integers(0, n, size=(params.ransac_iters, 2))
        p0 = pts[idx[:, 0]]
        p1 = pts[idx[:, 1]]
        d = p1 - p0
        norms = np.hypot(d[:, 0], d[:, 1])
        ok = norms > 1e-9
        nvec = np.zeros_like(d)
        nvec[ok, 0] = -d[ok, 1] / norms[ok]
        nvec[ok, 1] = d[ok, 0] / norms[ok]
        # distance of every point to every candidate line
        dist = np.abs((pts[None, :, 0] - p0[:, None, 0]) * nvec[:, None, 0]
                      + (pts[None, :, 1] - p0[:, None, 1]) * nvec[:, None, 1])
        counts = np.where(ok, (dist <= params.inlier_tol).sum(axis=1), -1)
        best = int(np.argmax(counts))
        if counts[best] < params.min_inliers:
            break
        inliers = dist[best] <= params.inlier_tol
        # refine twice with total least squares on the claimed set
        for _ in range(2):
            a, c = _fit_line(pts[inliers])
            nx, ny = -math.sin(a), math.cos(a)
            inliers = np.abs(pts[:, 0] * nx + pts[:, 1] * ny - c) <= params.inlier_tol
            if inliers.sum() < 2:
                break
        if inliers.sum() < params.min_inliers:
            pts = pts[~inliers] if inliers.any() else pts[1:]
            continue
        a, c = _fit_line(pts[inliers])
        ux, uy = math.cos(a), math.sin(a)
        proj = pts[inliers, 0] * ux + pts[inliers, 1] * uy
        line = WallLine(slope_angle=a, intercept=c,
                        extent=(float(proj.min()), float(proj.max())),
                        inlier_count=int(inliers.sum()))
        if line.length >= params.min_length:
            lines.append(line)
        pts = pts[~inliers]
    return lines


def classify_walls(lines: list[WallLine], front_angle_tol: float = math.radians(25),
                   side_angle_tol: float = math.radians(40)) -> list[WallLine]:
    """Assign left/right/front classes from line direction and intercept.

    Lines nearly parallel to the forward axis are side walls, left when the
    intercept is positive. Lines nearly perpendicular whose closest point
    lies ahead are front walls. Everything else stays unknown.
    """
    out = []
    for line in lines:
        a = line.slope_angle
        cls = UNKNOWN
        if abs(a) <= side_angle_tol:
            cls = LEFT if line.intercept > 0 else RIGHT
        elif (math.pi / 2 - abs(a)) <= front_angle_tol and line.foot()[0] > 0:
            cls = FRONT
        out.append(WallLine(a, line.intercept, line.extent, cls, line.inlier_count))
    return out


def estimate_state(walls: list[WallLine], nominal_width: float = 3.3,
                   timestamp: float = 0.0) -> NavState:
    """Interpret classified wall lines as the tunnel-following state.

    Both side walls: phi is the negated mean side slope and d the half
    difference of the wall distances. One side wall: d is inferred from the
    nominal corridor width at half confidence. No side walls: confidence 0
    and the caller must treat the estimate as a perception failure.
    """
    lefts = [w for w in walls if w.cls == LEFT]
    rights = [w for w in walls if w.cls == RIGHT]
    fronts = [w for w in walls if w.cls == FRONT]
    # strongest support wins when a side is seen as several collinear pieces
    left = max(lefts, key=lambda w: w.inlier_count, default=None)
    right = max(rights, key=lambda w: w.inlier_count, default=None)
    front_distance = min((abs(w.intercept) for w in fronts), default=None)
    open_side = 0
    if front_distance is not None:
        if right is not None and left is None:
            open_side = 1
        elif left is not None and right is None:
            open_side = -1

    if left is not None and right is not None:
        phi = -0.5 * (left.slope_angle + right.slope_angle)
        d = -0.5 * (abs(left.intercept) - abs(right.intercept))
        conf = 1.0
    elif left is not None:
        phi = -left.slope_angle
        d = nominal_width / 2.0 - left.intercept
        conf = 0.5
    elif right is not None:
        phi = -right.slope_angle
        d = -right.intercept - nominal_width / 2.0
        conf = 0.5
    else:
        return NavState(0.0, 0.0, 0.0, timestamp, front_distance, open_side)
    return NavState(d, phi, conf, timestamp, front_distance, open_side)


def perceive(scan: RangeScan, extraction: LineExtractionParams = LineExtractionParams(),
             nominal_width: float = 3.3, front_angle_tol: float = math.radians(25),
             side_angle_tol: float = math.radians(40), rng=None) -> NavState:
    """Full scan-to-state pipeline."""
    pts = project_to_plane(scan)
    lines = extract_lines(pts, extraction, rng)
    walls = classify_walls(lines, front_angle_tol, side_angle_tol)
    return estimate_state(walls, nominal_width, timestamp=scan.timestamp)
