"""Spherical-earth geodesy and planar polygon predicates.

Earth is a sphere of radius 6,371,000 m. Short-range error decomposition
uses a local equirectangular tangent plane at the reference point; long
range distances use great circles. Cross-track sign convention: positive
to the right of the reference track.
"""

import math
from dataclasses import dataclass
from typing import Sequence

from .units import EARTH_RADIUS_M, metres_to_nm


class ProjectionError(ValueError):
    """Displacement too large for the local tangent-plane approximation."""


def great_circle_distance_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Haversine distance in metres."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dphi = p2 - p1
    dlmb = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dlmb / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(a)))


def initial_bearing_deg(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Forward azimuth from point 1 to point 2, degrees true in [0, 360)."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dlmb = math.radians(lon2 - lon1)
    y = math.sin(dlmb) * math.cos(p2)
    x = math.cos(p1) * math.sin(p2) - math.sin(p1) * math.cos(p2) * math.cos(dlmb)
    return math.degrees(math.atan2(y, x)) % 360.0


def destination_point(lat: float, lon: float, bearing_deg: float, distance_m: float) -> tuple[float, float]:
    """Great-circle dead reckoning from (lat, lon) along a bearing."""
    delta = distance_m / EARTH_RADIUS_M
    theta = math.radians(bearing_deg)
    p1 = math.radians(lat)
    l1 = math.radians(lon)
    p2 = math.asin(
        math.sin(p1) * math.cos(delta) + math.cos(p1) * math.sin(delta) * math.cos(theta)
    )
    l2 = l1 + math.atan2(
        math.sin(theta) * math.sin(delta) * math.cos(p1),
        math.cos(delta) - math.sin(p1) * math.sin(p2),
    )
    lon2 = math.degrees(l2)
    # normalise to [-180, 180)
    lon2 = (lon2 + 180.0) % 360.0 - 180.0
    return math.degrees(p2), lon2


def tangent_offsets_m(ref_lat: float, ref_lon: float, lat: float, lon: float) -> tuple[float, float]:
    """(east, north) offsets of (lat, lon) from the reference, metres.

    Equirectangular projection at the reference latitude; valid for
    |dlat|, |dlon| < 2 degrees.
    """
    dlat = lat - ref_lat
    dlon = lon - ref_lon
    if abs(dlat) >= 2.0 or abs(dlon) >= 2.0:
        raise ProjectionError(
            f"offset ({dlat:.3f}, {dlon:.3f}) deg exceeds the 2 deg tangent-plane limit"
        )
    east = math.radians(dlon) * EARTH_RADIUS_M * math.cos(math.radians(ref_lat))
    north = math.radians(dlat) * EARTH_RADIUS_M
    return east, north


@dataclass(frozen=True)
class LocalFrame:
    """Along/cross-track frame anchored at a reference point and ground track."""

    origin: tuple[float, float]
    track_deg: float

    @property
    def along_unit(self) -> tuple[float, float]:
        t = math.radians(self.track_deg)
        return math.sin(t), math.cos(t)  # (east, north)

    @property
    def cross_unit(self) -> tuple[float, float]:
        # perpendicular, positive to the right of track
        e, n = self.along_unit
        return n, -e

    def decompose(self, lat: float, lon: float) -> tuple[float, float]:
        """Project a point onto (along, cross) in metres."""
        east, north = tangent_offsets_m(self.origin[0], self.origin[1], lat, lon)
        ae, an = self.along_unit
        ce, cn = self.cross_unit
        return east * ae + north * an, east * ce + north * cn


def track_errors(
    pred: tuple[float, float, float], truth_lat: float, truth_lon: float,
    truth_track_deg: float, truth_fl: float,
) -> tuple[float, float, float]:
    """(along NM, cross NM, vertical FL) errors of a predicted point.

    Along/cross are the tangent-plane displacement projected on the truth
    ground track and its right-hand perpendicular; vertical is the flight
    level difference pred - truth.
    """
    frame = LocalFrame((truth_lat, truth_lon), truth_track_deg)
    along_m, cross_m = frame.decompose(pred[0], pred[1])
    return metres_to_nm(along_m), metres_to_nm(cross_m), pred[2] - truth_fl


# --- planar polygon predicates -------------------------------------------
#
# Sector boundaries and domain hulls are small polygons in (lon, lat) or
# arbitrary feature planes; at en-route scales treating edges as straight
# lines in coordinate space is within the stated geodesy tolerance.


def point_on_segment(px: float, py: float, ax: float, ay: float, bx: float, by: float,
                     eps: float = 1e-12) -> bool:
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    if abs(cross) > eps * max(1.0, abs(bx - ax), abs(by - ay)):
        return False
    dot = (px - ax) * (bx - ax) + (py - ay) * (by - ay)
    if dot < -eps:
        return False
    sq = (bx - ax) ** 2 + (by - ay) ** 2
    return dot <= sq + eps


def point_in_polygon(x: float, y: float, vertices: Sequence[tuple[float, float]]) -> bool:
    """Ray-casting point-in-polygon; points on the boundary count as inside."""
    n = len(vertices)
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        if point_on_segment(x, y, ax, ay, bx, by):
            return True
    inside = False
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        if (ay > y) != (by > y):
            x_cross = ax + (y - ay) * (bx - ax) / (by - ay)
            if x < x_cross:
                inside = not inside
    return inside


def polygon_is_simple(vertices: Sequence[tuple[float, float]]) -> bool:
    """True when no two non-adjacent edges intersect."""
    n = len(vertices)
    if n < 3:
        return False

    def seg(i):
        return vertices[i], vertices[(i + 1) % n]

    def intersects(p1, p2, p3, p4):
        def orient(a, b, c):
            v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if abs(v) < 1e-15:
                return 0
            return 1 if v > 0 else -1

        o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
        o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
        if o1 != o2 and o3 != o4:
            return True
        return False

    for i in range(n):
        for j in range(i + 1, n):
            # skip adjacent edges (sharing a vertex)
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if intersects(*seg(i), *seg(j)):
                return False
    return True


def convex_hull(points: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    """Monotone-chain convex hull, counter-clockwise, no repeated last point.

    Degenerate inputs (single point, collinear set) return the reduced
    vertex list, which downstream containment treats as a closed region.
    """
    pts = sorted(set((float(x), float(y)) for x, y in points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[tuple[float, float]] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[float, float]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def point_in_hull(x: float, y: float, hull: Sequence[tuple[float, float]], eps: float = 1e-9) -> bool:
    """Containment in a (possibly degenerate) convex hull, boundary inclusive."""
    if not hull:
        return False
    if len(hull) == 1:
        return abs(x - hull[0][0]) <= eps and abs(y - hull[0][1]) <= eps
    if len(hull) == 2:
        return point_on_segment(x, y, hull[0][0], hull[0][1], hull[1][0], hull[1][1], eps)
    return point_in_polygon(x, y, hull)
