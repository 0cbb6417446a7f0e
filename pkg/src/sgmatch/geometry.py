"""Low-level geometry: ray-plane tests, point-to-plane distances, angles.

Conventions: z is up, wall planes are stored with unit inward normals, and
all angle comparisons between wall normals use signed angles in the
horizontal plane (gravity-referenced), so in-plane mirror configurations are
distinguishable from proper yaw rotations.
"""

from __future__ import annotations

import math

import numpy as np

from .graph import PlaneNode, RoomNode

PARALLEL_TOL = 1e-12
DEGENERATE_TOL = 1e-12


class DegenerateRayError(ValueError):
    """Raised when the ray origin and target coincide."""


def ray_plane_parameter(
    c_r: np.ndarray, c_o: np.ndarray, plane: PlaneNode
) -> float | None:
    """Parameter t at which the ray ``c_r + t (c_o - c_r)`` meets the plane.

    Returns None when the ray is parallel to the plane (denominator below
    1e-12 in magnitude).
    """
    c_r = np.asarray(c_r, dtype=float)
    c_o = np.asarray(c_o, dtype=float)
    direction = c_o - c_r
    if float(np.linalg.norm(direction)) < DEGENERATE_TOL:
        raise DegenerateRayError("ray origin and target coincide")
    denom = float(plane.normal @ direction)
    if abs(denom) < PARALLEL_TOL:
        return None
    return -(float(plane.normal @ c_r) + plane.offset) / denom


def point_plane_distance(c_o: np.ndarray, plane: PlaneNode) -> float:
    """Signed distance ``n . c_o + d``; positive on the room side under the
    canonical inward orientation."""
    return plane.signed_distance(c_o)


def closest_plane(c_o: np.ndarray, planes: list[PlaneNode]) -> tuple[str, float]:
    """Plane minimizing the absolute point-to-plane distance.

    Ties are broken by lowest plane id so the result is deterministic.
    """
    if not planes:
        raise ValueError("closest_plane requires a non-empty plane list")
    best = min(planes, key=lambda p: (abs(point_plane_distance(c_o, p)), p.id))
    return best.id, abs(point_plane_distance(c_o, best))


def object_in_room(
    room: RoomNode,
    planes: list[PlaneNode],
    c_o: np.ndarray,
    epsilon: float,
) -> bool:
    """Visibility test from the room center.

    A plane occludes the object when its ray parameter t lies in
    ``(0, 1 - epsilon)``; the object belongs to the room iff no plane
    occludes it.  Valid for convex rooms only.
    """
    for plane in planes:
        t = ray_plane_parameter(room.center, c_o, plane)
        if t is not None and 0.0 < t < 1.0 - epsilon:
            return False
    return True


def room_contains(
    room: RoomNode, planes: list[PlaneNode], point: np.ndarray, epsilon: float
) -> bool:
    """Visibility-based room membership that tolerates a point exactly at the
    room center (used for keyframe positions)."""
    point = np.asarray(point, dtype=float)
    if float(np.linalg.norm(point - room.center)) < DEGENERATE_TOL:
        return True
    return object_in_room(room, planes, point, epsilon)


def wrap_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def signed_horizontal_angle(u: np.ndarray, v: np.ndarray) -> float | None:
    """Signed angle from u to v, measured in the horizontal (x, y) plane.

    Positive counter-clockwise seen from +z.  Returns None when either
    vector has a negligible horizontal component.
    """
    ux, uy = float(u[0]), float(u[1])
    vx, vy = float(v[0]), float(v[1])
    if math.hypot(ux, uy) < 1e-9 or math.hypot(vx, vy) < 1e-9:
        return None
    return math.atan2(ux * vy - uy * vx, ux * vx + uy * vy)


def segment_plane_crossing(
    p0: np.ndarray, p1: np.ndarray, plane: PlaneNode
) -> tuple[float, np.ndarray] | None:
    """Intersection of segment p0->p1 with a plane, as (t, point) with
    t in [0, 1]; None when the segment does not reach the plane."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    direction = p1 - p0
    denom = float(plane.normal @ direction)
    if abs(denom) < PARALLEL_TOL:
        return None
    t = -plane.signed_distance(p0) / denom
    if not 0.0 <= t <= 1.0:
        return None
    return t, p0 + t * direction


def yaw_rotation(yaw: float) -> np.ndarray:
    """Rotation matrix about the z axis."""
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
