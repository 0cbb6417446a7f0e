"""Object-structure relation generation.

Covers the visibility-based object-in-room test, object-on-plane attachment
by point-to-plane distance, ellipsoid-based data association of repeated
object observations, and doorway detection from keyframe trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry
from .graph import (
    Ellipsoid,
    ObjectInstance,
    PlaneNode,
    Relation,
    RelationKind,
    SceneGraph,
    validate,
)

DEFAULT_WALL_CATEGORIES = frozenset({"door", "window", "doorway"})

AXIS_FLOOR = 0.01  # meters; smallest admissible ellipsoid semi-axis
DOORWAY_RADIUS = 0.1  # meters; nominal doorway marker size


@dataclass
class RelationParams:
    """Tunables for relation generation and data association.

    epsilon is the visibility-test margin in ray-parameter space; tau is the
    object-on-plane distance threshold in meters.
    """

    epsilon: float = 0.05
    tau: float = 0.3
    overlap_scale: float = 1.5
    ellipsoid_k: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError(f"epsilon must lie in (0, 0.5), got {self.epsilon}")
        if self.tau <= 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.overlap_scale < 1.0:
            raise ValueError(f"overlap_scale must be >= 1, got {self.overlap_scale}")
        if self.ellipsoid_k <= 0.0:
            raise ValueError(f"ellipsoid_k must be positive, got {self.ellipsoid_k}")


@dataclass
class DoorwayEvent:
    """A room-membership transition localized on the crossed wall plane."""

    kf_inside: str
    kf_outside: str
    room: str
    crossed_plane: str
    location: np.ndarray


def object_in_room(room, planes, c_o, params: RelationParams) -> bool:
    """True iff the object centroid is visible from the room center
    (no wall plane occludes the ray with parameter in (0, 1 - epsilon))."""
    return geometry.object_in_room(room, planes, c_o, params.epsilon)


def generate_relations(
    g: SceneGraph,
    params: RelationParams | None = None,
    wall_categories: frozenset[str] | set[str] = DEFAULT_WALL_CATEGORIES,
) -> SceneGraph:
    """Add object-in-room and object-on-plane relations for every object.

    Idempotent: relations that already exist are not duplicated, and the
    input graph is left untouched.
    """
    params = params or RelationParams()
    diags = validate(g)
    if diags:
        raise ValueError("graph does not validate: " + "; ".join(diags))

    relations = list(g.relations)
    existing = set(relations)

    def add(kind: RelationKind, source: str, target: str) -> None:
        rel = Relation(kind, source, target)
        if rel not in existing:
            existing.add(rel)
            relations.append(rel)

    for obj in g.objects:
        for room in g.rooms:
            planes = g.planes_of_room(room.id)
            if not planes:
                continue
            if not object_in_room(room, planes, obj.center, params):
                continue
            add(RelationKind.OBJECT_IN_ROOM, obj.id, room.id)
            if obj.category in wall_categories:
                plane_id, dist = geometry.closest_plane(obj.center, planes)
                if dist < params.tau:
                    add(RelationKind.OBJECT_ON_PLANE, obj.id, plane_id)

    return replace(g, relations=relations)


# -- ellipsoid fitting and data association --------------------------------


def fit_ellipsoid(points, k: float) -> Ellipsoid:
    """Moment-based fit: centroid plus covariance eigendecomposition.

    Axis directions are the covariance eigenvectors in ascending eigenvalue
    order (right-handed); semi-axes are ``max(k * sqrt(lambda), 0.01)``.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("fit_ellipsoid requires at least one point")
    center = pts.mean(axis=0)
    if len(pts) == 1:
        return Ellipsoid(center=center, semi_axes=np.full(3, AXIS_FLOOR), rotation=np.eye(3))
    centered = pts - center
    cov = centered.T @ centered / len(pts)
    eigvals, eigvecs = np.linalg.eigh(cov)
    if np.linalg.det(eigvecs) < 0:
        eigvecs[:, 2] = -eigvecs[:, 2]
    semi_axes = np.maximum(k * np.sqrt(np.maximum(eigvals, 0.0)), AXIS_FLOOR)
    return Ellipsoid(center=center, semi_axes=semi_axes, rotation=eigvecs)


def _mahalanobis(point: np.ndarray, ellipsoid: Ellipsoid, scale: float) -> float:
    local = ellipsoid.rotation.T @ (np.asarray(point, dtype=float) - ellipsoid.center)
    return float(np.linalg.norm(local / (scale * ellipsoid.semi_axes)))


def ellipsoids_overlap(a: Ellipsoid, b: Ellipsoid, scale: float) -> bool:
    """Symmetric proximity test: either center lies within the other's shape
    after scaling the semi-axes."""
    return _mahalanobis(a.center, b, scale) <= 1.0 or _mahalanobis(b.center, a, scale) <= 1.0


def _overlap_score(a: Ellipsoid, b: Ellipsoid, scale: float) -> float:
    return min(_mahalanobis(a.center, b, scale), _mahalanobis(b.center, a, scale))


def _next_object_id(category: str, taken: set[str]) -> str:
    i = 0
    while f"{category}_{i:03d}" in taken:
        i += 1
    return f"{category}_{i:03d}"


def _associate(
    new_points: np.ndarray,
    category: str,
    existing: list[ObjectInstance],
    params: RelationParams,
    new_id: str | None = None,
) -> tuple[list[ObjectInstance], int, bool]:
    """Core of associate_object; also reports the index of the instance that
    absorbed the points and whether a merge happened."""
    pts = np.asarray(new_points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("associate_object requires a non-empty point set")
    if not category:
        raise ValueError("associate_object requires a non-empty category")

    fitted = fit_ellipsoid(pts, params.ellipsoid_k)
    best_idx, best_score = None, math.inf
    for idx, inst in enumerate(existing):
        if inst.category != category:
            continue
        if ellipsoids_overlap(fitted, inst.ellipsoid, params.overlap_scale):
            score = _overlap_score(fitted, inst.ellipsoid, params.overlap_scale)
            if score < best_score:
                best_idx, best_score = idx, score

    updated = list(existing)
    if best_idx is not None:
        inst = existing[best_idx]
        support = inst.support_points
        merged = pts if support is None else np.vstack([support, pts])
        updated[best_idx] = ObjectInstance(
            id=inst.id,
            category=inst.category,
            ellipsoid=fit_ellipsoid(merged, params.ellipsoid_k),
            support_points=merged,
        )
        return updated, best_idx, True

    taken = {inst.id for inst in existing}
    updated.append(
        ObjectInstance(
            id=new_id if new_id is not None else _next_object_id(category, taken),
            category=category,
            ellipsoid=fitted,
            support_points=pts,
        )
    )
    return updated, len(updated) - 1, False


def associate_object(
    new_points,
    category: str,
    existing: list[ObjectInstance],
    params: RelationParams | None = None,
) -> list[ObjectInstance]:
    """Merge a new observation cluster into an overlapping same-category
    instance (best overlap wins), or append it as a new instance."""
    params = params or RelationParams()
    updated, _, _ = _associate(np.asarray(new_points, dtype=float), category, existing, params)
    return updated


# -- doorway detection -----------------------------------------------------


@dataclass
class _Transition:
    events: list[DoorwayEvent] = field(default_factory=list)
    rooms: list[str] = field(default_factory=list)
    planes: list[str] = field(default_factory=list)


def _keyframe_room(g: SceneGraph, position: np.ndarray, params: RelationParams) -> str | None:
    for room in sorted(g.rooms, key=lambda r: r.id):
        planes = g.planes_of_room(room.id)
        if planes and geometry.room_contains(room, planes, position, params.epsilon):
            return room.id
    return None


def _crossing_event(
    g: SceneGraph,
    room_id: str,
    kf_inside,
    kf_outside,
    params: RelationParams,
) -> DoorwayEvent | None:
    best = None
    for plane in g.planes_of_room(room_id):
        hit = geometry.segment_plane_crossing(kf_inside.position, kf_outside.position, plane)
        if hit is None:
            continue
        t, point = hit
        if best is None or t < best[0]:
            best = (t, point, plane.id)
    if best is None:
        return None
    _, point, plane_id = best
    return DoorwayEvent(
        kf_inside=kf_inside.id,
        kf_outside=kf_outside.id,
        room=room_id,
        crossed_plane=plane_id,
        location=point,
    )


def _doorway_support(center: np.ndarray, params: RelationParams) -> np.ndarray:
    # Octahedron whose moment fit reproduces a sphere of DOORWAY_RADIUS.
    r = DOORWAY_RADIUS * math.sqrt(3.0) / params.ellipsoid_k
    offsets = np.array(
        [[r, 0, 0], [-r, 0, 0], [0, r, 0], [0, -r, 0], [0, 0, r], [0, 0, -r]]
    )
    return center + offsets


def detect_doorways(
    g: SceneGraph, params: RelationParams | None = None
) -> tuple[SceneGraph, list[DoorwayEvent]]:
    """Detect doorways from room-membership transitions along the keyframe
    trajectory.

    Each transition yields one doorway instance (placed between the crossed
    wall faces) related to the rooms it connects and the planes it crosses;
    repeated crossings of the same opening are merged by data association.
    """
    params = params or RelationParams()
    if not g.keyframes:
        return g, []

    memberships = [_keyframe_room(g, kf.position, params) for kf in g.keyframes]

    events: list[DoorwayEvent] = []
    transitions: list[_Transition] = []
    for (kf_a, room_a), (kf_b, room_b) in zip(
        zip(g.keyframes, memberships), zip(g.keyframes[1:], memberships[1:])
    ):
        if room_a == room_b:
            continue
        tr = _Transition()
        for room_id, inside, outside in (
            (room_a, kf_a, kf_b),
            (room_b, kf_b, kf_a),
        ):
            if room_id is None:
                continue
            event = _crossing_event(g, room_id, inside, outside, params)
            if event is None:
                continue
            events.append(event)
            tr.events.append(event)
            tr.rooms.append(room_id)
            tr.planes.append(event.crossed_plane)
        if tr.events:
            transitions.append(tr)

    objects = list(g.objects)
    relations = list(g.relations)
    existing_rel = set(relations)
    taken_ids = set(gid for gid, _ in _all_ids(g))

    def add_rel(kind: RelationKind, source: str, target: str) -> None:
        rel = Relation(kind, source, target)
        if rel not in existing_rel:
            existing_rel.add(rel)
            relations.append(rel)

    for kf, room_id in zip(g.keyframes, memberships):
        if room_id is not None:
            add_rel(RelationKind.KEYFRAME_IN_ROOM, kf.id, room_id)

    for tr in transitions:
        center = np.mean([ev.location for ev in tr.events], axis=0)
        support = _doorway_support(center, params)
        new_id = _next_object_id("doorway", taken_ids)
        objects, idx, _ = _associate(support, "doorway", objects, params, new_id=new_id)
        taken_ids.add(objects[idx].id)
        doorway_id = objects[idx].id
        for room_id in tr.rooms:
            add_rel(RelationKind.OBJECT_IN_ROOM, doorway_id, room_id)
        for plane_id in tr.planes:
            add_rel(RelationKind.OBJECT_ON_PLANE, doorway_id, plane_id)

    return replace(g, objects=objects, relations=relations), events


def _all_ids(g: SceneGraph):
    for r in g.rooms:
        yield r.id, "room"
    for p in g.planes:
        yield p.id, "plane"
    for o in g.objects:
        yield o.id, "object"
    for k in g.keyframes:
        yield k.id, "keyframe"
