"""Shared builders for hand-constructed graphs used across the test suite."""

from __future__ import annotations

import numpy as np

from sgmatch.geometry import yaw_rotation
from sgmatch.graph import (
    Ellipsoid,
    GraphKind,
    ObjectInstance,
    PlaneNode,
    Relation,
    RelationKind,
    RoomNode,
    SceneGraph,
)

WALL_KEYS = ("+x", "-x", "+y", "-y")
WALL_DIRS = {
    "+x": np.array([1.0, 0.0, 0.0]),
    "-x": np.array([-1.0, 0.0, 0.0]),
    "+y": np.array([0.0, 1.0, 0.0]),
    "-y": np.array([0.0, -1.0, 0.0]),
}


def box_room(rid: str, center, half_w: float, half_h: float):
    """Axis-aligned rectangular room: one RoomNode, four wall planes with
    inward normals, and the ownership relations."""
    center = np.asarray(center, dtype=float)
    room = RoomNode(id=rid, center=center)
    planes, relations = [], []
    for key in WALL_KEYS:
        half = half_w if key in ("+x", "-x") else half_h
        outward = WALL_DIRS[key]
        point = center + outward * half
        normal = -outward
        pid = f"{rid}_{key}"
        planes.append(PlaneNode(id=pid, normal=normal, offset=-float(normal @ point)))
        relations.append(Relation(RelationKind.ROOM_HAS_PLANE, rid, pid))
    return room, planes, relations


def box_graph(rooms_spec, kind=GraphKind.AGRAPH, objects=None, relations=()):
    """Graph of axis-aligned box rooms.

    rooms_spec: list of (id, center, half_w, half_h).
    objects: list of ObjectInstance (relations must be supplied or generated
    by the caller).
    """
    rooms, planes, rels = [], [], list(relations)
    for rid, center, half_w, half_h in rooms_spec:
        room, room_planes, room_rels = box_room(rid, center, half_w, half_h)
        rooms.append(room)
        planes.extend(room_planes)
        rels.extend(room_rels)
    return SceneGraph(
        kind=kind,
        rooms=rooms,
        planes=planes,
        objects=list(objects or []),
        relations=rels,
    )


def ball_object(oid: str, category: str, center, radius: float = 0.2) -> ObjectInstance:
    return ObjectInstance(
        id=oid,
        category=category,
        ellipsoid=Ellipsoid(
            center=np.asarray(center, dtype=float),
            semi_axes=np.full(3, radius),
            rotation=np.eye(3),
        ),
    )


def rename_nodes(g: SceneGraph, prefix: str) -> SceneGraph:
    """Copy of the graph with every node id prefixed (same geometry)."""
    ren = {nid: f"{prefix}{nid}" for nid in g.node_layers()}
    return SceneGraph(
        kind=GraphKind.SGRAPH,
        rooms=[RoomNode(id=ren[r.id], center=r.center.copy()) for r in g.rooms],
        planes=[
            PlaneNode(id=ren[p.id], normal=p.normal.copy(), offset=p.offset)
            for p in g.planes
        ],
        objects=[
            ObjectInstance(
                id=ren[o.id],
                category=o.category,
                ellipsoid=Ellipsoid(
                    center=o.ellipsoid.center.copy(),
                    semi_axes=o.ellipsoid.semi_axes.copy(),
                    rotation=o.ellipsoid.rotation.copy(),
                ),
            )
            for o in g.objects
        ],
        keyframes=list(g.keyframes),
        relations=[Relation(r.kind, ren[r.source], ren[r.target]) for r in g.relations],
    )


def warp_graph(g: SceneGraph, yaw: float, translation) -> SceneGraph:
    """Apply a gravity-aligned rigid motion (yaw about z plus translation) to
    all geometry; ids and relations are untouched."""
    rot = yaw_rotation(yaw)
    t = np.asarray(translation, dtype=float)

    def warp(x):
        return rot @ np.asarray(x, dtype=float) + t

    return SceneGraph(
        kind=g.kind,
        rooms=[RoomNode(id=r.id, center=warp(r.center)) for r in g.rooms],
        planes=[
            PlaneNode(
                id=p.id,
                normal=rot @ p.normal,
                offset=p.offset - float((rot @ p.normal) @ t),
            )
            for p in g.planes
        ],
        objects=[
            ObjectInstance(
                id=o.id,
                category=o.category,
                ellipsoid=Ellipsoid(
                    center=warp(o.ellipsoid.center),
                    semi_axes=o.ellipsoid.semi_axes.copy(),
                    rotation=rot @ o.ellipsoid.rotation,
                ),
            )
            for o in g.objects
        ],
        keyframes=list(g.keyframes),
        relations=list(g.relations),
    )


def assignment_set(assignments):
    """Hashable view of a list of candidate assignments (mapping only)."""
    return {
        (tuple(sorted(a.room_map.items())), tuple(sorted(a.plane_map.items())))
        for a in assignments
    }
