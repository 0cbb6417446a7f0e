"""Six-room incremental scenario family for convergence replay.

Scenario m is the prefix of a fixed six-room corridor: square rooms of side
4 m interleaved with 4 x 3 m rectangles (shape sequence square, square,
rectangle, square, rectangle, square at a 5 m pitch).  Each room carries one
wall object of a room-specific category, so semantic matching is unambiguous
from the first observed room while geometric-only matching stays ambiguous
until the rectangles break the corridor symmetry.

GEOMETRIC_UNIQUE_K records, per scenario, at which observed-room counts the
geometric-only matcher resolves a unique assignment (verified against the
exhaustive oracle in the test suite).
"""

from __future__ import annotations

import numpy as np

from .graph import (
    Ellipsoid,
    GraphKind,
    ObjectInstance,
    PlaneNode,
    Relation,
    RelationKind,
    RoomNode,
    SceneGraph,
)
from .relations import RelationParams, generate_relations

ROOM_PITCH = 5.0
ROOM_HALVES = [
    (2.0, 2.0),
    (2.0, 2.0),
    (2.0, 1.5),
    (2.0, 2.0),
    (2.0, 1.5),
    (2.0, 2.0),
]
ROOM_CATEGORIES = ["door", "window", "chair", "table", "cabinet", "shelf"]

# Observed-room counts at which geometric-only matching is unique, keyed by
# scenario size (number of rooms in the map).
GEOMETRIC_UNIQUE_K = {
    1: (),
    2: (),
    3: (3,),
    4: (3, 4),
    5: (3, 4, 5),
    6: (3, 4, 5, 6),
}

MAX_SCENARIO = 6

_WALLS = {
    "+x": np.array([1.0, 0.0, 0.0]),
    "-x": np.array([-1.0, 0.0, 0.0]),
    "+y": np.array([0.0, 1.0, 0.0]),
    "-y": np.array([0.0, -1.0, 0.0]),
}


def build_scenario(m: int) -> tuple[SceneGraph, list[str]]:
    """A-Graph of the first m corridor rooms plus the room visit order."""
    if not 1 <= m <= MAX_SCENARIO:
        raise ValueError(f"scenario size must lie in 1..{MAX_SCENARIO}, got {m}")

    rooms = []
    planes = []
    objects = []
    relations = []
    order = []
    for idx in range(m):
        half_w, half_h = ROOM_HALVES[idx]
        center = np.array([idx * ROOM_PITCH, 0.0, 0.0])
        rid = f"room_{idx:03d}"
        order.append(rid)
        rooms.append(RoomNode(id=rid, center=center))
        for key, outward in _WALLS.items():
            half = half_w if key in ("+x", "-x") else half_h
            point = center + outward * half
            normal = -outward
            pid = f"plane_{idx:03d}_{key}"
            planes.append(
                PlaneNode(id=pid, normal=normal, offset=-float(normal @ point))
            )
            relations.append(Relation(RelationKind.ROOM_HAS_PLANE, rid, pid))
        # One category-unique object just inside the +y wall pins both the
        # room identity and the room orientation for the semantic matcher.
        obj_center = center + np.array([0.0, half_h - 0.05, 1.0])
        objects.append(
            ObjectInstance(
                id=f"obj_{idx:03d}",
                category=ROOM_CATEGORIES[idx],
                ellipsoid=Ellipsoid(
                    center=obj_center,
                    semi_axes=np.array([0.3, 0.1, 0.5]),
                    rotation=np.eye(3),
                ),
            )
        )

    graph = SceneGraph(
        kind=GraphKind.AGRAPH,
        rooms=rooms,
        planes=planes,
        objects=objects,
        relations=relations,
    )
    graph = generate_relations(
        graph, RelationParams(), wall_categories=set(ROOM_CATEGORIES)
    )
    return graph, order
