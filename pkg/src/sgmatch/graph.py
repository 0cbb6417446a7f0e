"""Layered scene-graph data model shared by A-Graphs and S-Graphs.

A graph holds rooms, wall planes, object instances, keyframes and typed
relations between them.  Wall planes are stored in canonical form: the unit
normal points toward the owning room's center, so ``n . c_r + d > 0``.
Shared physical walls appear once per room, with opposite normals.

The JSON interchange format (``format: 1``) encodes plane ownership through
the plane's ``room`` field; ``room_has_plane`` relations are synthesized on
load and folded back into that field on save, so they never appear in the
``relations`` array.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

UNIT_NORMAL_TOL = 1e-9
ROTATION_TOL = 1e-6

WALL_CATEGORIES = frozenset({"door", "window", "doorway"})


class GraphFormatError(ValueError):
    """Raised when a graph file violates the JSON schema or an invariant."""


class GraphKind(str, Enum):
    AGRAPH = "agraph"
    SGRAPH = "sgraph"


class RelationKind(str, Enum):
    ROOM_HAS_PLANE = "room_has_plane"
    OBJECT_IN_ROOM = "object_in_room"
    OBJECT_ON_PLANE = "object_on_plane"
    KEYFRAME_IN_ROOM = "keyframe_in_room"


def _vec3(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (3,):
        raise GraphFormatError(f"{what}: expected a 3-vector, got shape {arr.shape}")
    return arr


@dataclass(eq=False)
class RoomNode:
    id: str
    center: np.ndarray

    def __post_init__(self):
        self.center = _vec3(self.center, f"room {self.id} center")


@dataclass(eq=False)
class PlaneNode:
    """Infinite wall plane ``n . x + d = 0`` with unit inward normal."""

    id: str
    normal: np.ndarray
    offset: float

    def __post_init__(self):
        self.normal = _vec3(self.normal, f"plane {self.id} normal")
        self.offset = float(self.offset)

    def signed_distance(self, point: np.ndarray) -> float:
        return float(self.normal @ np.asarray(point, dtype=float) + self.offset)


@dataclass(eq=False)
class Ellipsoid:
    center: np.ndarray
    semi_axes: np.ndarray
    rotation: np.ndarray  # columns are axis directions

    def __post_init__(self):
        self.center = _vec3(self.center, "ellipsoid center")
        self.semi_axes = _vec3(self.semi_axes, "ellipsoid semi_axes")
        self.rotation = np.asarray(self.rotation, dtype=float).reshape(3, 3)


@dataclass(eq=False)
class ObjectInstance:
    id: str
    category: str
    ellipsoid: Ellipsoid
    support_points: np.ndarray | None = None  # (n, 3); empty for A-Graph objects

    def __post_init__(self):
        if self.support_points is not None:
            pts = np.asarray(self.support_points, dtype=float)
            self.support_points = pts.reshape(-1, 3) if pts.size else None

    @property
    def center(self) -> np.ndarray:
        return self.ellipsoid.center


@dataclass(eq=False)
class Keyframe:
    id: str
    position: np.ndarray
    timestamp: float

    def __post_init__(self):
        self.position = _vec3(self.position, f"keyframe {self.id} position")
        self.timestamp = float(self.timestamp)


@dataclass(frozen=True)
class Relation:
    kind: RelationKind
    source: str
    target: str


@dataclass
class CategoryCounts:
    """Semantic content of a node: category label -> instance count (> 0)."""

    counts: dict[str, int] = field(default_factory=dict)

    def add(self, category: str, n: int = 1) -> None:
        self.counts[category] = self.counts.get(category, 0) + n

    def __getitem__(self, category: str) -> int:
        return self.counts.get(category, 0)

    def __bool__(self) -> bool:
        return bool(self.counts)

    def __eq__(self, other) -> bool:
        if isinstance(other, CategoryCounts):
            return self.counts == other.counts
        return self.counts == other


@dataclass(eq=False)
class SceneGraph:
    kind: GraphKind
    rooms: list[RoomNode] = field(default_factory=list)
    planes: list[PlaneNode] = field(default_factory=list)
    objects: list[ObjectInstance] = field(default_factory=list)
    keyframes: list[Keyframe] = field(default_factory=list)
    relations: list[Relation] = field(default_factory=list)

    # -- lookups -----------------------------------------------------------

    def node_layers(self) -> dict[str, str]:
        layers: dict[str, str] = {}
        for r in self.rooms:
            layers[r.id] = "room"
        for p in self.planes:
            layers[p.id] = "plane"
        for o in self.objects:
            layers[o.id] = "object"
        for k in self.keyframes:
            layers[k.id] = "keyframe"
        return layers

    def room(self, room_id: str) -> RoomNode:
        for r in self.rooms:
            if r.id == room_id:
                return r
        raise KeyError(f"unknown room id {room_id!r}")

    def plane(self, plane_id: str) -> PlaneNode:
        for p in self.planes:
            if p.id == plane_id:
                return p
        raise KeyError(f"unknown plane id {plane_id!r}")

    def object(self, object_id: str) -> ObjectInstance:
        for o in self.objects:
            if o.id == object_id:
                return o
        raise KeyError(f"unknown object id {object_id!r}")

    def room_of_plane(self, plane_id: str) -> str:
        for rel in self.relations:
            if rel.kind is RelationKind.ROOM_HAS_PLANE and rel.target == plane_id:
                return rel.source
        raise KeyError(f"plane {plane_id!r} has no owning room")

    def planes_of_room(self, room_id: str) -> list[PlaneNode]:
        ids = [
            rel.target
            for rel in self.relations
            if rel.kind is RelationKind.ROOM_HAS_PLANE and rel.source == room_id
        ]
        by_id = {p.id: p for p in self.planes}
        return [by_id[i] for i in sorted(ids)]

    def has_relation(self, kind: RelationKind, source: str, target: str) -> bool:
        return Relation(kind, source, target) in set(self.relations)


# -- validation ------------------------------------------------------------

_RELATION_LAYERS = {
    RelationKind.ROOM_HAS_PLANE: ("room", "plane"),
    RelationKind.OBJECT_IN_ROOM: ("object", "room"),
    RelationKind.OBJECT_ON_PLANE: ("object", "plane"),
    RelationKind.KEYFRAME_IN_ROOM: ("keyframe", "room"),
}


def validate(g: SceneGraph) -> list[str]:
    """Return a list of human-readable diagnostics; empty iff the graph is valid."""
    diags: list[str] = []

    layers: dict[str, str] = {}
    for node_id, layer in _iter_nodes(g):
        if node_id in layers:
            diags.append(f"duplicate node id {node_id!r}")
        layers[node_id] = layer

    for r in g.rooms:
        if not np.all(np.isfinite(r.center)):
            diags.append(f"room {r.id}: center is not finite")

    plane_owner: dict[str, list[str]] = {p.id: [] for p in g.planes}
    seen_relations: set[Relation] = set()
    for rel in g.relations:
        if rel in seen_relations:
            diags.append(
                f"relation ({rel.kind.value}, {rel.source}, {rel.target}) duplicated"
            )
        seen_relations.add(rel)
        want_from, want_to = _RELATION_LAYERS[rel.kind]
        for end, want in ((rel.source, want_from), (rel.target, want_to)):
            got = layers.get(end)
            if got is None:
                diags.append(f"relation {rel.kind.value}: unknown node id {end!r}")
            elif got != want:
                diags.append(
                    f"relation {rel.kind.value}: node {end!r} is a {got}, expected {want}"
                )
        if rel.kind is RelationKind.ROOM_HAS_PLANE and rel.target in plane_owner:
            plane_owner[rel.target].append(rel.source)

    rooms_by_id = {r.id: r for r in g.rooms}
    for p in g.planes:
        norm = float(np.linalg.norm(p.normal))
        if abs(norm - 1.0) > UNIT_NORMAL_TOL:
            diags.append(f"plane {p.id}: normal is not unit length (||n||={norm:.6g})")
        if not math.isfinite(p.offset):
            diags.append(f"plane {p.id}: offset is not finite")
        owners = plane_owner[p.id]
        if len(owners) != 1:
            diags.append(
                f"plane {p.id}: owned by {len(owners)} rooms, expected exactly 1"
            )
        elif owners[0] in rooms_by_id:
            room = rooms_by_id[owners[0]]
            if p.signed_distance(room.center) <= 0:
                diags.append(
                    f"plane {p.id}: normal points away from owning room {owners[0]}"
                )

    for o in g.objects:
        if not o.category:
            diags.append(f"object {o.id}: empty category")
        e = o.ellipsoid
        if not np.all(np.isfinite(e.center)):
            diags.append(f"object {o.id}: ellipsoid center is not finite")
        if np.any(e.semi_axes <= 0):
            diags.append(f"object {o.id}: non-positive semi-axis")
        if not np.allclose(e.rotation.T @ e.rotation, np.eye(3), atol=ROTATION_TOL):
            diags.append(f"object {o.id}: ellipsoid rotation is not orthonormal")
        elif np.linalg.det(e.rotation) < 0:
            diags.append(f"object {o.id}: ellipsoid rotation is a reflection")

    prev_t = None
    for kf in g.keyframes:
        if prev_t is not None and kf.timestamp <= prev_t:
            diags.append(f"keyframe {kf.id}: timestamp not strictly increasing")
        prev_t = kf.timestamp
        if not np.all(np.isfinite(kf.position)):
            diags.append(f"keyframe {kf.id}: position is not finite")

    return diags


def _iter_nodes(g: SceneGraph):
    for r in g.rooms:
        yield r.id, "room"
    for p in g.planes:
        yield p.id, "plane"
    for o in g.objects:
        yield o.id, "object"
    for k in g.keyframes:
        yield k.id, "keyframe"


# -- semantic content ------------------------------------------------------


def semantic_content(g: SceneGraph, node_id: str) -> CategoryCounts:
    """Count object instances related to a room (``object_in_room``) or a
    plane (``object_on_plane``), grouped by category."""
    layers = g.node_layers()
    layer = layers.get(node_id)
    if layer is None:
        raise KeyError(f"unknown node id {node_id!r}")
    if layer == "room":
        kind = RelationKind.OBJECT_IN_ROOM
    elif layer == "plane":
        kind = RelationKind.OBJECT_ON_PLANE
    else:
        raise ValueError(f"node {node_id!r} is a {layer}; expected a room or plane")
    categories = {o.id: o.category for o in g.objects}
    counts = CategoryCounts()
    for rel in g.relations:
        if rel.kind is kind and rel.target == node_id:
            counts.add(categories[rel.source])
    return counts


# -- JSON serialization ----------------------------------------------------

_TOP_KEYS = {"format", "kind", "rooms", "planes", "objects", "keyframes", "relations"}
_JSON_RELATION_KINDS = {
    RelationKind.OBJECT_IN_ROOM,
    RelationKind.OBJECT_ON_PLANE,
    RelationKind.KEYFRAME_IN_ROOM,
}


def _check_keys(obj: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise GraphFormatError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise GraphFormatError(f"{where}: missing field(s) {sorted(missing)}")


def graph_from_dict(data: dict) -> SceneGraph:
    if not isinstance(data, dict):
        raise GraphFormatError("graph document must be a JSON object")
    _check_keys(data, _TOP_KEYS, _TOP_KEYS, "graph")
    if data["format"] != 1:
        raise GraphFormatError(f"unsupported format version {data['format']!r}")
    try:
        kind = GraphKind(data["kind"])
    except ValueError:
        raise GraphFormatError(f"unknown graph kind {data['kind']!r}") from None

    rooms = []
    for entry in data["rooms"]:
        _check_keys(entry, {"id", "center"}, {"id", "center"}, "room")
        rooms.append(RoomNode(id=entry["id"], center=entry["center"]))

    planes = []
    ownership = []
    for entry in data["planes"]:
        keys = {"id", "room", "normal", "offset"}
        _check_keys(entry, keys, keys, "plane")
        planes.append(
            PlaneNode(id=entry["id"], normal=entry["normal"], offset=entry["offset"])
        )
        ownership.append(Relation(RelationKind.ROOM_HAS_PLANE, entry["room"], entry["id"]))

    objects = []
    for entry in data["objects"]:
        _check_keys(
            entry,
            {"id", "category", "ellipsoid", "support_points"},
            {"id", "category", "ellipsoid"},
            "object",
        )
        ell = entry["ellipsoid"]
        keys = {"center", "semi_axes", "rotation"}
        _check_keys(ell, keys, keys, f"object {entry['id']} ellipsoid")
        rotation = np.asarray(ell["rotation"], dtype=float)
        if rotation.shape != (9,):
            raise GraphFormatError(
                f"object {entry['id']}: rotation must have 9 row-major entries"
            )
        objects.append(
            ObjectInstance(
                id=entry["id"],
                category=entry["category"],
                ellipsoid=Ellipsoid(
                    center=ell["center"],
                    semi_axes=ell["semi_axes"],
                    rotation=rotation.reshape(3, 3),
                ),
                support_points=entry.get("support_points"),
            )
        )

    keyframes = []
    for entry in data["keyframes"]:
        keys = {"id", "position", "t"}
        _check_keys(entry, keys, keys, "keyframe")
        keyframes.append(
            Keyframe(id=entry["id"], position=entry["position"], timestamp=entry["t"])
        )

    relations = list(ownership)
    for entry in data["relations"]:
        keys = {"kind", "from", "to"}
        _check_keys(entry, keys, keys, "relation")
        try:
            rk = RelationKind(entry["kind"])
        except ValueError:
            raise GraphFormatError(f"unknown relation kind {entry['kind']!r}") from None
        if rk not in _JSON_RELATION_KINDS:
            raise GraphFormatError(
                f"relation kind {rk.value!r} is implied by plane ownership and may "
                "not appear in the relations array"
            )
        relations.append(Relation(rk, entry["from"], entry["to"]))

    g = SceneGraph(
        kind=kind,
        rooms=rooms,
        planes=planes,
        objects=objects,
        keyframes=keyframes,
        relations=relations,
    )
    diags = validate(g)
    if diags:
        raise GraphFormatError("invalid graph: " + "; ".join(diags))
    return g


def graph_to_dict(g: SceneGraph) -> dict:
    """Canonical dict form: fixed key order, node lists sorted by id,
    relations sorted by (kind, from, to)."""
    owner = {}
    for rel in g.relations:
        if rel.kind is RelationKind.ROOM_HAS_PLANE:
            owner[rel.target] = rel.source

    rooms = [
        {"id": r.id, "center": list(map(float, r.center))}
        for r in sorted(g.rooms, key=lambda r: r.id)
    ]
    planes = [
        {
            "id": p.id,
            "room": owner.get(p.id),
            "normal": list(map(float, p.normal)),
            "offset": float(p.offset),
        }
        for p in sorted(g.planes, key=lambda p: p.id)
    ]
    objects = []
    for o in sorted(g.objects, key=lambda o: o.id):
        entry = {
            "id": o.id,
            "category": o.category,
            "ellipsoid": {
                "center": list(map(float, o.ellipsoid.center)),
                "semi_axes": list(map(float, o.ellipsoid.semi_axes)),
                "rotation": list(map(float, o.ellipsoid.rotation.reshape(-1))),
            },
        }
        if o.support_points is not None and len(o.support_points):
            entry["support_points"] = [list(map(float, p)) for p in o.support_points]
        objects.append(entry)
    keyframes = [
        {"id": k.id, "position": list(map(float, k.position)), "t": float(k.timestamp)}
        for k in g.keyframes
    ]
    relations = sorted(
        (
            {"kind": rel.kind.value, "from": rel.source, "to": rel.target}
            for rel in g.relations
            if rel.kind is not RelationKind.ROOM_HAS_PLANE
        ),
        key=lambda r: (r["kind"], r["from"], r["to"]),
    )
    return {
        "format": 1,
        "kind": g.kind.value,
        "rooms": rooms,
        "planes": planes,
        "objects": objects,
        "keyframes": keyframes,
        "relations": relations,
    }


def dumps_graph(g: SceneGraph) -> str:
    return json.dumps(graph_to_dict(g), ensure_ascii=False, separators=(",", ":")) + "\n"


def save_graph(g: SceneGraph, path: str | Path) -> None:
    Path(path).write_text(dumps_graph(g), encoding="utf-8")


def loads_graph(text: str) -> SceneGraph:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"not valid JSON: {exc}") from exc
    return graph_from_dict(data)


def load_graph(path: str | Path) -> SceneGraph:
    return loads_graph(Path(path).read_text(encoding="utf-8"))


def graphs_allclose(a: SceneGraph, b: SceneGraph, tol: float = 1e-12) -> bool:
    """Field-by-field equality of two graphs within a numeric tolerance."""
    da, db = graph_to_dict(a), graph_to_dict(b)
    return _close(da, db, tol)


def _close(a, b, tol):
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_close(a[k], b[k], tol) for k in a)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(_close(x, y, tol) for x, y in zip(a, b))
    if isinstance(a, float) or isinstance(b, float):
        return abs(float(a) - float(b)) <= tol
    return a == b
