"""Procedural generation of randomized rectangular-room layouts and the
derivation of noisy partial S-Graphs from them.

Rooms are placed on a jittered grid in a local frame, then the whole layout
gets a random yaw and translation.  ``local`` symmetry makes all rooms
congruent; ``global`` symmetry additionally uses a uniform unjittered grid,
so a 180-degree rotation about the layout center maps the room and plane
sets onto themselves (the certified isometry).  Object placement replicates
under the active symmetry; leftover objects that cannot complete an orbit
are recorded in the metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .geometry import yaw_rotation
from .graph import (
    Ellipsoid,
    GraphKind,
    Keyframe,
    ObjectInstance,
    PlaneNode,
    Relation,
    RelationKind,
    RoomNode,
    SceneGraph,
)
from .relations import RelationParams, generate_relations

FREE_OBJECT_CATEGORIES_HINT = ("chair", "table", "cabinet", "shelf")
WALL_OBJECT_CATEGORIES = frozenset({"door", "window"})

DEFAULT_JITTER = 1.0


class SymmetryMode(str, Enum):
    NONE = "none"
    LOCAL = "local"
    GLOBAL = "global"


@dataclass
class LayoutSpec:
    n_rooms: int
    room_size_range: tuple[float, float] = (3.0, 6.0)
    wall_thickness_range: tuple[float, float] = (0.1, 0.3)
    symmetry: SymmetryMode = SymmetryMode.NONE
    object_density: float = 0.0
    object_categories: list[tuple[str, float]] = field(
        default_factory=lambda: [("door", 0.4), ("window", 0.4), ("chair", 0.2)]
    )
    seed: int = 0
    jitter: float = DEFAULT_JITTER

    def __post_init__(self):
        if isinstance(self.symmetry, str):
            self.symmetry = SymmetryMode(self.symmetry)
        self.room_size_range = tuple(self.room_size_range)
        self.wall_thickness_range = tuple(self.wall_thickness_range)
        self.object_categories = [tuple(c) for c in self.object_categories]
        if self.n_rooms < 1:
            raise ValueError("n_rooms must be >= 1")
        for lo, hi in (self.room_size_range, self.wall_thickness_range):
            if lo > hi or lo <= 0:
                raise ValueError("ranges must be ordered and positive")
        if not 0.0 <= self.object_density <= 0.8:
            raise ValueError("object_density must lie in [0, 0.8]")

    @classmethod
    def from_dict(cls, data: dict) -> "LayoutSpec":
        return cls(**data)


@dataclass
class RoomInfo:
    """Local-frame description of a generated room."""

    id: str
    center: np.ndarray  # local frame
    half_w: float
    half_h: float
    plane_ids: dict[str, str]  # wall key (+x, -x, +y, -y) -> plane id


@dataclass
class Adjacency:
    room_a: str
    room_b: str
    plane_a: str  # facing wall of room_a
    plane_b: str  # facing wall of room_b
    axis: str  # "x" or "y": direction from room_a to room_b


@dataclass
class LayoutMetadata:
    seed: int
    symmetry: SymmetryMode
    rooms: dict[str, RoomInfo]
    adjacency: list[Adjacency]
    world_rotation: np.ndarray  # local -> world
    world_translation: np.ndarray
    certified_isometry: dict | None = None  # world frame: {"R": .., "t": ..}
    symmetry_pairs: dict[str, str] | None = None  # room -> image under isometry
    leftover_objects: list[str] = field(default_factory=list)
    symmetry_exact: bool = True

    def to_dict(self) -> dict:
        iso = None
        if self.certified_isometry is not None:
            iso = {
                "R": [list(map(float, row)) for row in self.certified_isometry["R"]],
                "t": list(map(float, self.certified_isometry["t"])),
            }
        return {
            "seed": self.seed,
            "symmetry": self.symmetry.value,
            "certified_isometry": iso,
            "symmetry_pairs": self.symmetry_pairs,
            "leftover_objects": list(self.leftover_objects),
            "symmetry_exact": self.symmetry_exact,
        }


@dataclass
class Layout:
    graph: SceneGraph
    meta: LayoutMetadata


_WALL_KEYS = ("+x", "-x", "+y", "-y")
_WALL_DIRS = {
    "+x": np.array([1.0, 0.0, 0.0]),
    "-x": np.array([-1.0, 0.0, 0.0]),
    "+y": np.array([0.0, 1.0, 0.0]),
    "-y": np.array([0.0, -1.0, 0.0]),
}


def _grid_shape(n: int, symmetric: bool) -> tuple[int, int]:
    cols = math.ceil(math.sqrt(n))
    rows = math.ceil(n / cols)
    if symmetric and rows * cols != n:
        return 1, n
    return rows, cols


def generate_layout(spec: LayoutSpec) -> Layout:
    """Generate a validated A-Graph of non-overlapping rectangular rooms.

    Deterministic per seed; the returned metadata carries room extents,
    grid adjacency and (for global symmetry) the certified isometry.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_rooms
    symmetric = spec.symmetry is SymmetryMode.GLOBAL
    rows, cols = _grid_shape(n, symmetric)

    lo, hi = spec.room_size_range
    thickness = float(rng.uniform(*spec.wall_thickness_range))
    jitter = 0.0 if symmetric else spec.jitter

    if spec.symmetry is SymmetryMode.NONE:
        widths = rng.uniform(lo, hi, size=n)
        heights = rng.uniform(lo, hi, size=n)
    else:
        w = float(rng.uniform(lo, hi))
        h = float(rng.uniform(lo, hi))
        widths = np.full(n, w)
        heights = np.full(n, h)

    pitch_x = hi + thickness + 2.0 * jitter
    pitch_y = hi + thickness + 2.0 * jitter

    rooms: dict[str, RoomInfo] = {}
    order = []
    cells = {}
    for idx in range(n):
        row, col = divmod(idx, cols)
        cx = col * pitch_x
        cy = row * pitch_y
        if jitter > 0:
            cx += float(rng.uniform(-jitter, jitter))
            cy += float(rng.uniform(-jitter, jitter))
        rid = f"room_{idx:03d}"
        info = RoomInfo(
            id=rid,
            center=np.array([cx, cy, 0.0]),
            half_w=float(widths[idx]) / 2.0,
            half_h=float(heights[idx]) / 2.0,
            plane_ids={key: f"plane_{idx:03d}_{key}" for key in _WALL_KEYS},
        )
        rooms[rid] = info
        order.append(rid)
        cells[(row, col)] = rid

    adjacency: list[Adjacency] = []
    for (row, col), rid in sorted(cells.items()):
        right = cells.get((row, col + 1))
        if right is not None:
            adjacency.append(
                Adjacency(rid, right, rooms[rid].plane_ids["+x"],
                          rooms[right].plane_ids["-x"], axis="x")
            )
        above = cells.get((row + 1, col))
        if above is not None:
            adjacency.append(
                Adjacency(rid, above, rooms[rid].plane_ids["+y"],
                          rooms[above].plane_ids["-y"], axis="y")
            )

    yaw = float(rng.uniform(0.0, 2.0 * math.pi))
    world_r = yaw_rotation(yaw)
    world_t = np.array([float(rng.uniform(-20, 20)), float(rng.uniform(-20, 20)), 0.0])

    room_nodes = []
    plane_nodes = []
    relations = []
    for rid in order:
        info = rooms[rid]
        world_center = world_r @ info.center + world_t
        room_nodes.append(RoomNode(id=rid, center=world_center))
        for key in _WALL_KEYS:
            half = info.half_w if key in ("+x", "-x") else info.half_h
            outward = _WALL_DIRS[key]
            point_local = info.center + outward * half
            normal = world_r @ (-outward)
            point = world_r @ point_local + world_t
            offset = -float(normal @ point)
            pid = info.plane_ids[key]
            plane_nodes.append(PlaneNode(id=pid, normal=normal, offset=offset))
            relations.append(Relation(RelationKind.ROOM_HAS_PLANE, rid, pid))

    meta = LayoutMetadata(
        seed=spec.seed,
        symmetry=spec.symmetry,
        rooms=rooms,
        adjacency=adjacency,
        world_rotation=world_r,
        world_translation=world_t,
    )

    if symmetric:
        centers = np.array([rooms[rid].center for rid in order])
        pivot = centers.mean(axis=0)
        r180 = yaw_rotation(math.pi)
        pairs: dict[str, str] = {}
        for rid in order:
            image = r180 @ (rooms[rid].center - pivot) + pivot
            partner = min(
                order, key=lambda o: float(np.linalg.norm(rooms[o].center - image))
            )
            pairs[rid] = partner
        # World-frame isometry: conjugate the local 180-degree rotation.
        r_world = world_r @ r180 @ world_r.T
        pivot_world = world_r @ pivot + world_t
        t_world = pivot_world - r_world @ pivot_world
        meta.certified_isometry = {"R": r_world, "t": t_world}
        meta.symmetry_pairs = pairs

    graph = SceneGraph(
        kind=GraphKind.AGRAPH,
        rooms=room_nodes,
        planes=plane_nodes,
        relations=relations,
    )
    return Layout(graph=graph, meta=meta)


# -- object placement ------------------------------------------------------


@dataclass
class _Placement:
    category: str
    kind: str  # "wall", "free" or "doorway"
    room: str
    wall: str | None = None
    along: float = 0.0  # fraction of the wall's half-extent
    depth: float = 0.05  # meters inside the wall face
    z: float = 1.0
    dx: float = 0.0  # free placement, fraction of half extents
    dy: float = 0.0
    adjacency: Adjacency | None = None


def _target_object_count(n_rooms: int, density: float) -> int:
    n_struct = 5 * n_rooms  # one room node plus four planes each
    return int(round(density * n_struct / (1.0 - density)))


def _sample_category(rng, categories: list[tuple[str, float]]) -> str:
    names = [c for c, _ in categories]
    weights = np.array([w for _, w in categories], dtype=float)
    weights /= weights.sum()
    return str(rng.choice(names, p=weights))


def _sample_placement(rng, spec: LayoutSpec, meta: LayoutMetadata, room_id: str) -> _Placement:
    category = _sample_category(rng, spec.object_categories)
    if category == "doorway" and meta.adjacency:
        adj = meta.adjacency[int(rng.integers(len(meta.adjacency)))]
        return _Placement(category=category, kind="doorway", room=adj.room_a, adjacency=adj)
    if category in WALL_OBJECT_CATEGORIES:
        return _Placement(
            category=category,
            kind="wall",
            room=room_id,
            wall=_WALL_KEYS[int(rng.integers(4))],
            along=float(rng.uniform(-0.8, 0.8)),
            depth=float(rng.uniform(0.02, 0.12)),
            z=float(rng.uniform(0.5, 1.5)),
        )
    return _Placement(
        category=category,
        kind="free",
        room=room_id,
        dx=float(rng.uniform(-0.6, 0.6)),
        dy=float(rng.uniform(-0.6, 0.6)),
        z=float(rng.uniform(0.3, 1.5)),
    )


def _placement_local_position(meta: LayoutMetadata, p: _Placement) -> np.ndarray:
    info = meta.rooms[p.room]
    if p.kind == "doorway":
        adj = p.adjacency
        a, b = meta.rooms[adj.room_a], meta.rooms[adj.room_b]
        if adj.axis == "x":
            x = (a.center[0] + a.half_w + b.center[0] - b.half_w) / 2.0
            y = (a.center[1] + b.center[1]) / 2.0
        else:
            x = (a.center[0] + b.center[0]) / 2.0
            y = (a.center[1] + a.half_h + b.center[1] - b.half_h) / 2.0
        return np.array([x, y, p.z])
    if p.kind == "wall":
        outward = _WALL_DIRS[p.wall]
        half = info.half_w if p.wall in ("+x", "-x") else info.half_h
        other_half = info.half_h if p.wall in ("+x", "-x") else info.half_w
        perp = _WALL_DIRS["+y" if p.wall in ("+x", "-x") else "+x"]
        pos = info.center + outward * (half - p.depth) + perp * (p.along * other_half)
        return np.array([pos[0], pos[1], p.z])
    return np.array(
        [
            info.center[0] + p.dx * info.half_w,
            info.center[1] + p.dy * info.half_h,
            p.z,
        ]
    )


def _translate_placement(p: _Placement, room_id: str) -> _Placement:
    return replace(p, room=room_id)


def _mirror_placement(p: _Placement, meta: LayoutMetadata) -> _Placement:
    """Image of a placement under the layout's 180-degree symmetry."""
    target = meta.symmetry_pairs[p.room]
    flip = {"+x": "-x", "-x": "+x", "+y": "-y", "-y": "+y"}
    q = replace(p, room=target)
    if p.kind == "wall":
        q.wall = flip[p.wall]
        q.along = -p.along
    elif p.kind == "free":
        q.dx, q.dy = -p.dx, -p.dy
    return q


def place_objects(layout: Layout, spec: LayoutSpec, params: RelationParams | None = None) -> Layout:
    """Add objects until the object-node fraction reaches the requested
    density, replicating placements under the layout symmetry, then generate
    object-structure relations."""
    params = params or RelationParams()
    n_obj = _target_object_count(spec.n_rooms, spec.object_density)
    if n_obj == 0:
        return layout
    if not spec.object_categories:
        raise ValueError("object placement requires at least one category")

    rng = np.random.default_rng(spec.seed + 0x9E3779B9)
    meta = layout.meta
    room_order = sorted(meta.rooms)

    placements: list[_Placement] = []
    leftover_start = None
    if spec.symmetry is SymmetryMode.LOCAL:
        per_orbit = len(room_order)
        while len(placements) + per_orbit <= n_obj:
            proto = _sample_placement(rng, spec, meta, room_order[0])
            if proto.kind == "doorway":
                continue
            placements.extend(_translate_placement(proto, rid) for rid in room_order)
        leftover_start = len(placements)
    elif spec.symmetry is SymmetryMode.GLOBAL:
        while len(placements) < n_obj:
            room = room_order[int(rng.integers(len(room_order)))]
            proto = _sample_placement(rng, spec, meta, room)
            if proto.kind == "doorway":
                continue
            mirrored = _mirror_placement(proto, meta)
            if len(placements) + 2 <= n_obj:
                # Place the object together with its image, even when the
                # image lands in the same (self-paired) room.
                placements.extend([proto, mirrored])
            else:
                placements.append(proto)  # odd target count: unpaired leftover
                leftover_start = len(placements) - 1
        if leftover_start is None:
            leftover_start = len(placements)
    if spec.symmetry is SymmetryMode.NONE or leftover_start is not None:
        while len(placements) < n_obj:
            room = room_order[int(rng.integers(len(room_order)))]
            placements.append(_sample_placement(rng, spec, meta, room))
        if leftover_start is None:
            leftover_start = 0 if spec.symmetry is SymmetryMode.NONE else leftover_start

    objects = list(layout.graph.objects)
    relations = list(layout.graph.relations)
    leftover_ids: list[str] = []
    for i, p in enumerate(placements):
        local = _placement_local_position(meta, p)
        world = meta.world_rotation @ local + meta.world_translation
        axes = np.asarray(rng.uniform(0.1, 0.4, size=3))
        oid = f"obj_{i:03d}"
        objects.append(
            ObjectInstance(
                id=oid,
                category=p.category,
                ellipsoid=Ellipsoid(center=world, semi_axes=axes, rotation=np.eye(3)),
            )
        )
        if spec.symmetry is not SymmetryMode.NONE and i >= leftover_start:
            leftover_ids.append(oid)
        if p.kind == "doorway":
            adj = p.adjacency
            relations.extend(
                [
                    Relation(RelationKind.OBJECT_IN_ROOM, oid, adj.room_a),
                    Relation(RelationKind.OBJECT_IN_ROOM, oid, adj.room_b),
                    Relation(RelationKind.OBJECT_ON_PLANE, oid, adj.plane_a),
                    Relation(RelationKind.OBJECT_ON_PLANE, oid, adj.plane_b),
                ]
            )

    graph = replace(layout.graph, objects=objects, relations=relations)
    graph = generate_relations(graph, params)
    meta_out = replace(
        meta,
        leftover_objects=leftover_ids,
        symmetry_exact=(spec.symmetry is SymmetryMode.NONE or not leftover_ids),
    )
    return Layout(graph=graph, meta=meta_out)


# -- S-Graph derivation ----------------------------------------------------


@dataclass
class RigidOffset:
    yaw: float = 0.0
    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @classmethod
    def from_dict(cls, data: dict) -> "RigidOffset":
        return cls(yaw=data.get("yaw", 0.0), translation=tuple(data.get("translation", (0, 0, 0))))


@dataclass
class SGraphDerivationSpec:
    observed_rooms: list[str]
    position_noise_sigma: float = 0.0
    angle_noise_sigma: float = 0.0
    rigid_offset: RigidOffset = field(default_factory=RigidOffset)
    object_dropout: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.rigid_offset, dict):
            self.rigid_offset = RigidOffset.from_dict(self.rigid_offset)
        if not 0.0 <= self.object_dropout < 1.0:
            raise ValueError("object_dropout must lie in [0, 1)")
        if self.position_noise_sigma < 0 or self.angle_noise_sigma < 0:
            raise ValueError("noise sigmas must be >= 0")

    @classmethod
    def from_dict(cls, data: dict) -> "SGraphDerivationSpec":
        return cls(**data)


@dataclass
class Derivation:
    """An S-Graph plus the ground-truth correspondence to its A-Graph."""

    graph: SceneGraph
    room_map: dict[str, str]  # s-id -> a-id
    plane_map: dict[str, str]
    object_map: dict[str, str]


def derive_sgraph(a: SceneGraph, d: SGraphDerivationSpec) -> Derivation:
    """Copy the observed rooms (planes, objects and their relations), apply
    the rigid offset and optional Gaussian noise, and rename every id."""
    a_room_ids = {r.id for r in a.rooms}
    if len(set(d.observed_rooms)) != len(d.observed_rooms):
        raise ValueError("observed_rooms contains repeats")
    for rid in d.observed_rooms:
        if rid not in a_room_ids:
            raise ValueError(f"unknown room id {rid!r}")

    rng = np.random.default_rng(d.seed)
    rot = yaw_rotation(d.rigid_offset.yaw)
    shift = np.asarray(d.rigid_offset.translation, dtype=float)
    sigma_p = d.position_noise_sigma
    sigma_a = d.angle_noise_sigma

    def warp_point(x: np.ndarray) -> np.ndarray:
        out = rot @ x + shift
        if sigma_p > 0:
            out = out + rng.normal(0.0, sigma_p, size=3)
        return out

    observed = list(d.observed_rooms)
    room_map = {f"s_room_{i:03d}": rid for i, rid in enumerate(observed)}

    rooms_by_id = {r.id: r for r in a.rooms}
    s_rooms = []
    rev_rooms: dict[str, str] = {}
    for sid, rid in room_map.items():
        rev_rooms[rid] = sid
        s_rooms.append(RoomNode(id=sid, center=warp_point(rooms_by_id[rid].center)))

    plane_map: dict[str, str] = {}
    rev_planes: dict[str, str] = {}
    s_planes = []
    s_relations: list[Relation] = []
    counter = 0
    planes_by_id = {p.id: p for p in a.planes}
    for sid, rid in room_map.items():
        for plane in sorted(a.planes_of_room(rid), key=lambda p: p.id):
            spid = f"s_plane_{counter:03d}"
            counter += 1
            normal = rot @ plane.normal
            offset = plane.offset - float(normal @ shift)
            if sigma_a > 0:
                normal = yaw_rotation(float(rng.normal(0.0, sigma_a))) @ normal
            if sigma_p > 0:
                offset += float(rng.normal(0.0, sigma_p))
            plane_map[spid] = plane.id
            rev_planes[plane.id] = spid
            s_planes.append(PlaneNode(id=spid, normal=normal, offset=offset))
            s_relations.append(Relation(RelationKind.ROOM_HAS_PLANE, sid, spid))

    observed_set = set(observed)
    candidate_objects = []
    for obj in sorted(a.objects, key=lambda o: o.id):
        in_rooms = {
            rel.target
            for rel in a.relations
            if rel.kind is RelationKind.OBJECT_IN_ROOM and rel.source == obj.id
        }
        if in_rooms & observed_set:
            candidate_objects.append(obj)

    object_map: dict[str, str] = {}
    rev_objects: dict[str, str] = {}
    s_objects = []
    for i, obj in enumerate(candidate_objects):
        if d.object_dropout > 0 and rng.random() < d.object_dropout:
            continue
        soid = f"s_obj_{i:03d}"
        object_map[soid] = obj.id
        rev_objects[obj.id] = soid
        ell = obj.ellipsoid
        s_objects.append(
            ObjectInstance(
                id=soid,
                category=obj.category,
                ellipsoid=Ellipsoid(
                    center=warp_point(ell.center),
                    semi_axes=ell.semi_axes.copy(),
                    rotation=rot @ ell.rotation,
                ),
            )
        )

    rename = {**rev_rooms, **rev_planes, **rev_objects}
    for rel in a.relations:
        if rel.kind is RelationKind.ROOM_HAS_PLANE:
            continue
        if rel.source in rename and rel.target in rename:
            s_relations.append(Relation(rel.kind, rename[rel.source], rename[rel.target]))

    graph = SceneGraph(
        kind=GraphKind.SGRAPH,
        rooms=s_rooms,
        planes=s_planes,
        objects=s_objects,
        relations=s_relations,
    )
    return Derivation(
        graph=graph, room_map=room_map, plane_map=plane_map, object_map=object_map
    )
