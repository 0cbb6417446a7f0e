"""Correspondence search between an S-Graph and a prior A-Graph.

Candidates are generated per layer, pruned by semantic containment of the
object content attached to rooms and planes, and verified hierarchically:
room combinations first, extended to plane assignments only while the
accumulated geometric checks hold.  A flat exhaustive searcher is provided
as a test oracle.

Geometric consistency is built from rigid-motion-invariant features
(pairwise room-center distances, plane-to-owner-center distances and signed
horizontal angles between wall normals and room-to-room directions), so no
transform is ever estimated.  Signed angles are gravity-referenced, which
keeps a square room ambiguous under its four yaw orientations while
rejecting in-plane mirror assignments.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import signed_horizontal_angle, wrap_angle
from .graph import (
    CategoryCounts,
    RelationKind,
    SceneGraph,
    semantic_content,
    validate,
)

RESIDUAL_TIE_TOL = 1e-12


class MatchOutcome(str, Enum):
    UNIQUE = "unique"
    AMBIGUOUS = "ambiguous"
    DEFERRED = "deferred"
    NO_MATCH = "no_match"


class Level(str, Enum):
    ROOM = "room"
    PLANE = "plane"


@dataclass
class MatchConfig:
    theta_room_dist: float = 0.5
    theta_plane_angle: float = 0.1
    theta_plane_dist: float = 0.25
    delta_gap: float = 0.05
    use_semantic_filter: bool = True
    max_candidates: int = 1_000_000

    def __post_init__(self):
        for name in ("theta_room_dist", "theta_plane_angle", "theta_plane_dist"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.delta_gap < 0:
            raise ValueError("delta_gap must be >= 0")
        if self.max_candidates < 1:
            raise ValueError("max_candidates must be positive")


@dataclass
class CandidateAssignment:
    """Injective S-to-A node mapping with an aggregate inconsistency score."""

    room_map: dict[str, str]
    plane_map: dict[str, str]
    residual: float

    def sort_key(self):
        return (
            self.residual,
            tuple(sorted(self.room_map.items())),
            tuple(sorted(self.plane_map.items())),
        )

    def same_mapping(self, other: "CandidateAssignment") -> bool:
        return self.room_map == other.room_map and self.plane_map == other.plane_map


@dataclass
class MatchStats:
    candidates_before_filter: int = 0
    candidates_after_filter: int = 0
    combinations_evaluated: int = 0
    elapsed: float = 0.0


@dataclass
class MatchResult:
    outcome: MatchOutcome
    assignments: list[CandidateAssignment]
    stats: MatchStats
    partial: bool = False  # true when the combinatorial cap was hit

    @property
    def best(self) -> CandidateAssignment | None:
        return self.assignments[0] if self.assignments else None

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "assignments": [
                {
                    "rooms": dict(sorted(a.room_map.items())),
                    "planes": dict(sorted(a.plane_map.items())),
                    "residual": a.residual,
                }
                for a in self.assignments
            ],
            "stats": {
                "candidates_before_filter": self.stats.candidates_before_filter,
                "candidates_after_filter": self.stats.candidates_after_filter,
                "combinations_evaluated": self.stats.combinations_evaluated,
                "elapsed": self.stats.elapsed,
            },
            "partial": self.partial,
        }


# -- semantic filter -------------------------------------------------------


def semantic_filter_accepts(content_a: CategoryCounts, content_s: CategoryCounts) -> bool:
    """Containment rule: every category observed on the S side must exist on
    the A side with at least the observed count."""
    a = content_a.counts if isinstance(content_a, CategoryCounts) else content_a
    s = content_s.counts if isinstance(content_s, CategoryCounts) else content_s
    return all(a.get(cat, 0) >= n for cat, n in s.items())


# -- per-graph feature cache ----------------------------------------------


class _Features:
    """Geometry and semantics of one graph, precomputed for the search."""

    def __init__(self, g: SceneGraph):
        self.graph = g
        self.room_ids = sorted(r.id for r in g.rooms)
        rooms = {r.id: r for r in g.rooms}
        self.center = {rid: rooms[rid].center for rid in self.room_ids}
        self.room_planes: dict[str, list[str]] = {}
        self.plane_owner: dict[str, str] = {}
        self.normal: dict[str, np.ndarray] = {}
        self.plane_dist: dict[str, float] = {}
        planes = {p.id: p for p in g.planes}
        for rid in self.room_ids:
            pids = [
                rel.target
                for rel in g.relations
                if rel.kind is RelationKind.ROOM_HAS_PLANE and rel.source == rid
            ]
            self.room_planes[rid] = sorted(pids)
            for pid in pids:
                plane = planes[pid]
                self.plane_owner[pid] = rid
                self.normal[pid] = plane.normal
                self.plane_dist[pid] = plane.signed_distance(rooms[rid].center)
        self.room_content = {rid: semantic_content(g, rid) for rid in self.room_ids}
        self.plane_content = {pid: semantic_content(g, pid) for pid in self.plane_owner}
        # Hashable content signatures let the filter memoize per unique
        # content pair instead of per node pair.
        self.room_sig = {
            rid: tuple(sorted(c.counts.items())) for rid, c in self.room_content.items()
        }
        self.plane_sig = {
            pid: tuple(sorted(c.counts.items())) for pid, c in self.plane_content.items()
        }

    def center_dist(self, r1: str, r2: str) -> float:
        return float(np.linalg.norm(self.center[r1] - self.center[r2]))

    def plane_pair_angle(self, p1: str, p2: str) -> float | None:
        return signed_horizontal_angle(self.normal[p1], self.normal[p2])

    def plane_to_room_angle(self, pid: str, rid: str) -> float | None:
        """Signed horizontal angle from the plane normal to the direction
        from the owning room's center toward another room's center."""
        u = self.center[rid] - self.center[self.plane_owner[pid]]
        return signed_horizontal_angle(self.normal[pid], u)


def _angle_residual(a: float | None, b: float | None) -> float | None:
    """Absolute wrapped difference; None when either angle is undefined
    (the corresponding check is skipped)."""
    if a is None or b is None:
        return None
    return abs(wrap_angle(a - b))


# -- candidate generation --------------------------------------------------


@dataclass
class CandidateStats:
    before: int
    after: int


def candidate_pairs(
    a: SceneGraph, s: SceneGraph, level: Level, cfg: MatchConfig
) -> tuple[list[tuple[str, str]], CandidateStats]:
    """All same-layer (s-id, a-id) pairs, pruned by semantic containment when
    the filter is enabled."""
    _require_valid(a, "a")
    _require_valid(s, "s")
    fa, fs = _Features(a), _Features(s)
    return _candidate_pairs(fa, fs, level, cfg)


def _candidate_pairs(
    fa: _Features, fs: _Features, level: Level, cfg: MatchConfig
) -> tuple[list[tuple[str, str]], CandidateStats]:
    if level is Level.ROOM:
        s_ids, a_ids = fs.room_ids, fa.room_ids
        s_sig, a_sig = fs.room_sig, fa.room_sig
    else:
        s_ids = sorted(fs.plane_owner)
        a_ids = sorted(fa.plane_owner)
        s_sig, a_sig = fs.plane_sig, fa.plane_sig
    pairs = [(sid, aid) for sid in s_ids for aid in a_ids]
    before = len(pairs)
    if cfg.use_semantic_filter:
        cache: dict[tuple, bool] = {}
        kept = []
        for sid, aid in pairs:
            key = (s_sig[sid], a_sig[aid])
            verdict = cache.get(key)
            if verdict is None:
                a_counts = dict(key[1])
                verdict = cache[key] = all(
                    a_counts.get(cat, 0) >= n for cat, n in key[0]
                )
            if verdict:
                kept.append((sid, aid))
        pairs = kept
    return pairs, CandidateStats(before=before, after=len(pairs))


# -- geometric consistency -------------------------------------------------


def geometric_consistency(
    a: SceneGraph, s: SceneGraph, cand: CandidateAssignment, cfg: MatchConfig
) -> float | None:
    """Normalized residual of a candidate assignment, or None when any
    pairwise check exceeds its threshold."""
    if not cand.room_map:
        raise ValueError("candidate assignment must map at least one room")
    fa, fs = _Features(a), _Features(s)
    return _consistency_residual(fa, fs, cand.room_map, cand.plane_map, cfg)


def _consistency_residual(
    fa: _Features,
    fs: _Features,
    room_map: dict[str, str],
    plane_map: dict[str, str],
    cfg: MatchConfig,
) -> float | None:
    terms: list[float] = []

    s_rooms = sorted(room_map)
    for s1, s2 in itertools.combinations(s_rooms, 2):
        diff = abs(fs.center_dist(s1, s2) - fa.center_dist(room_map[s1], room_map[s2]))
        if diff > cfg.theta_room_dist:
            return None
        terms.append(diff / cfg.theta_room_dist)

    s_planes = sorted(plane_map)
    for sp in s_planes:
        diff = abs(fs.plane_dist[sp] - fa.plane_dist[plane_map[sp]])
        if diff > cfg.theta_plane_dist:
            return None
        terms.append(diff / cfg.theta_plane_dist)

    for sp1, sp2 in itertools.combinations(s_planes, 2):
        diff = _angle_residual(
            fs.plane_pair_angle(sp1, sp2),
            fa.plane_pair_angle(plane_map[sp1], plane_map[sp2]),
        )
        if diff is None:
            continue
        if diff > cfg.theta_plane_angle:
            return None
        terms.append(diff / cfg.theta_plane_angle)

    # Couples wall orientations to the room arrangement; without it, wall
    # assignments could rotate freely relative to the room-center layout.
    for sp in s_planes:
        owner = fs.plane_owner[sp]
        for s_other in s_rooms:
            if s_other == owner:
                continue
            diff = _angle_residual(
                fs.plane_to_room_angle(sp, s_other),
                fa.plane_to_room_angle(plane_map[sp], room_map[s_other]),
            )
            if diff is None:
                continue
            if diff > cfg.theta_plane_angle:
                return None
            terms.append(diff / cfg.theta_plane_angle)

    return sum(terms) / len(terms) if terms else 0.0


# -- hierarchical search ---------------------------------------------------


class _CapExceeded(Exception):
    pass


class _Search:
    def __init__(
        self,
        fa: _Features,
        fs: _Features,
        cfg: MatchConfig,
        plane_allowed: dict[str, set[str]],
    ):
        self.fa = fa
        self.fs = fs
        self.cfg = cfg
        # Per S-plane set of A-planes surviving the semantic filter,
        # precomputed so the DFS does a set lookup instead of re-evaluating
        # the containment rule at every extension.
        self.plane_allowed = plane_allowed
        self.combinations = 0
        self.results: list[CandidateAssignment] = []

    def _tick(self) -> None:
        self.combinations += 1
        if self.combinations >= self.cfg.max_candidates:
            raise _CapExceeded

    def run(self, room_candidates: dict[str, list[str]]) -> bool:
        """Returns False when the combinatorial cap was exceeded."""
        s_rooms = self.fs.room_ids
        try:
            self._extend_rooms(s_rooms, 0, {}, room_candidates)
        except _CapExceeded:
            self.combinations = self.cfg.max_candidates
            return False
        return True

    def _extend_rooms(self, s_rooms, idx, room_map, room_candidates):
        if idx == len(s_rooms):
            self._extend_planes(room_map, 0, {}, [])
            return
        sid = s_rooms[idx]
        used = set(room_map.values())
        for aid in room_candidates[sid]:
            if aid in used:
                continue
            self._tick()
            if not self._room_consistent(sid, aid, room_map):
                continue
            room_map[sid] = aid
            self._extend_rooms(s_rooms, idx + 1, room_map, room_candidates)
            del room_map[sid]

    def _room_consistent(self, sid, aid, room_map) -> bool:
        for s_prev, a_prev in room_map.items():
            diff = abs(
                self.fs.center_dist(sid, s_prev) - self.fa.center_dist(aid, a_prev)
            )
            if diff > self.cfg.theta_room_dist:
                return False
        return True

    def _extend_planes(self, room_map, idx, plane_map, s_plane_order):
        if idx == 0:
            s_plane_order = [
                pid for rid in sorted(room_map) for pid in self.fs.room_planes[rid]
            ]
        if idx == len(s_plane_order):
            residual = _consistency_residual(
                self.fa, self.fs, room_map, plane_map, self.cfg
            )
            if residual is not None:
                self.results.append(
                    CandidateAssignment(dict(room_map), dict(plane_map), residual)
                )
            return
        sp = s_plane_order[idx]
        a_room = room_map[self.fs.plane_owner[sp]]
        used = set(plane_map.values())
        for ap in self.fa.room_planes[a_room]:
            if ap in used:
                continue
            self._tick()
            if not self._plane_consistent(sp, ap, room_map, plane_map):
                continue
            plane_map[sp] = ap
            self._extend_planes(room_map, idx + 1, plane_map, s_plane_order)
            del plane_map[sp]

    def _plane_consistent(self, sp, ap, room_map, plane_map) -> bool:
        cfg = self.cfg
        if ap not in self.plane_allowed[sp]:
            return False
        if abs(self.fs.plane_dist[sp] - self.fa.plane_dist[ap]) > cfg.theta_plane_dist:
            return False
        for sp_prev, ap_prev in plane_map.items():
            diff = _angle_residual(
                self.fs.plane_pair_angle(sp, sp_prev),
                self.fa.plane_pair_angle(ap, ap_prev),
            )
            if diff is not None and diff > cfg.theta_plane_angle:
                return False
        owner = self.fs.plane_owner[sp]
        for s_other, a_other in room_map.items():
            if s_other == owner:
                continue
            diff = _angle_residual(
                self.fs.plane_to_room_angle(sp, s_other),
                self.fa.plane_to_room_angle(ap, a_other),
            )
            if diff is not None and diff > cfg.theta_plane_angle:
                return False
        return True


def _require_valid(g: SceneGraph, name: str) -> None:
    diags = validate(g)
    if diags:
        raise ValueError(f"graph {name!r} does not validate: " + "; ".join(diags))


def _decide_outcome(
    assignments: list[CandidateAssignment], cfg: MatchConfig
) -> tuple[MatchOutcome, list[CandidateAssignment]]:
    if not assignments:
        return MatchOutcome.NO_MATCH, []
    if len(assignments) == 1:
        return MatchOutcome.UNIQUE, assignments
    best = assignments[0].residual
    gap = assignments[1].residual - best
    if cfg.delta_gap == 0.0:
        tied = [a for a in assignments if a.residual - best <= RESIDUAL_TIE_TOL]
        if len(tied) >= 2:
            return MatchOutcome.AMBIGUOUS, tied
        return MatchOutcome.UNIQUE, assignments
    if gap >= cfg.delta_gap:
        return MatchOutcome.UNIQUE, assignments
    near = [a for a in assignments if a.residual - best < cfg.delta_gap]
    return MatchOutcome.DEFERRED, near


def match(a: SceneGraph, s: SceneGraph, cfg: MatchConfig | None = None) -> MatchResult:
    """Top-down correspondence search covering every S-room.

    Room-level candidates are filtered and extended injectively under the
    room-distance check; surviving room assignments are extended plane by
    plane under the distance, angle and orientation checks.  Complete
    consistent assignments are ranked by normalized residual.
    """
    cfg = cfg or MatchConfig()
    _require_valid(a, "a")
    _require_valid(s, "s")
    if not s.rooms:
        raise ValueError("S-Graph must contain at least one room")

    start = time.perf_counter()
    fa, fs = _Features(a), _Features(s)

    room_pairs, room_stats = _candidate_pairs(fa, fs, Level.ROOM, cfg)
    plane_pairs, plane_stats = _candidate_pairs(fa, fs, Level.PLANE, cfg)
    room_candidates: dict[str, list[str]] = {rid: [] for rid in fs.room_ids}
    for sid, aid in room_pairs:
        room_candidates[sid].append(aid)
    plane_allowed: dict[str, set[str]] = {pid: set() for pid in fs.plane_owner}
    for spid, apid in plane_pairs:
        plane_allowed[spid].add(apid)

    search = _Search(fa, fs, cfg, plane_allowed)
    completed = search.run(room_candidates)

    assignments = sorted(search.results, key=CandidateAssignment.sort_key)
    outcome, reported = _decide_outcome(assignments, cfg)
    if outcome in (MatchOutcome.AMBIGUOUS, MatchOutcome.DEFERRED):
        assignments = reported + [x for x in assignments if x not in reported]

    stats = MatchStats(
        candidates_before_filter=room_stats.before + plane_stats.before,
        candidates_after_filter=room_stats.after + plane_stats.after,
        combinations_evaluated=search.combinations,
        elapsed=time.perf_counter() - start,
    )
    return MatchResult(
        outcome=outcome, assignments=assignments, stats=stats, partial=not completed
    )


# -- exhaustive oracle -----------------------------------------------------

BRUTE_FORCE_MAX_ROOMS = 4
BRUTE_FORCE_MAX_PLANES = 6


def brute_force_match(
    a: SceneGraph, s: SceneGraph, cfg: MatchConfig | None = None
) -> list[CandidateAssignment]:
    """Flat enumeration of every injective room and plane assignment with no
    hierarchical pruning; the checks are re-derived from the raw graphs so
    this can serve as an independent oracle for match()."""
    cfg = cfg or MatchConfig()
    if len(a.rooms) > BRUTE_FORCE_MAX_ROOMS:
        raise ValueError("brute_force_match: too many A-Graph rooms")
    for room in a.rooms:
        if len(a.planes_of_room(room.id)) > BRUTE_FORCE_MAX_PLANES:
            raise ValueError("brute_force_match: too many planes in a room")
    if not s.rooms:
        return []

    tables_a = _FlatTables(a)
    tables_s = _FlatTables(s)
    s_room_ids = sorted(tables_s.rooms)
    a_room_ids = sorted(tables_a.rooms)

    results: list[CandidateAssignment] = []
    for a_choice in itertools.permutations(a_room_ids, len(s_room_ids)):
        room_map = dict(zip(s_room_ids, a_choice))
        if cfg.use_semantic_filter and not all(
            semantic_filter_accepts(
                tables_a.content[room_map[sid]], tables_s.content[sid]
            )
            for sid in s_room_ids
        ):
            continue
        ok = True
        for s1, s2 in itertools.combinations(s_room_ids, 2):
            ds = np.linalg.norm(
                tables_s.rooms[s1].center - tables_s.rooms[s2].center
            )
            da = np.linalg.norm(
                tables_a.rooms[room_map[s1]].center - tables_a.rooms[room_map[s2]].center
            )
            if abs(float(ds) - float(da)) > cfg.theta_room_dist:
                ok = False
                break
        if not ok:
            continue

        per_room_options = []
        for sid in s_room_ids:
            s_planes = tables_s.room_planes[sid]
            a_planes = tables_a.room_planes[room_map[sid]]
            if len(s_planes) > len(a_planes):
                per_room_options = None
                break
            per_room_options.append(
                (s_planes, list(itertools.permutations(a_planes, len(s_planes))))
            )
        if per_room_options is None:
            continue

        for combo in itertools.product(*(opts for _, opts in per_room_options)):
            plane_map: dict[str, str] = {}
            for (s_planes, _), a_assigned in zip(per_room_options, combo):
                for sp, ap in zip(s_planes, a_assigned):
                    plane_map[sp] = ap
            residual = _flat_residual(tables_a, tables_s, room_map, plane_map, cfg)
            if residual is not None:
                results.append(CandidateAssignment(dict(room_map), plane_map, residual))

    results.sort(key=CandidateAssignment.sort_key)
    return results


class _FlatTables:
    """Plain lookup tables for the exhaustive oracle (no derived geometry)."""

    def __init__(self, g: SceneGraph):
        self.rooms = {r.id: r for r in g.rooms}
        self.planes = {p.id: p for p in g.planes}
        self.owner = {
            rel.target: rel.source
            for rel in g.relations
            if rel.kind is RelationKind.ROOM_HAS_PLANE
        }
        self.room_planes = {
            rid: sorted(
                (pid for pid, owner in self.owner.items() if owner == rid),
            )
            for rid in self.rooms
        }
        self.content = {
            nid: semantic_content(g, nid).counts
            for nid in list(self.rooms) + list(self.planes)
        }


def _flat_residual(ta: _FlatTables, ts: _FlatTables, room_map, plane_map, cfg) -> float | None:
    """Direct re-computation of every consistency term from the graphs."""
    a_rooms, s_rooms = ta.rooms, ts.rooms
    a_planes, s_planes = ta.planes, ts.planes
    a_owner, s_owner = ta.owner, ts.owner

    if cfg.use_semantic_filter:
        for sp, ap in plane_map.items():
            if not semantic_filter_accepts(ta.content[ap], ts.content[sp]):
                return None

    terms = []
    ids = sorted(room_map)
    for s1, s2 in itertools.combinations(ids, 2):
        ds = float(np.linalg.norm(s_rooms[s1].center - s_rooms[s2].center))
        da = float(
            np.linalg.norm(a_rooms[room_map[s1]].center - a_rooms[room_map[s2]].center)
        )
        diff = abs(ds - da)
        if diff > cfg.theta_room_dist:
            return None
        terms.append(diff / cfg.theta_room_dist)

    pids = sorted(plane_map)
    for sp in pids:
        ds = s_planes[sp].signed_distance(s_rooms[s_owner[sp]].center)
        da = a_planes[plane_map[sp]].signed_distance(
            a_rooms[a_owner[plane_map[sp]]].center
        )
        diff = abs(ds - da)
        if diff > cfg.theta_plane_dist:
            return None
        terms.append(diff / cfg.theta_plane_dist)

    for p1, p2 in itertools.combinations(pids, 2):
        ang_s = signed_horizontal_angle(s_planes[p1].normal, s_planes[p2].normal)
        ang_a = signed_horizontal_angle(
            a_planes[plane_map[p1]].normal, a_planes[plane_map[p2]].normal
        )
        diff = _angle_residual(ang_s, ang_a)
        if diff is None:
            continue
        if diff > cfg.theta_plane_angle:
            return None
        terms.append(diff / cfg.theta_plane_angle)

    for sp in pids:
        owner = s_owner[sp]
        for other in ids:
            if other == owner:
                continue
            ang_s = signed_horizontal_angle(
                s_planes[sp].normal, s_rooms[other].center - s_rooms[owner].center
            )
            ap = plane_map[sp]
            ang_a = signed_horizontal_angle(
                a_planes[ap].normal,
                a_rooms[room_map[other]].center - a_rooms[a_owner[ap]].center,
            )
            diff = _angle_residual(ang_s, ang_a)
            if diff is None:
                continue
            if diff > cfg.theta_plane_angle:
                return None
            terms.append(diff / cfg.theta_plane_angle)

    return sum(terms) / len(terms) if terms else 0.0
