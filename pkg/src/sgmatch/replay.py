"""Incremental-exploration replay and detection-metric evaluation.

Rooms are observed one at a time; after each, the matcher is re-run on the
sub-S-Graph and the outcome recorded, yielding the room count at which a
unique match first becomes available.  Also provides keyframe-trajectory
synthesis (to exercise doorway detection) and precision/recall/F1
computation for object detections.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import room_contains
from .graph import Keyframe, ObjectInstance, RelationKind, SceneGraph
from .matching import MatchConfig, MatchOutcome, match
from .relations import RelationParams
from .synth import SGraphDerivationSpec, derive_sgraph


@dataclass
class ConvergenceRow:
    k: int
    outcome: MatchOutcome
    elapsed: float
    n_solutions: int


@dataclass
class ConvergenceRecord:
    map_rooms: int
    rows: list[ConvergenceRow]
    first_unique_k: int | None

    def to_dict(self) -> dict:
        return {
            "map_rooms": self.map_rooms,
            "rows": [
                {
                    "k": r.k,
                    "outcome": r.outcome.value,
                    "elapsed": r.elapsed,
                    "n_solutions": r.n_solutions,
                }
                for r in self.rows
            ],
            "first_unique_k": self.first_unique_k,
        }


def run_exploration(
    a: SceneGraph,
    order: list[str],
    d: SGraphDerivationSpec,
    cfg: MatchConfig | None = None,
) -> ConvergenceRecord:
    """Re-run the matcher after each newly observed room.

    The outcome at k depends only on the first k rooms' subgraph; the
    derivation spec's noise/offset/seed settings are reused at every k.
    """
    cfg = cfg or MatchConfig()
    if len(set(order)) != len(order):
        raise ValueError("room order contains repeats")
    rows: list[ConvergenceRow] = []
    first_unique = None
    for k in range(1, len(order) + 1):
        derivation = derive_sgraph(a, replace(d, observed_rooms=list(order[:k])))
        result = match(a, derivation.graph, cfg)
        rows.append(
            ConvergenceRow(
                k=k,
                outcome=result.outcome,
                elapsed=result.stats.elapsed,
                n_solutions=len(result.assignments),
            )
        )
        if first_unique is None and result.outcome is MatchOutcome.UNIQUE:
            first_unique = k
    return ConvergenceRecord(
        map_rooms=len(a.rooms), rows=rows, first_unique_k=first_unique
    )


# -- trajectory synthesis --------------------------------------------------


def _shared_doorway(g: SceneGraph, room_a: str, room_b: str) -> ObjectInstance | None:
    in_room: dict[str, set[str]] = {}
    for rel in g.relations:
        if rel.kind is RelationKind.OBJECT_IN_ROOM:
            in_room.setdefault(rel.source, set()).add(rel.target)
    for obj in sorted(g.objects, key=lambda o: o.id):
        if obj.category != "doorway":
            continue
        rooms = in_room.get(obj.id, set())
        if room_a in rooms and room_b in rooms:
            return obj
    return None


def synth_trajectory(
    a: SceneGraph,
    order: list[str],
    step: float = 0.5,
    params: RelationParams | None = None,
) -> list[Keyframe]:
    """Keyframes along straight segments room-center -> doorway -> next
    room-center (midpoint of the centers when no doorway object links the
    rooms); points falling inside wall gaps are discarded so every
    consecutive keyframe pair sits inside a room.

    Each visited room contributes at least two keyframes regardless of the
    step size.
    """
    params = params or RelationParams()
    if not order:
        return []
    rooms = {r.id: r for r in a.rooms}

    def center(rid: str) -> np.ndarray:
        c = rooms[rid].center.copy()
        c[2] = 0.5
        return c

    waypoints: list[np.ndarray] = [center(order[0])]
    for prev, nxt in zip(order, order[1:]):
        doorway = _shared_doorway(a, prev, nxt)
        if doorway is not None:
            door = doorway.center.copy()
        else:
            # No mapped doorway: cross the shared wall on the straight line
            # between the room centers.
            door = 0.5 * (center(prev) + center(nxt))
        door[2] = 0.5
        waypoints.extend([door, center(nxt)])

    if len(waypoints) == 1:
        # No transitions; still provide two keyframes inside the room.
        other = waypoints[0] + np.array([0.3, 0.0, 0.0])
        return [
            Keyframe(id="kf_0000", position=waypoints[0], timestamp=0.0),
            Keyframe(id="kf_0001", position=other, timestamp=1.0),
        ]

    positions: list[np.ndarray] = []
    for p0, p1 in zip(waypoints, waypoints[1:]):
        length = float(np.linalg.norm(p1 - p0))
        n_steps = max(1, int(length // step))
        # Segment endpoints plus near-endpoint samples guarantee coverage of
        # both sides of each doorway even with a very large step.
        fractions = sorted({0.0, 0.03, *(i / n_steps for i in range(1, n_steps)), 0.97, 1.0})
        for f in fractions:
            positions.append(p0 + f * (p1 - p0))
    positions.append(waypoints[-1])

    keyframes: list[Keyframe] = []
    last = None
    for pos in positions:
        if last is not None and float(np.linalg.norm(pos - last)) < 1e-9:
            continue
        # Keep strictly interior points only (every wall plane strictly on
        # the room side): keyframe segments across a transition then straddle
        # both wall planes, which doorway detection relies on.
        contained = any(
            all(p.signed_distance(pos) > 0.0 for p in a.planes_of_room(rid))
            for rid in rooms
        )
        if not contained:
            continue
        keyframes.append(
            Keyframe(id=f"kf_{len(keyframes):04d}", position=pos, timestamp=float(len(keyframes)))
        )
        last = pos
    return keyframes


# -- detection metrics -----------------------------------------------------


@dataclass
class CategoryMetrics:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2.0 * p * r / (p + r) if p + r > 0 else 0.0


@dataclass
class DetectionReport:
    per_category: dict[str, CategoryMetrics]
    overall: CategoryMetrics
    matches: list[tuple[str, str, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        def metrics(m: CategoryMetrics) -> dict:
            return {
                "tp": m.tp,
                "fp": m.fp,
                "fn": m.fn,
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
            }

        return {
            "per_category": {c: metrics(m) for c, m in sorted(self.per_category.items())},
            "overall": metrics(self.overall),
            "matches": [
                {"pred": p, "gt": g, "distance": d} for p, g, d in self.matches
            ],
        }


def eval_detections(
    pred: list[ObjectInstance], gt: list[ObjectInstance], dist_thresh: float = 0.5
) -> DetectionReport:
    """Greedy per-category matching by ascending center distance.

    A (pred, gt) pair is accepted when both are still unmatched and their
    center distance is within the threshold; micro-averaged totals give the
    overall metrics.
    """
    if dist_thresh <= 0:
        raise ValueError("dist_thresh must be positive")
    categories = sorted({o.category for o in pred} | {o.category for o in gt})
    per_category: dict[str, CategoryMetrics] = {}
    matches: list[tuple[str, str, float]] = []
    overall = CategoryMetrics()
    for cat in categories:
        preds = [o for o in pred if o.category == cat]
        gts = [o for o in gt if o.category == cat]
        pairs = sorted(
            (
                (float(np.linalg.norm(p.center - g.center)), p.id, g.id)
                for p in preds
                for g in gts
            ),
        )
        used_pred: set[str] = set()
        used_gt: set[str] = set()
        for dist, pid, gid in pairs:
            if dist > dist_thresh or pid in used_pred or gid in used_gt:
                continue
            used_pred.add(pid)
            used_gt.add(gid)
            matches.append((pid, gid, dist))
        m = CategoryMetrics(
            tp=len(used_pred),
            fp=len(preds) - len(used_pred),
            fn=len(gts) - len(used_gt),
        )
        per_category[cat] = m
        overall.tp += m.tp
        overall.fp += m.fp
        overall.fn += m.fn
    return DetectionReport(per_category=per_category, overall=overall, matches=matches)
