"""Pydantic request/response models for the HTTP service.

Graph payloads mirror the on-disk JSON format (``format: 1``); structural
shape is checked by pydantic while domain validation (unit normals, plane
ownership, ...) stays in the core ``validate`` function, which runs when a
payload is converted to a ``SceneGraph``.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

Vec3 = list[float]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# -- graph payloads --------------------------------------------------------


class RoomModel(_Strict):
    id: str
    center: Vec3 = Field(min_length=3, max_length=3)


class PlaneModel(_Strict):
    id: str
    room: str
    normal: Vec3 = Field(min_length=3, max_length=3)
    offset: float


class EllipsoidModel(_Strict):
    center: Vec3 = Field(min_length=3, max_length=3)
    semi_axes: Vec3 = Field(min_length=3, max_length=3)
    rotation: list[float] = Field(min_length=9, max_length=9)


class ObjectModel(_Strict):
    id: str
    category: str
    ellipsoid: EllipsoidModel
    support_points: list[Vec3] | None = None


class KeyframeModel(_Strict):
    id: str
    position: Vec3 = Field(min_length=3, max_length=3)
    t: float


class RelationModel(_Strict):
    kind: str
    from_: str = Field(alias="from")
    to: str

    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class GraphModel(_Strict):
    format: Literal[1] = 1
    kind: str
    rooms: list[RoomModel] = Field(default_factory=list)
    planes: list[PlaneModel] = Field(default_factory=list)
    objects: list[ObjectModel] = Field(default_factory=list)
    keyframes: list[KeyframeModel] = Field(default_factory=list)
    relations: list[RelationModel] = Field(default_factory=list)

    def to_payload(self) -> dict:
        return self.model_dump(by_alias=True, exclude_none=True)


# -- shared config models --------------------------------------------------


class RelationParamsModel(_Strict):
    epsilon: float = 0.05
    tau: float = 0.3
    overlap_scale: float = 1.5
    ellipsoid_k: float = 2.0


class MatchConfigModel(_Strict):
    theta_room_dist: float = 0.5
    theta_plane_angle: float = 0.1
    theta_plane_dist: float = 0.25
    delta_gap: float = 0.05
    use_semantic_filter: bool = True
    max_candidates: int = 1_000_000


class RigidOffsetModel(_Strict):
    yaw: float = 0.0
    translation: Vec3 = Field(default_factory=lambda: [0.0, 0.0, 0.0])


class DerivationSpecModel(_Strict):
    position_noise_sigma: float = 0.0
    angle_noise_sigma: float = 0.0
    rigid_offset: RigidOffsetModel = Field(default_factory=RigidOffsetModel)
    object_dropout: float = 0.0
    seed: int = 0


# -- /generate -------------------------------------------------------------


class GenerateRequest(_Strict):
    n_rooms: int
    room_size_range: tuple[float, float] = (3.0, 6.0)
    wall_thickness_range: tuple[float, float] = (0.1, 0.3)
    symmetry: Literal["none", "local", "global"] = "none"
    object_density: float = 0.0
    object_categories: list[tuple[str, float]] | None = None
    seed: int = 0
    jitter: float | None = None


class GenerateResponse(_Strict):
    graph: GraphModel
    metadata: dict


# -- /enrich ---------------------------------------------------------------


class ClusterModel(_Strict):
    category: str
    points: list[Vec3] = Field(min_length=1)


class EnrichRequest(_Strict):
    graph: GraphModel
    clusters: list[ClusterModel] = Field(default_factory=list)
    params: RelationParamsModel = Field(default_factory=RelationParamsModel)
    wall_categories: list[str] | None = None


class EnrichResponse(_Strict):
    graph: GraphModel


# -- /doorways -------------------------------------------------------------


class DoorwaysRequest(_Strict):
    graph: GraphModel
    params: RelationParamsModel = Field(default_factory=RelationParamsModel)


class DoorwayEventModel(_Strict):
    kf_inside: str
    kf_outside: str
    room: str
    crossed_plane: str
    location: Vec3


class DoorwaysResponse(_Strict):
    graph: GraphModel
    events: list[DoorwayEventModel]


# -- /match ----------------------------------------------------------------


class MatchRequest(_Strict):
    a_graph: GraphModel
    s_graph: GraphModel
    config: MatchConfigModel = Field(default_factory=MatchConfigModel)


class AssignmentModel(_Strict):
    rooms: dict[str, str]
    planes: dict[str, str]
    residual: float


class MatchStatsModel(_Strict):
    candidates_before_filter: int
    candidates_after_filter: int
    combinations_evaluated: int
    elapsed: float


class MatchResponse(_Strict):
    outcome: str
    assignments: list[AssignmentModel]
    stats: MatchStatsModel
    partial: bool


# -- /replay ---------------------------------------------------------------


class ReplayRequest(_Strict):
    graph: GraphModel
    order: list[str] = Field(min_length=1)
    derivation: DerivationSpecModel = Field(default_factory=DerivationSpecModel)
    config: MatchConfigModel = Field(default_factory=MatchConfigModel)


class ConvergenceRowModel(_Strict):
    k: int
    outcome: str
    elapsed: float
    n_solutions: int


class ReplayResponse(_Strict):
    map_rooms: int
    rows: list[ConvergenceRowModel]
    first_unique_k: int | None


# -- /eval-detections ------------------------------------------------------


class EvalDetectionsRequest(_Strict):
    pred: list[ObjectModel]
    gt: list[ObjectModel]
    dist_thresh: float = 0.5


class CategoryMetricsModel(_Strict):
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


class DetectionMatchModel(_Strict):
    pred: str
    gt: str
    distance: float


class EvalDetectionsResponse(_Strict):
    per_category: dict[str, CategoryMetricsModel]
    overall: CategoryMetricsModel
    matches: list[DetectionMatchModel]


# -- /bench ----------------------------------------------------------------


class BenchRequest(_Strict):
    a_rooms: list[int]
    s_rooms: list[int]
    symmetries: list[Literal["none", "local", "global"]] = ["none"]
    densities: list[float] = [0.0]
    seeds_per_cell: int = 1
    base_seed: int = 0
    match_config: MatchConfigModel = Field(default_factory=MatchConfigModel)
    filter_mode: Literal["on", "off", "both"] = "both"
    layout_overrides: dict = Field(default_factory=dict)
    jobs: int = 1


class BenchResponse(_Strict):
    runs_csv: str
    aggregate_csv: str
    n_runs: int


# -- /validate -------------------------------------------------------------


class ValidateRequest(_Strict):
    # Arbitrary JSON: malformed graphs must reach the validator, not be
    # rejected by request parsing.
    graph: dict


class ValidateResponse(_Strict):
    valid: bool
    diagnostics: list[str]


class HealthResponse(_Strict):
    status: str
    version: str
