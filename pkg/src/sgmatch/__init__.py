"""Semantic-enhanced scene-graph matching for indoor localization."""

from .graph import (
    CategoryCounts,
    Ellipsoid,
    GraphFormatError,
    GraphKind,
    Keyframe,
    ObjectInstance,
    PlaneNode,
    Relation,
    RelationKind,
    RoomNode,
    SceneGraph,
    graphs_allclose,
    load_graph,
    save_graph,
    semantic_content,
    validate,
)
from .matching import (
    CandidateAssignment,
    MatchConfig,
    MatchOutcome,
    MatchResult,
    brute_force_match,
    candidate_pairs,
    geometric_consistency,
    match,
    semantic_filter_accepts,
)
from .relations import (
    DoorwayEvent,
    RelationParams,
    associate_object,
    detect_doorways,
    fit_ellipsoid,
    generate_relations,
)
from .replay import (
    ConvergenceRecord,
    DetectionReport,
    eval_detections,
    run_exploration,
    synth_trajectory,
)
from .synth import (
    Layout,
    LayoutSpec,
    RigidOffset,
    SGraphDerivationSpec,
    SymmetryMode,
    derive_sgraph,
    generate_layout,
    place_objects,
)
from .bench import BenchReport, BenchSpec, bench_matching

__version__ = "0.1.0"
