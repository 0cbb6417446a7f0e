"""FastAPI application wrapping the scene-graph matching pipeline.

Every endpoint is a thin adapter: pydantic models guard the wire format,
domain errors surface as HTTP 400 with the underlying message, and all real
work happens in the core package.
"""

from __future__ import annotations

from dataclasses import replace
from functools import wraps

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..bench import BenchSpec, bench_matching
from ..graph import (
    Ellipsoid,
    GraphFormatError,
    ObjectInstance,
    SceneGraph,
    graph_from_dict,
    graph_to_dict,
)
from ..matching import MatchConfig, match
from ..relations import (
    RelationParams,
    associate_object,
    detect_doorways,
    generate_relations,
)
from ..replay import eval_detections, run_exploration
from ..synth import LayoutSpec, SGraphDerivationSpec, generate_layout, place_objects
from . import schemas as sc


def _domain_errors(fn):
    """Translate domain failures into HTTP 400 responses."""

    @wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (GraphFormatError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    return wrapper


def _to_graph(model: sc.GraphModel) -> SceneGraph:
    return graph_from_dict(model.to_payload())


def _from_graph(g: SceneGraph) -> sc.GraphModel:
    return sc.GraphModel.model_validate(graph_to_dict(g))


def _to_object(model: sc.ObjectModel) -> ObjectInstance:
    return ObjectInstance(
        id=model.id,
        category=model.category,
        ellipsoid=Ellipsoid(
            center=model.ellipsoid.center,
            semi_axes=model.ellipsoid.semi_axes,
            rotation=np.asarray(model.ellipsoid.rotation, dtype=float).reshape(3, 3),
        ),
        support_points=model.support_points,
    )


def _relation_params(model: sc.RelationParamsModel) -> RelationParams:
    return RelationParams(**model.model_dump())


def _match_config(model: sc.MatchConfigModel) -> MatchConfig:
    return MatchConfig(**model.model_dump())


def create_app() -> FastAPI:
    app = FastAPI(title="sgmatch", version=__version__)

    @app.get("/health", response_model=sc.HealthResponse)
    def health() -> sc.HealthResponse:
        return sc.HealthResponse(status="ok", version=__version__)

    @app.post("/generate", response_model=sc.GenerateResponse)
    @_domain_errors
    def generate(req: sc.GenerateRequest) -> sc.GenerateResponse:
        kwargs = req.model_dump()
        # None means "use the layout generator's default".
        for optional in ("jitter", "object_categories"):
            if kwargs[optional] is None:
                kwargs.pop(optional)
        spec = LayoutSpec(**kwargs)
        layout = place_objects(generate_layout(spec), spec)
        return sc.GenerateResponse(
            graph=_from_graph(layout.graph), metadata=layout.meta.to_dict()
        )

    @app.post("/enrich", response_model=sc.EnrichResponse)
    @_domain_errors
    def enrich(req: sc.EnrichRequest) -> sc.EnrichResponse:
        g = _to_graph(req.graph)
        params = _relation_params(req.params)
        objects = list(g.objects)
        for cluster in req.clusters:
            objects = associate_object(
                cluster.points, cluster.category, objects, params
            )
        g = replace(g, objects=objects)
        kwargs = {}
        if req.wall_categories is not None:
            kwargs["wall_categories"] = set(req.wall_categories)
        return sc.EnrichResponse(graph=_from_graph(generate_relations(g, params, **kwargs)))

    @app.post("/doorways", response_model=sc.DoorwaysResponse)
    @_domain_errors
    def doorways(req: sc.DoorwaysRequest) -> sc.DoorwaysResponse:
        g, events = detect_doorways(_to_graph(req.graph), _relation_params(req.params))
        return sc.DoorwaysResponse(
            graph=_from_graph(g),
            events=[
                sc.DoorwayEventModel(
                    kf_inside=e.kf_inside,
                    kf_outside=e.kf_outside,
                    room=e.room,
                    crossed_plane=e.crossed_plane,
                    location=list(map(float, e.location)),
                )
                for e in events
            ],
        )

    @app.post("/match", response_model=sc.MatchResponse)
    @_domain_errors
    def run_match(req: sc.MatchRequest) -> sc.MatchResponse:
        result = match(
            _to_graph(req.a_graph), _to_graph(req.s_graph), _match_config(req.config)
        )
        return sc.MatchResponse.model_validate(result.to_dict())

    @app.post("/replay", response_model=sc.ReplayResponse)
    @_domain_errors
    def replay(req: sc.ReplayRequest) -> sc.ReplayResponse:
        d = SGraphDerivationSpec(
            observed_rooms=list(req.order),
            **req.derivation.model_dump(),
        )
        record = run_exploration(
            _to_graph(req.graph), list(req.order), d, _match_config(req.config)
        )
        return sc.ReplayResponse.model_validate(record.to_dict())

    @app.post("/eval-detections", response_model=sc.EvalDetectionsResponse)
    @_domain_errors
    def eval_det(req: sc.EvalDetectionsRequest) -> sc.EvalDetectionsResponse:
        report = eval_detections(
            [_to_object(o) for o in req.pred],
            [_to_object(o) for o in req.gt],
            dist_thresh=req.dist_thresh,
        )
        return sc.EvalDetectionsResponse.model_validate(report.to_dict())

    @app.post("/bench", response_model=sc.BenchResponse)
    @_domain_errors
    def bench(req: sc.BenchRequest) -> sc.BenchResponse:
        kwargs = req.model_dump()
        jobs = kwargs.pop("jobs")
        spec = BenchSpec(**kwargs)
        report = bench_matching(spec, jobs=jobs)
        return sc.BenchResponse(
            runs_csv=report.runs_csv(),
            aggregate_csv=report.aggregate_csv(),
            n_runs=len(report.runs),
        )

    @app.post("/validate", response_model=sc.ValidateResponse)
    def validate_graph(req: sc.ValidateRequest) -> sc.ValidateResponse:
        try:
            graph_from_dict(req.graph)
        except GraphFormatError as exc:
            msg = str(exc)
            prefix = "invalid graph: "
            diags = msg[len(prefix):].split("; ") if msg.startswith(prefix) else [msg]
            return sc.ValidateResponse(valid=False, diagnostics=diags)
        return sc.ValidateResponse(valid=True, diagnostics=[])

    return app


app = create_app()
