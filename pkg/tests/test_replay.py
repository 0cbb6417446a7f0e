"""Exploration replay, trajectory synthesis and detection-metric tests."""

import numpy as np
import pytest

from sgmatch.geometry import room_contains
from sgmatch.matching import MatchConfig, MatchOutcome
from sgmatch.relations import RelationParams, detect_doorways
from sgmatch.replay import eval_detections, run_exploration, synth_trajectory
from sgmatch.scenarios import GEOMETRIC_UNIQUE_K, ROOM_CATEGORIES, build_scenario
from sgmatch.synth import SGraphDerivationSpec
from helpers import ball_object


def test_run_exploration_records_one_row_per_room():
    a, order = build_scenario(3)
    record = run_exploration(a, order, SGraphDerivationSpec(observed_rooms=order))
    assert record.map_rooms == 3
    assert [row.k for row in record.rows] == [1, 2, 3]
    assert record.first_unique_k == 1  # semantic filter on by default
    assert all(row.n_solutions >= 1 for row in record.rows)


def test_run_exploration_geometric_waits_for_symmetry_break():
    a, order = build_scenario(3)
    record = run_exploration(
        a,
        order,
        SGraphDerivationSpec(observed_rooms=order),
        MatchConfig(use_semantic_filter=False),
    )
    assert record.first_unique_k == min(GEOMETRIC_UNIQUE_K[3])


def test_run_exploration_rejects_repeated_rooms():
    a, order = build_scenario(2)
    with pytest.raises(ValueError, match="repeats"):
        run_exploration(
            a, [order[0], order[0]], SGraphDerivationSpec(observed_rooms=order)
        )


def test_exploration_record_to_dict():
    a, order = build_scenario(2)
    record = run_exploration(a, order, SGraphDerivationSpec(observed_rooms=order))
    payload = record.to_dict()
    assert payload["map_rooms"] == 2
    assert {row["outcome"] for row in payload["rows"]} <= {
        o.value for o in MatchOutcome
    }


# -- trajectory synthesis --------------------------------------------------


def test_trajectory_keyframes_lie_inside_rooms():
    a, order = build_scenario(4)
    params = RelationParams()
    kfs = synth_trajectory(a, order, step=0.5, params=params)
    assert len(kfs) >= 2 * len(order)
    rooms = {r.id: r for r in a.rooms}
    for kf in kfs:
        assert any(
            room_contains(rooms[rid], a.planes_of_room(rid), kf.position, params.epsilon)
            for rid in rooms
        )
    timestamps = [kf.timestamp for kf in kfs]
    assert timestamps == sorted(timestamps)
    assert len(set(timestamps)) == len(timestamps)


def test_trajectory_single_room_has_two_keyframes():
    a, order = build_scenario(1)
    kfs = synth_trajectory(a, order)
    assert len(kfs) == 2


def test_trajectory_supports_doorway_detection():
    from dataclasses import replace

    a, order = build_scenario(3)
    kfs = synth_trajectory(a, order, step=0.4)
    g = replace(a, keyframes=kfs)
    enriched, events = detect_doorways(g)
    doorways = [o for o in enriched.objects if o.category == "doorway"]
    # One doorway per consecutive room pair.
    assert len(doorways) == len(order) - 1
    assert events


def test_empty_order_yields_empty_trajectory():
    a, _ = build_scenario(2)
    assert synth_trajectory(a, []) == []


# -- detection metrics -----------------------------------------------------


def _dets(category, centers, prefix):
    return [
        ball_object(f"{prefix}_{i:03d}", category, c) for i, c in enumerate(centers)
    ]


def test_eval_detections_hand_computed():
    gt = _dets("chair", [(float(i), 0, 0) for i in range(10)], "gt")
    # 9 predictions near distinct ground-truth objects, one far away.
    pred = _dets("chair", [(float(i) + 0.1, 0, 0) for i in range(9)] + [(99, 0, 0)], "p")
    report = eval_detections(pred, gt, dist_thresh=0.5)
    m = report.overall
    assert (m.tp, m.fp, m.fn) == (9, 1, 1)
    assert m.precision == 0.9
    assert m.recall == 0.9
    assert m.f1 == pytest.approx(0.9)


def test_eval_detections_perfect():
    gt = _dets("table", [(0, 0, 0), (5, 0, 0)], "gt")
    pred = _dets("table", [(0, 0, 0), (5, 0, 0)], "p")
    report = eval_detections(pred, gt)
    assert report.overall.precision == 1.0
    assert report.overall.recall == 1.0
    assert report.overall.f1 == 1.0
    assert len(report.matches) == 2


def test_eval_detections_category_confusion_is_not_matched():
    gt = _dets("chair", [(0, 0, 0)], "gt")
    pred = _dets("table", [(0, 0, 0)], "p")
    report = eval_detections(pred, gt)
    assert report.overall.tp == 0
    assert report.per_category["chair"].fn == 1
    assert report.per_category["table"].fp == 1


def test_eval_detections_greedy_prefers_nearest():
    gt = _dets("chair", [(0, 0, 0)], "gt")
    pred = _dets("chair", [(0.3, 0, 0), (0.1, 0, 0)], "p")
    report = eval_detections(pred, gt, dist_thresh=0.5)
    assert report.overall.tp == 1
    assert report.matches[0][0] == "p_001"  # the closer prediction wins


def test_eval_detections_empty_inputs():
    report = eval_detections([], [])
    assert report.overall.precision == 0.0
    assert report.overall.recall == 0.0
    assert report.overall.f1 == 0.0


def test_eval_detections_rejects_bad_threshold():
    with pytest.raises(ValueError):
        eval_detections([], [], dist_thresh=0.0)


# -- scenario family sanity ------------------------------------------------


def test_scenarios_have_unique_categories_and_validate():
    from sgmatch.graph import validate

    for m in range(1, 7):
        a, order = build_scenario(m)
        assert validate(a) == []
        assert len(order) == m
        cats = [o.category for o in a.objects]
        assert cats == ROOM_CATEGORIES[:m]


def test_scenario_objects_sit_on_their_wall():
    from sgmatch.graph import RelationKind

    a, _ = build_scenario(6)
    for obj in a.objects:
        idx = obj.id.split("_")[1]
        assert a.has_relation(
            RelationKind.OBJECT_ON_PLANE, obj.id, f"plane_{idx}_+y"
        )


def test_scenario_bounds():
    with pytest.raises(ValueError):
        build_scenario(0)
    with pytest.raises(ValueError):
        build_scenario(7)
