"""Data model, validation and JSON round-trip tests."""

import json

import numpy as np
import pytest

from sgmatch.graph import (
    CategoryCounts,
    GraphFormatError,
    GraphKind,
    Keyframe,
    PlaneNode,
    Relation,
    RelationKind,
    RoomNode,
    SceneGraph,
    dumps_graph,
    graph_from_dict,
    graph_to_dict,
    load_graph,
    loads_graph,
    save_graph,
    semantic_content,
    validate,
)
from helpers import ball_object, box_graph


@pytest.fixture
def simple_graph():
    obj = ball_object("obj_000", "door", (0.0, 1.8, 1.0))
    g = box_graph([("room_000", (0, 0, 0), 2.0, 2.0)], objects=[obj])
    g.relations.append(Relation(RelationKind.OBJECT_IN_ROOM, "obj_000", "room_000"))
    g.relations.append(
        Relation(RelationKind.OBJECT_ON_PLANE, "obj_000", "room_000_+y")
    )
    return g


def test_valid_graph_has_no_diagnostics(simple_graph):
    assert validate(simple_graph) == []


def test_duplicate_node_id_is_diagnosed(simple_graph):
    simple_graph.rooms.append(RoomNode(id="room_000", center=(9, 9, 0)))
    assert any("duplicate" in d for d in validate(simple_graph))


def test_non_unit_normal_is_diagnosed(simple_graph):
    simple_graph.planes[0].normal = np.array([0.0, -2.0, 0.0])
    assert any("unit" in d for d in validate(simple_graph))


def test_outward_normal_is_diagnosed(simple_graph):
    p = simple_graph.planes[0]
    p.normal = -p.normal
    p.offset = -p.offset
    assert any("points away" in d for d in validate(simple_graph))


def test_unowned_plane_is_diagnosed():
    g = box_graph([("room_000", (0, 0, 0), 2.0, 2.0)])
    g.planes.append(PlaneNode(id="stray", normal=(0, 0, 1), offset=0.0))
    assert any("stray" in d and "owned by 0" in d for d in validate(g))


def test_doubly_owned_plane_is_diagnosed():
    g = box_graph([("room_000", (0, 0, 0), 2, 2), ("room_001", (10, 0, 0), 2, 2)])
    g.relations.append(
        Relation(RelationKind.ROOM_HAS_PLANE, "room_001", "room_000_+x")
    )
    assert any("owned by 2" in d for d in validate(g))


def test_relation_endpoint_layers_are_checked(simple_graph):
    simple_graph.relations.append(
        Relation(RelationKind.OBJECT_IN_ROOM, "room_000", "obj_000")
    )
    diags = validate(simple_graph)
    assert any("expected object" in d for d in diags)


def test_non_monotone_keyframe_timestamps_are_diagnosed(simple_graph):
    simple_graph.keyframes = [
        Keyframe(id="kf_0", position=(0, 0, 0.5), timestamp=1.0),
        Keyframe(id="kf_1", position=(0.5, 0, 0.5), timestamp=1.0),
    ]
    assert any("strictly increasing" in d for d in validate(simple_graph))


def test_reflected_ellipsoid_rotation_is_diagnosed(simple_graph):
    simple_graph.objects[0].ellipsoid.rotation = np.diag([1.0, 1.0, -1.0])
    assert any("reflection" in d for d in validate(simple_graph))


def test_semantic_content_counts_by_category(simple_graph):
    assert semantic_content(simple_graph, "room_000") == {"door": 1}
    assert semantic_content(simple_graph, "room_000_+y") == {"door": 1}
    assert semantic_content(simple_graph, "room_000_-y") == {}


def test_semantic_content_rejects_object_nodes(simple_graph):
    with pytest.raises(ValueError):
        semantic_content(simple_graph, "obj_000")


def test_category_counts_equality_with_plain_dicts():
    c = CategoryCounts()
    c.add("door")
    c.add("door")
    assert c == {"door": 2}
    assert c["window"] == 0
    assert bool(c) and not bool(CategoryCounts())


# -- serialization ---------------------------------------------------------


def test_round_trip_preserves_geometry(simple_graph, tmp_path):
    path = tmp_path / "g.json"
    save_graph(simple_graph, path)
    loaded = load_graph(path)
    assert graph_to_dict(loaded) == graph_to_dict(simple_graph)


def test_save_is_byte_stable(simple_graph, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_graph(simple_graph, a)
    save_graph(load_graph(a), b)
    assert a.read_bytes() == b.read_bytes()


def test_plane_ownership_encoded_on_plane_entries(simple_graph):
    data = graph_to_dict(simple_graph)
    assert all(p["room"] == "room_000" for p in data["planes"])
    assert all(r["kind"] != "room_has_plane" for r in data["relations"])


def test_ownership_relation_in_relations_array_is_rejected(simple_graph):
    data = graph_to_dict(simple_graph)
    data["relations"].append(
        {"kind": "room_has_plane", "from": "room_000", "to": "room_000_+x"}
    )
    with pytest.raises(GraphFormatError, match="plane ownership"):
        graph_from_dict(data)


def test_unknown_format_version_is_rejected(simple_graph):
    data = graph_to_dict(simple_graph)
    data["format"] = 2
    with pytest.raises(GraphFormatError, match="format"):
        graph_from_dict(data)


def test_unknown_relation_kind_is_rejected(simple_graph):
    data = graph_to_dict(simple_graph)
    data["relations"].append({"kind": "object_on_roof", "from": "obj_000", "to": "room_000"})
    with pytest.raises(GraphFormatError, match="kind"):
        graph_from_dict(data)


def test_unknown_top_level_field_is_rejected(simple_graph):
    data = graph_to_dict(simple_graph)
    data["extra"] = 1
    with pytest.raises(GraphFormatError, match="unknown field"):
        graph_from_dict(data)


def test_invalid_graph_fails_to_load(simple_graph):
    data = graph_to_dict(simple_graph)
    data["planes"][0]["normal"] = [0.0, -2.0, 0.0]
    with pytest.raises(GraphFormatError, match="invalid graph"):
        graph_from_dict(data)


def test_support_points_round_trip(simple_graph):
    pts = np.array([[0.1, 1.7, 1.0], [0.0, 1.9, 1.1], [-0.1, 1.8, 0.9]])
    simple_graph.objects[0].support_points = pts
    loaded = loads_graph(dumps_graph(simple_graph))
    np.testing.assert_allclose(loaded.objects[0].support_points, pts)


def test_node_lists_serialized_sorted_by_id():
    g = box_graph(
        [("room_b", (0, 0, 0), 2, 2), ("room_a", (10, 0, 0), 2, 2)]
    )
    data = graph_to_dict(g)
    assert [r["id"] for r in data["rooms"]] == ["room_a", "room_b"]
    assert [p["id"] for p in data["planes"]] == sorted(p["id"] for p in data["planes"])


def test_loads_rejects_bad_json():
    with pytest.raises(GraphFormatError, match="JSON"):
        loads_graph("{not json")


def test_lookup_helpers(simple_graph):
    assert simple_graph.room("room_000").id == "room_000"
    assert simple_graph.room_of_plane("room_000_+x") == "room_000"
    assert [p.id for p in simple_graph.planes_of_room("room_000")] == sorted(
        p.id for p in simple_graph.planes
    )
    assert simple_graph.has_relation(
        RelationKind.OBJECT_IN_ROOM, "obj_000", "room_000"
    )
    with pytest.raises(KeyError):
        simple_graph.plane("nope")
