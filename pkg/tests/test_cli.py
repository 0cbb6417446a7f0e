"""CLI tests through click's runner (in-process service transport)."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from sgmatch.cli import main
from sgmatch.graph import graph_to_dict, loads_graph
from sgmatch.relations import generate_relations
from sgmatch.scenarios import build_scenario
from helpers import ball_object, box_graph, rename_nodes


@pytest.fixture
def runner():
    return CliRunner()


def _write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def _square_with_door():
    return generate_relations(
        box_graph(
            [("room_000", (0, 0, 0), 2.0, 2.0)],
            objects=[ball_object("obj_000", "door", (0.0, 1.8, 1.0))],
        )
    )


def test_generate_writes_graph_and_metadata(runner, tmp_path):
    spec = _write(tmp_path, "spec.json", {"n_rooms": 2, "object_density": 0.2})
    out = tmp_path / "out"
    result = runner.invoke(
        main, ["generate", spec, "--seed", "7", "-o", str(out)]
    )
    assert result.exit_code == 0, result.output
    g = loads_graph((out / "a_graph.json").read_text())
    assert len(g.rooms) == 2
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["seed"] == 7


def test_generate_to_stdout(runner, tmp_path):
    spec = _write(tmp_path, "spec.json", {"n_rooms": 1})
    result = runner.invoke(main, ["generate", spec])
    assert result.exit_code == 0
    assert json.loads(result.output)["format"] == 1


def test_generate_without_spec_is_usage_error(runner):
    result = runner.invoke(main, ["generate"])
    assert result.exit_code == 2


def test_validate_ok_and_invalid(runner, tmp_path):
    good = _write(tmp_path, "good.json", graph_to_dict(_square_with_door()))
    result = runner.invoke(main, ["validate", good])
    assert result.exit_code == 0
    assert result.output.strip() == "ok"

    payload = graph_to_dict(_square_with_door())
    payload["planes"][0]["normal"] = [0.0, 0.0, 2.0]
    bad = _write(tmp_path, "bad.json", payload)
    result = runner.invoke(main, ["validate", bad])
    assert result.exit_code == 1
    assert "unit length" in result.output


def test_match_prints_result(runner, tmp_path):
    a = _square_with_door()
    s = rename_nodes(a, "s_")
    a_path = _write(tmp_path, "a.json", graph_to_dict(a))
    s_path = _write(tmp_path, "s.json", graph_to_dict(s))
    result = runner.invoke(main, ["match", a_path, s_path, "--filter", "on"])
    assert result.exit_code == 0, result.output
    body = json.loads(result.output)
    assert body["outcome"] == "unique"
    off = runner.invoke(main, ["match", a_path, s_path, "--filter", "off"])
    assert json.loads(off.output)["outcome"] != "unique"


def test_match_domain_error_exits_1(runner, tmp_path):
    payload = graph_to_dict(_square_with_door())
    payload["planes"][0]["normal"] = [0.0, 0.0, 2.0]
    bad = _write(tmp_path, "bad.json", payload)
    good = _write(tmp_path, "good.json", graph_to_dict(_square_with_door()))
    result = runner.invoke(main, ["match", bad, good])
    assert result.exit_code == 1
    assert "unit length" in result.output


def test_enrich_adds_relations(runner, tmp_path):
    g = box_graph(
        [("room_000", (0, 0, 0), 2.0, 2.0)],
        objects=[ball_object("obj_000", "chair", (0.5, 0.5, 0.4))],
    )
    graph_path = _write(tmp_path, "g.json", graph_to_dict(g))
    result = runner.invoke(main, ["enrich", graph_path])
    assert result.exit_code == 0, result.output
    enriched = loads_graph(result.output)
    assert any(r.kind.value == "object_in_room" for r in enriched.relations)


def test_doorways_command(runner, tmp_path):
    from dataclasses import replace

    from sgmatch.replay import synth_trajectory

    a, order = build_scenario(2)
    g = replace(a, keyframes=synth_trajectory(a, order, step=0.4))
    graph_path = _write(tmp_path, "g.json", graph_to_dict(g))
    out = tmp_path / "door_out"
    result = runner.invoke(main, ["doorways", graph_path, "-o", str(out)])
    assert result.exit_code == 0, result.output
    events = json.loads((out / "events.json").read_text())["events"]
    assert events
    enriched = loads_graph((out / "doorways.json").read_text())
    assert any(o.category == "doorway" for o in enriched.objects)


def test_replay_outputs_csv(runner, tmp_path):
    a, order = build_scenario(2)
    graph_path = _write(tmp_path, "a.json", graph_to_dict(a))
    result = runner.invoke(main, ["replay", graph_path, ",".join(order)])
    assert result.exit_code == 0, result.output
    lines = result.output.strip().splitlines()
    assert lines[0] == "k,outcome,elapsed_s,n_solutions"
    assert len(lines) == 3


def test_eval_det_command(runner, tmp_path):
    def entry(i, center):
        return {
            "id": f"o_{i}",
            "category": "chair",
            "ellipsoid": {
                "center": list(center),
                "semi_axes": [0.2, 0.2, 0.2],
                "rotation": list(np.eye(3).ravel()),
            },
        }

    pred = _write(tmp_path, "pred.json", [entry(0, (0.1, 0.0, 0.0))])
    gt = _write(tmp_path, "gt.json", [entry(1, (0.0, 0.0, 0.0))])
    result = runner.invoke(main, ["eval-det", pred, gt])
    assert result.exit_code == 0, result.output
    assert json.loads(result.output)["overall"]["f1"] == 1.0


def test_bench_writes_csvs(runner, tmp_path):
    spec = _write(
        tmp_path, "bench.json", {"a_rooms": [2], "s_rooms": [1, 2], "seeds_per_cell": 1}
    )
    out = tmp_path / "bench_out"
    result = runner.invoke(main, ["bench", spec, "-o", str(out), "--filter", "on"])
    assert result.exit_code == 0, result.output
    runs = (out / "runs.csv").read_text().splitlines()
    assert runs[0].startswith("seed,symmetry")
    assert len(runs) == 3  # header + two cells, filter on only
    assert (out / "aggregate.csv").exists()


def test_unknown_command_exits_2(runner):
    result = runner.invoke(main, ["frobnicate"])
    assert result.exit_code == 2


def test_missing_file_is_domain_error(runner):
    result = runner.invoke(main, ["validate", "/nonexistent/g.json"])
    assert result.exit_code == 1
