"""Command-line interface: a thin HTTP client over the service endpoints.

By default the service runs in-process (no server needed); ``--server`` points
the same commands at a remote instance.  Exit codes: 0 on success, 1 on domain
errors (invalid graphs, failed validation), 2 on usage errors.
"""

from __future__ import annotations

import asyncio
import csv
import io
import json
import sys
from pathlib import Path

import click
import httpx

SERVER_OPTION = click.option(
    "--server",
    metavar="URL",
    default=None,
    envvar="SGMATCH_SERVER",
    help="Base URL of a running service; defaults to an in-process instance.",
)


def _request(server: str | None, path: str, payload: dict) -> dict:
    if server:
        with httpx.Client(base_url=server, timeout=600.0) as client:
            resp = client.post(path, json=payload)
    else:
        from .service.app import create_app

        async def go():
            transport = httpx.ASGITransport(app=create_app())
            async with httpx.AsyncClient(
                transport=transport, base_url="http://sgmatch.internal", timeout=None
            ) as client:
                return await client.post(path, json=payload)

        resp = asyncio.run(go())
    if resp.status_code >= 300:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        if isinstance(detail, list):
            # Request-validation errors: keep location and message, drop the
            # echoed input payload.
            detail = "; ".join(
                f"{'.'.join(str(p) for p in err.get('loc', []))}: {err.get('msg', '?')}"
                for err in detail
            )
        raise click.ClickException(f"{path}: {detail}")
    return resp.json()


def _load_json(path: str, what: str) -> dict | list:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise click.ClickException(f"cannot read {what} {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise click.ClickException(f"{what} {path!r} is not valid JSON: {exc}") from exc


def _load_config(config: str | None) -> dict:
    if config is None:
        return {}
    data = _load_json(config, "config")
    if not isinstance(data, dict):
        raise click.ClickException(f"config {config!r} must be a JSON object")
    return data


def _emit(data: dict, out: str | None, filename: str) -> None:
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if out is None:
        click.echo(text, nl=False)
    else:
        target = Path(out)
        target.mkdir(parents=True, exist_ok=True)
        (target / filename).write_text(text, encoding="utf-8")


out_option = click.option(
    "-o", "--out", metavar="DIR", default=None, help="Output directory (default: stdout)."
)
config_option = click.option(
    "--config", metavar="PATH", default=None, help="JSON config file."
)


@click.group()
def main() -> None:
    """Scene-graph matching toolkit."""


@main.command()
@click.argument("spec", required=False)
@config_option
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Override the layout seed.")
@out_option
@SERVER_OPTION
def generate(spec, config, seed, out, server):
    """Generate a synthetic A-Graph from a layout spec (JSON file)."""
    payload = _load_config(config)
    if spec is not None:
        payload.update(_load_json(spec, "layout spec"))
    if not payload:
        raise click.UsageError("provide a layout spec file or --config")
    if seed is not None:
        payload["seed"] = seed
    result = _request(server, "/generate", payload)
    _emit(result["graph"], out, "a_graph.json")
    if out is not None:
        _emit(result["metadata"], out, "metadata.json")


@main.command()
@click.argument("graph")
@click.argument("clusters", required=False)
@config_option
@out_option
@SERVER_OPTION
def enrich(graph, clusters, config, out, server):
    """Add object-to-structure relations; optionally associate point clusters.

    CLUSTERS is a JSON list of {"category": str, "points": [[x, y, z], ...]}.
    """
    payload = {"graph": _load_json(graph, "graph")}
    if clusters is not None:
        payload["clusters"] = _load_json(clusters, "clusters")
    cfg = _load_config(config)
    if cfg:
        payload["params"] = cfg
    result = _request(server, "/enrich", payload)
    _emit(result["graph"], out, "enriched.json")


@main.command()
@click.argument("graph")
@config_option
@out_option
@SERVER_OPTION
def doorways(graph, config, out, server):
    """Detect doorways from the keyframe trajectory in GRAPH."""
    payload = {"graph": _load_json(graph, "graph")}
    cfg = _load_config(config)
    if cfg:
        payload["params"] = cfg
    result = _request(server, "/doorways", payload)
    if out is None:
        _emit(result, None, "")
    else:
        _emit(result["graph"], out, "doorways.json")
        _emit({"events": result["events"]}, out, "events.json")


@main.command()
@click.argument("a_graph")
@click.argument("s_graph")
@config_option
@click.option("--filter", "filter_", type=click.Choice(["on", "off"]), default=None)
@out_option
@SERVER_OPTION
def match(a_graph, s_graph, config, filter_, out, server):
    """Match an observed S-Graph against a prior A-Graph."""
    cfg = _load_config(config)
    if filter_ is not None:
        cfg["use_semantic_filter"] = filter_ == "on"
    payload = {
        "a_graph": _load_json(a_graph, "A-Graph"),
        "s_graph": _load_json(s_graph, "S-Graph"),
    }
    if cfg:
        payload["config"] = cfg
    result = _request(server, "/match", payload)
    _emit(result, out, "match.json")


@main.command()
@click.argument("graph")
@click.argument("order")
@config_option
@click.option("--filter", "filter_", type=click.Choice(["on", "off"]), default=None)
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Derivation seed.")
@out_option
@SERVER_OPTION
def replay(graph, order, config, filter_, seed, out, server):
    """Replay room-by-room exploration of GRAPH and report convergence.

    ORDER is a JSON file with a list of room ids, or a comma-separated list.
    Config keys: "derivation" (noise/offset spec) and "match" (matcher
    settings).  Output is a CSV of per-k outcomes.
    """
    if Path(order).exists():
        order_list = _load_json(order, "room order")
    else:
        order_list = [r for r in order.split(",") if r]
    cfg = _load_config(config)
    payload = {"graph": _load_json(graph, "graph"), "order": order_list}
    if "derivation" in cfg:
        payload["derivation"] = cfg["derivation"]
    if "match" in cfg:
        payload["config"] = cfg["match"]
    if filter_ is not None:
        payload.setdefault("config", {})["use_semantic_filter"] = filter_ == "on"
    if seed is not None:
        payload.setdefault("derivation", {})["seed"] = seed
    result = _request(server, "/replay", payload)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "outcome", "elapsed_s", "n_solutions"])
    for row in result["rows"]:
        writer.writerow([row["k"], row["outcome"], row["elapsed"], row["n_solutions"]])
    if out is None:
        click.echo(buf.getvalue(), nl=False)
    else:
        target = Path(out)
        target.mkdir(parents=True, exist_ok=True)
        (target / "convergence.csv").write_text(buf.getvalue(), encoding="utf-8")


@main.command("eval-det")
@click.argument("pred")
@click.argument("gt")
@click.option("--dist-thresh", type=float, default=0.5, show_default=True)
@out_option
@SERVER_OPTION
def eval_det(pred, gt, dist_thresh, out, server):
    """Score predicted object detections against ground truth.

    PRED and GT are JSON lists of object entries (id, category, ellipsoid).
    """
    payload = {
        "pred": _load_json(pred, "predictions"),
        "gt": _load_json(gt, "ground truth"),
        "dist_thresh": dist_thresh,
    }
    result = _request(server, "/eval-detections", payload)
    _emit(result, out, "detection_report.json")


@main.command()
@click.argument("spec")
@click.option("--filter", "filter_", type=click.Choice(["on", "off", "both"]), default=None)
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Override base_seed.")
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("-o", "--out", metavar="DIR", required=True, help="Output directory.")
@SERVER_OPTION
def bench(spec, filter_, seed, jobs, out, server):
    """Run a seeded benchmark sweep; writes runs.csv and aggregate.csv."""
    payload = _load_json(spec, "bench spec")
    if not isinstance(payload, dict):
        raise click.ClickException(f"bench spec {spec!r} must be a JSON object")
    if filter_ is not None:
        payload["filter_mode"] = filter_
    if seed is not None:
        payload["base_seed"] = seed
    payload["jobs"] = jobs
    result = _request(server, "/bench", payload)
    target = Path(out)
    target.mkdir(parents=True, exist_ok=True)
    (target / "runs.csv").write_text(result["runs_csv"], encoding="utf-8")
    (target / "aggregate.csv").write_text(result["aggregate_csv"], encoding="utf-8")
    click.echo(f"{result['n_runs']} runs -> {target / 'runs.csv'}, {target / 'aggregate.csv'}")


@main.command()
@click.argument("graph")
@SERVER_OPTION
def validate(graph, server):
    """Check a graph file; prints diagnostics and exits 1 if invalid."""
    try:
        data = json.loads(Path(graph).read_text(encoding="utf-8"))
    except OSError as exc:
        raise click.ClickException(f"cannot read {graph!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        click.echo(f"not valid JSON: {exc}", err=True)
        sys.exit(1)
    if not isinstance(data, dict):
        click.echo("graph document must be a JSON object", err=True)
        sys.exit(1)
    result = _request(server, "/validate", {"graph": data})
    if result["valid"]:
        click.echo("ok")
        return
    for diag in result["diagnostics"]:
        click.echo(diag, err=True)
    sys.exit(1)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
