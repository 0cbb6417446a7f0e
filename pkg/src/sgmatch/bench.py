"""Seeded benchmark sweep over layout families and matcher settings.

For every (symmetry, A-room count, S-room count, density) cell and seed, a
layout is generated, an S-Graph derived from a room subset with zero noise,
and the matcher run with the semantic filter on and/or off.  One CSV row is
emitted per run; a companion CSV aggregates per cell.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .matching import MatchConfig, MatchOutcome, match
from .synth import (
    LayoutSpec,
    RigidOffset,
    SGraphDerivationSpec,
    SymmetryMode,
    derive_sgraph,
    generate_layout,
    place_objects,
)

logger = logging.getLogger(__name__)

RUN_COLUMNS = [
    "seed",
    "symmetry",
    "a_rooms",
    "s_rooms",
    "density",
    "filter",
    "n_solutions",
    "outcome",
    "elapsed_s",
    "candidates_before",
    "candidates_after",
    "combinations_evaluated",
    "correct",
]

AGGREGATE_COLUMNS = [
    "symmetry",
    "a_rooms",
    "s_rooms",
    "density",
    "filter",
    "runs",
    "mean_solutions",
    "median_solutions",
    "frac_unique",
    "frac_correct",
    "mean_elapsed_s",
    "median_elapsed_s",
    "median_combinations",
]


@dataclass
class BenchSpec:
    a_rooms: list[int]
    s_rooms: list[int]
    symmetries: list[SymmetryMode] = field(default_factory=lambda: [SymmetryMode.NONE])
    densities: list[float] = field(default_factory=lambda: [0.0])
    seeds_per_cell: int = 1
    base_seed: int = 0
    match_config: MatchConfig = field(default_factory=MatchConfig)
    filter_mode: str = "both"  # "on", "off" or "both"
    layout_overrides: dict = field(default_factory=dict)
    # Matches per run for the elapsed_s column (best-of repeats smooths
    # scheduler jitter at sub-millisecond match times).
    timing_repeats: int = 3

    def __post_init__(self):
        self.symmetries = [SymmetryMode(s) for s in self.symmetries]
        if isinstance(self.match_config, dict):
            self.match_config = MatchConfig(**self.match_config)
        if self.seeds_per_cell < 1:
            raise ValueError("seeds_per_cell must be >= 1")
        if self.filter_mode not in ("on", "off", "both"):
            raise ValueError("filter_mode must be 'on', 'off' or 'both'")
        if self.timing_repeats < 1:
            raise ValueError("timing_repeats must be >= 1")
        if any(s > max(self.a_rooms) for s in self.s_rooms):
            raise ValueError("s_rooms may not exceed the largest a_rooms")

    @classmethod
    def from_dict(cls, data: dict) -> "BenchSpec":
        return cls(**data)

    def cells(self):
        for symmetry in self.symmetries:
            for a_n in self.a_rooms:
                for s_n in self.s_rooms:
                    if s_n > a_n:
                        continue
                    for density in self.densities:
                        yield symmetry, a_n, s_n, density

    def filters(self) -> list[bool]:
        if self.filter_mode == "on":
            return [True]
        if self.filter_mode == "off":
            return [False]
        return [True, False]


def _run_cell(args) -> list[dict]:
    spec_dict, symmetry, a_n, s_n, density, seed = args
    spec = BenchSpec.from_dict(spec_dict) if isinstance(spec_dict, dict) else spec_dict
    try:
        layout_spec = LayoutSpec(
            n_rooms=a_n,
            symmetry=symmetry,
            object_density=density,
            seed=seed,
            **spec.layout_overrides,
        )
        layout = place_objects(generate_layout(layout_spec), layout_spec)
        rng = np.random.default_rng(seed + 1)
        observed = sorted(r.id for r in layout.graph.rooms)[:s_n]
        derivation = derive_sgraph(
            layout.graph,
            SGraphDerivationSpec(
                observed_rooms=observed,
                rigid_offset=RigidOffset(
                    yaw=float(rng.uniform(0.0, 2.0 * math.pi)),
                    translation=tuple(rng.uniform(-5.0, 5.0, size=3)),
                ),
                seed=seed + 1,
            ),
        )
    except Exception:
        logger.exception(
            "bench cell failed (seed=%s, symmetry=%s, a=%s, s=%s, density=%s)",
            seed, symmetry.value, a_n, s_n, density,
        )
        return []

    rows = []
    for use_filter in spec.filters():
        cfg = replace(spec.match_config, use_semantic_filter=use_filter)
        try:
            result = match(layout.graph, derivation.graph, cfg)
            elapsed = result.stats.elapsed
            for _ in range(spec.timing_repeats - 1):
                elapsed = min(
                    elapsed, match(layout.graph, derivation.graph, cfg).stats.elapsed
                )
        except Exception:
            logger.exception("match failed (seed=%s, filter=%s)", seed, use_filter)
            continue
        correct = any(
            a.room_map == derivation.room_map and a.plane_map == derivation.plane_map
            for a in result.assignments
        )
        rows.append(
            {
                "seed": seed,
                "symmetry": symmetry.value,
                "a_rooms": a_n,
                "s_rooms": s_n,
                "density": density,
                "filter": "on" if use_filter else "off",
                "n_solutions": len(result.assignments),
                "outcome": result.outcome.value,
                "elapsed_s": elapsed,
                "candidates_before": result.stats.candidates_before_filter,
                "candidates_after": result.stats.candidates_after_filter,
                "combinations_evaluated": result.stats.combinations_evaluated,
                "correct": correct,
            }
        )
    return rows


@dataclass
class BenchReport:
    runs: list[dict]
    aggregate: list[dict]

    def runs_csv(self) -> str:
        return _to_csv(RUN_COLUMNS, self.runs)

    def aggregate_csv(self) -> str:
        return _to_csv(AGGREGATE_COLUMNS, self.aggregate)


def _to_csv(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _aggregate(runs: list[dict]) -> list[dict]:
    cells: dict[tuple, list[dict]] = {}
    for row in runs:
        key = (row["symmetry"], row["a_rooms"], row["s_rooms"], row["density"], row["filter"])
        cells.setdefault(key, []).append(row)
    out = []
    for key in sorted(cells):
        rows = cells[key]
        solutions = [r["n_solutions"] for r in rows]
        elapsed = [r["elapsed_s"] for r in rows]
        out.append(
            {
                "symmetry": key[0],
                "a_rooms": key[1],
                "s_rooms": key[2],
                "density": key[3],
                "filter": key[4],
                "runs": len(rows),
                "mean_solutions": statistics.fmean(solutions),
                "median_solutions": statistics.median(solutions),
                "frac_unique": statistics.fmean(
                    r["outcome"] == MatchOutcome.UNIQUE.value for r in rows
                ),
                "frac_correct": statistics.fmean(bool(r["correct"]) for r in rows),
                "mean_elapsed_s": statistics.fmean(elapsed),
                "median_elapsed_s": statistics.median(elapsed),
                "median_combinations": statistics.median(
                    r["combinations_evaluated"] for r in rows
                ),
            }
        )
    return out


def bench_matching(spec: BenchSpec, jobs: int = 1) -> BenchReport:
    """Run the full sweep; rows are ordered by cell and seed regardless of
    worker scheduling."""
    tasks = [
        (spec, symmetry, a_n, s_n, density, spec.base_seed + i)
        for symmetry, a_n, s_n, density in spec.cells()
        for i in range(spec.seeds_per_cell)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_cell, tasks, chunksize=4))
    else:
        chunks = [_run_cell(t) for t in tasks]
    runs = [row for chunk in chunks for row in chunk]
    runs.sort(
        key=lambda r: (
            r["symmetry"],
            r["a_rooms"],
            r["s_rooms"],
            r["density"],
            r["seed"],
            r["filter"],
        )
    )
    return BenchReport(runs=runs, aggregate=_aggregate(runs))
