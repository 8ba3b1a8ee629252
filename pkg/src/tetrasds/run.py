"""Replication and sweep orchestration.

A replication is one sequential pass of an engine over one scenario; all
randomness is derived from (master seed, replication index, stream name),
so replications are independent and any execution order, including a
process pool, produces identical results.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from . import metrics
from .config import ENGINE_REFERENCE, ScenarioConfig, set_axis_value
from .metrics import Aggregate, RunSummary
from .scenario import RawRunResult, Scenario, build_scenario


def simulate(cfg: ScenarioConfig, replication: int) -> tuple[Scenario, RawRunResult]:
    """Build one replication's scenario and run the configured engine."""
    cfg.validate()
    sc = build_scenario(cfg, replication)
    engine_name = os.environ.get("TETRASDS_ENGINE", cfg.engine)
    if engine_name == ENGINE_REFERENCE:
        from .engine import run_reference

        raw = run_reference(sc)
    else:
        from .kernel import run_kernel

        raw = run_kernel(sc)
    return sc, raw


def summarize(sc: Scenario, raw: RawRunResult) -> RunSummary:
    return metrics.summarize_run(
        sc.m_kind,
        sc.m_station,
        sc.m_gen,
        raw.delivered_ids,
        raw.delivered_close,
        raw.dropped_ids,
        raw.dropped_cause,
        raw.forward_complete,
        sc.warmup_end_s,
        sc.cfg.paoi_closure,
    )


def run_replication(cfg: ScenarioConfig, replication: int) -> RunSummary:
    sc, raw = simulate(cfg, replication)
    return summarize(sc, raw)


def _task(payload: tuple[ScenarioConfig, int]) -> RunSummary:
    cfg, replication = payload
    return run_replication(cfg, replication)


def run_point(cfg: ScenarioConfig, jobs: int = 1) -> list[RunSummary]:
    """All replications of one parameter point, optionally in parallel."""
    cfg.validate()
    reps = list(range(cfg.replications))
    if jobs <= 1 or len(reps) <= 1:
        return [run_replication(cfg, r) for r in reps]
    import multiprocessing as mp

    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context()
    with ctx.Pool(processes=jobs) as pool:
        return pool.map(_task, [(cfg, r) for r in reps])


@dataclass(frozen=True)
class SweepRow:
    axis_value: str
    aggregate: Aggregate


def run_sweep(
    cfg: ScenarioConfig,
    axis: str,
    values: list[str],
    jobs: int = 1,
) -> list[SweepRow]:
    """One aggregate row per axis value."""
    if not values:
        raise ValueError("sweep needs at least one value")
    point_cfgs = [set_axis_value(cfg, axis, v) for v in values]
    for point in point_cfgs:
        point.validate()
    if jobs <= 1:
        rows = []
        for v, point in zip(values, point_cfgs):
            rows.append(SweepRow(v, metrics.aggregate(run_point(point), cfg.confidence)))
        return rows
    import multiprocessing as mp

    tasks = [(point, r) for point in point_cfgs for r in range(cfg.replications)]
    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context()
    with ctx.Pool(processes=jobs) as pool:
        results = pool.map(_task, tasks)
    rows = []
    idx = 0
    for v, point in zip(values, point_cfgs):
        chunk = results[idx : idx + cfg.replications]
        idx += cfg.replications
        rows.append(SweepRow(v, metrics.aggregate(chunk, cfg.confidence)))
    return rows
