"""Shared fixtures: desk-scale scenarios and the L-room parameter sweep."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from mmrt import (
    ArrayConfig,
    LinkBudget,
    Material,
    Scene,
    TraceConfig,
    Tracer,
    Triangle,
    make_lroom,
    snr_series,
)

ETA_GRID = (1, 2, 3, 4)
GAMMA_GRID = (float("-inf"), -40.0, -25.0, -15.0)
BASELINE_KEY = (4, float("-inf"))


@dataclass
class CellSummary:
    """Per-timestep digests of one (eta, gamma) campaign cell."""

    kept_sets: list[frozenset]        # surface-id tuples kept per timestep
    counts: np.ndarray                # kept components per timestep
    examined: int                     # candidates examined per timestep (constant)
    min_rel_db: np.ndarray            # min kept gain relative to the strongest
    snr_db: np.ndarray
    t_rt_s: float


@pytest.fixture(scope="session")
def lroom_desk():
    scene, tx, traj = make_lroom(samples=500)
    return scene, tx.position, traj


@pytest.fixture(scope="session")
def table1_budget():
    return LinkBudget(tx_power_dbm=30.0, noise_figure_db=5.0,
                      bandwidth_hz=400e6, carrier_frequency_hz=60e9)


@pytest.fixture(scope="session")
def table1_arrays():
    return ArrayConfig(8, 8), ArrayConfig(4, 4)


@pytest.fixture(scope="session")
def lroom_sweep(lroom_desk, table1_budget, table1_arrays):
    """Full eta x gamma sweep of the desk-scale L-room, summarized per cell."""
    import time

    scene, tx, traj = lroom_desk
    tx_array, rx_array = table1_arrays
    cells: dict[tuple[int, float], CellSummary] = {}
    for eta in ETA_GRID:
        for gamma in GAMMA_GRID:
            cfg = TraceConfig(max_reflection_order=eta, relative_threshold_db=gamma)
            tracer = Tracer(scene, tx, cfg)
            t0 = time.perf_counter()
            results = [tracer.trace(rx, i) for i, rx in enumerate(traj.positions)]
            t_rt = time.perf_counter() - t0
            kept_sets, counts, min_rel = [], [], []
            for res in results:
                kept_sets.append(frozenset(m.surface_ids for m in res.mpcs))
                counts.append(len(res.mpcs))
                if res.mpcs:
                    gains = [m.gain_db for m in res.mpcs]
                    min_rel.append(min(gains) - max(gains))
                else:
                    min_rel.append(np.nan)
            points = snr_series([r.mpcs for r in results], table1_budget,
                                tx_array, rx_array)
            cells[(eta, gamma)] = CellSummary(
                kept_sets=kept_sets,
                counts=np.array(counts),
                examined=results[0].candidates_examined,
                min_rel_db=np.array(min_rel),
                snr_db=np.array([p.snr_db for p in points]),
                t_rt_s=t_rt,
            )
    return cells


def make_random_scene(rng: np.random.Generator, max_triangles: int = 8) -> Scene:
    """Small random scene with mixed materials for oracle comparisons."""
    n = int(rng.integers(2, max_triangles + 1))
    materials = (Material("matte", 8.0), Material("shiny", 14.0))
    triangles = []
    while len(triangles) < n:
        v = rng.uniform(-5.0, 5.0, (3, 3))
        try:
            triangles.append(Triangle(v, id=len(triangles), material_id=len(triangles) % 2))
        except ValueError:
            continue
    return Scene("random", materials, tuple(triangles))
