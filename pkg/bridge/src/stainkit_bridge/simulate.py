"""Bound simulation calls: condition planning and tile transformation."""

from __future__ import annotations

import numpy as np
import stainkit

from ._boundary import as_tile, bound

SimulationCondition = stainkit.SimulationCondition


@bound
def plan_conditions(source, library, residual_scale: float = 0.01, **kwargs):
    return stainkit.plan_conditions(source, library, residual_scale, **kwargs)


@bound
def simulate_tile(
    tile: np.ndarray,
    source_basis,
    cond: SimulationCondition,
    i0: float = 255.0,
) -> np.ndarray:
    return stainkit.simulate_tile(as_tile(tile), source_basis, cond, i0)
