"""Bound optical-density calls: rgb_to_od, od_to_rgb, decompose, recompose.

Thin wrappers over the toolkit kernels: same code path, bit-identical
results. Array arguments are validated at the boundary; toolkit errors
surface as :class:`~stainkit_bridge._boundary.BridgeError`.
"""

from __future__ import annotations

import numpy as np
import stainkit

from ._boundary import as_tile, bound

StainBasis = stainkit.StainBasis
ConcentrationMaps = stainkit.ConcentrationMaps


@bound
def rgb_to_od(tile: np.ndarray, i0: float = 255.0) -> np.ndarray:
    return stainkit.rgb_to_od(as_tile(tile), i0)


@bound
def od_to_rgb(od: np.ndarray, i0: float = 255.0) -> np.ndarray:
    od = np.asarray(od)
    if od.dtype != np.float64:
        raise TypeError(f"od must have dtype float64, got {od.dtype}")
    return stainkit.od_to_rgb(od, i0)


@bound
def decompose(tile: np.ndarray, basis: StainBasis, i0: float = 255.0) -> ConcentrationMaps:
    return stainkit.decompose(as_tile(tile), basis, i0)


@bound
def recompose(
    conc: ConcentrationMaps,
    target_basis: StainBasis,
    scale_h: float,
    scale_e: float,
    residual_scale: float = 0.01,
    i0: float = 255.0,
) -> np.ndarray:
    return stainkit.recompose(conc, target_basis, scale_h, scale_e, residual_scale, i0)
