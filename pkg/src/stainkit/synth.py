"""Synthetic H&E tile generation for fixtures and benchmarks.

Tiles are rendered from known stain bases and per-pixel concentrations, so
tests can compare recovered quantities against the generating ground truth.
"""

from __future__ import annotations

import numpy as np

from .od import ConcentrationMaps, StainBasis, recompose

#: Conventional H&E absorbance directions (Macenko-lineage defaults).
CANONICAL_H = np.array([0.5626, 0.7201, 0.4062])
CANONICAL_E = np.array([0.2159, 0.8012, 0.5581])


def canonical_basis() -> StainBasis:
    return StainBasis.from_he(CANONICAL_H, CANONICAL_E)


def random_basis(rng: np.random.Generator, he_angle_deg=(12.0, 28.0)) -> StainBasis:
    """Draw a plausible random basis with an H-E angle in the given range.

    The H vector is a perturbed canonical hematoxylin direction; E is placed
    at the drawn angle from H, in the plane tilted toward the canonical
    eosin direction. Draws are rejected until all components are
    nonnegative, so the result is deterministic for a given generator state.
    """
    lo, hi = he_angle_deg
    for _ in range(1000):
        h = CANONICAL_H + rng.normal(0.0, 0.04, 3)
        if np.any(h <= 0.0):
            continue
        h /= np.linalg.norm(h)
        e_seed = CANONICAL_E + rng.normal(0.0, 0.04, 3)
        w = e_seed - (e_seed @ h) * h
        wn = np.linalg.norm(w)
        if wn < 1e-6:
            continue
        w /= wn
        theta = np.deg2rad(rng.uniform(lo, hi))
        e = np.cos(theta) * h + np.sin(theta) * w
        if np.any(e < 0.0):
            continue
        return StainBasis.from_he(h, e)
    raise RuntimeError("failed to draw a valid random basis")


def tile_from_concentrations(conc: np.ndarray, basis: StainBasis, i0: float = 255.0) -> np.ndarray:
    """Render an (H, W, 3) concentration array to a uint8 tile (no attenuation)."""
    return recompose(ConcentrationMaps(conc), basis, 1.0, 1.0, residual_scale=1.0, i0=i0)


def synthetic_tile(
    rng: np.random.Generator,
    basis: StainBasis,
    width: int = 448,
    height: int = 448,
    *,
    i0: float = 255.0,
    background_fraction: float = 0.1,
    pure_fraction: float = 0.02,
    h_max: float = 1.1,
    e_max: float = 0.8,
    residual_max: float = 0.0,
):
    """Generate a plausible H&E tile and its ground-truth concentrations.

    Pixels are background (white), nearly pure H, nearly pure E, or H+E
    mixtures; pure pixels sit in the upper half of the concentration range
    so angular extremes of the OD cloud align with the stain vectors.

    Returns ``(tile, conc)`` with ``conc`` of shape (height, width, 3).
    """
    n = width * height
    u = rng.random(n)
    bg = u < background_fraction
    b1 = background_fraction + pure_fraction
    b2 = b1 + pure_fraction
    pure_h = (u >= background_fraction) & (u < b1)
    pure_e = (u >= b1) & (u < b2)
    mix = u >= b2

    c = np.zeros((n, 3))
    c[mix, 0] = rng.uniform(0.15 * h_max, h_max, int(mix.sum()))
    c[mix, 1] = rng.uniform(0.15 * e_max, e_max, int(mix.sum()))
    c[pure_h, 0] = rng.uniform(0.5 * h_max, h_max, int(pure_h.sum()))
    c[pure_e, 1] = rng.uniform(0.5 * e_max, e_max, int(pure_e.sum()))
    if residual_max > 0.0:
        tissue = ~bg
        c[tissue, 2] = rng.uniform(0.0, residual_max, int(tissue.sum()))

    conc = c.reshape(height, width, 3)
    return tile_from_concentrations(conc, basis, i0), conc


def white_tile(width: int = 64, height: int = 64) -> np.ndarray:
    return np.full((height, width, 3), 255, dtype=np.uint8)
