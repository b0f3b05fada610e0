"""Stain profile estimation from OD pixel clouds.

The estimator follows the SVD plane-fitting approach: filter extreme-OD
pixels, fit the dominant two-dimensional subspace, and take angular
percentile extremes of the projected cloud as the stain directions. The
third singular direction becomes the residual vector.

Image-level intensity is the 95th percentile (linear-interpolation
definition) of the per-pixel stain intensities over *all* pixels of the
tile; only the basis fit uses the filtered subset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePlane, EmptyInput, InsufficientTissue
from .od import DEFAULT_I0, StainBasis, check_rgb_tile, decompose, orient_vector, rgb_to_od

#: Most-negative stain-vector component tolerated before the fit is rejected.
MAX_NEGATIVE_COMPONENT = 0.05


@dataclass(frozen=True)
class EstimationConfig:
    """Knobs for basis estimation.

    ``od_max`` is an absolute OD-magnitude cap; when ``None`` the cap is the
    ``od_max_percentile`` of the magnitudes above ``od_min``. The
    ``he_assignment`` heuristic labels the extreme with the larger
    red-channel absorbance as hematoxylin; set ``"swap"`` to invert it for
    unusual stains.
    """

    od_min: float = 0.15
    od_max: float | None = None
    od_max_percentile: float = 99.5
    angle_alpha: float = 1.0
    intensity_percentile: float = 95.0
    min_valid_pixels: int = 1000
    he_assignment: str = "auto"

    def __post_init__(self):
        if not 0.0 < self.angle_alpha < 50.0:
            raise ValueError(f"angle_alpha must be in (0, 50), got {self.angle_alpha}")
        if self.od_min < 0.0:
            raise ValueError("od_min must be nonnegative")
        if self.od_max is not None and self.od_max <= self.od_min:
            raise ValueError("od_max must exceed od_min")
        if not 0.0 < self.od_max_percentile <= 100.0:
            raise ValueError("od_max_percentile must be in (0, 100]")
        if not 0.0 <= self.intensity_percentile <= 100.0:
            raise ValueError("intensity_percentile must be in [0, 100]")
        if self.min_valid_pixels < 3:
            raise ValueError("min_valid_pixels must be at least 3")
        if self.he_assignment not in ("auto", "swap"):
            raise ValueError(f"he_assignment must be 'auto' or 'swap', got {self.he_assignment!r}")


@dataclass(frozen=True)
class StainProfile:
    """A stain basis plus image-level H&E intensities and provenance."""

    basis: StainBasis
    intensity_h: float
    intensity_e: float
    source_id: str = ""
    tile_count: int = 1
    i0: float = DEFAULT_I0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("intensity_h", "intensity_e"):
            v = float(getattr(self, name))
            if not (v >= 0.0) or not math.isfinite(v):
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")
            object.__setattr__(self, name, v)
        if self.tile_count < 1:
            raise ValueError("tile_count must be positive")
        object.__setattr__(self, "i0", float(self.i0))


def percentile(values, p: float) -> float:
    """Linear-interpolation percentile of a collection.

    rank = (n - 1) * p / 100 on the sorted values, interpolated between the
    adjacent order statistics. Matches numpy's default method.
    """
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise EmptyInput("percentile of an empty collection")
    if not 0.0 <= p <= 100.0:
        raise ValueError(f"percentile must be in [0, 100], got {p}")
    return float(np.percentile(arr, p))


def _extreme_direction(v1: np.ndarray, v2: np.ndarray, phi: float) -> np.ndarray:
    v = math.cos(phi) * v1 + math.sin(phi) * v2
    v = orient_vector(v)
    if float(v.min()) < -MAX_NEGATIVE_COMPONENT:
        raise DegeneratePlane(
            f"extreme stain direction has negative absorbance {v.min():.4f}"
        )
    v = np.maximum(v, 0.0)
    n = float(np.linalg.norm(v))
    if n < 1e-9:
        raise DegeneratePlane("extreme stain direction vanished after clamping")
    return v / n


def estimate_basis(od_pixels: np.ndarray, cfg: EstimationConfig | None = None) -> StainBasis:
    """Estimate a stain basis from an (N, 3) OD pixel cloud.

    Raises InsufficientTissue when too few pixels survive filtering and
    DegeneratePlane when the cloud is effectively one-dimensional or the
    angular extremes leave the physical (nonnegative) octant.
    """
    cfg = cfg or EstimationConfig()
    od = np.asarray(od_pixels, dtype=np.float64)
    if od.ndim != 2 or od.shape[1] != 3:
        raise ValueError(f"od_pixels must be (N, 3), got {od.shape}")

    mags = np.linalg.norm(od, axis=1)
    keep = mags >= cfg.od_min
    if keep.any():
        cap = cfg.od_max if cfg.od_max is not None else float(
            np.percentile(mags[keep], cfg.od_max_percentile)
        )
        keep &= mags <= cap
    n_valid = int(keep.sum())
    if n_valid < cfg.min_valid_pixels:
        raise InsufficientTissue(
            f"{n_valid} pixels survive OD filtering, need {cfg.min_valid_pixels}"
        )
    x = od[keep]

    _, s, vt = np.linalg.svd(x, full_matrices=False)
    if s[0] <= 0.0 or s[1] < 1e-6 * s[0]:
        raise DegeneratePlane(
            f"second singular value {s[1]:.3e} is negligible against {s[0]:.3e}"
        )
    v1 = orient_vector(vt[0])
    v2 = orient_vector(vt[1])

    phi = np.arctan2(x @ v2, x @ v1)
    phi_lo = float(np.percentile(phi, cfg.angle_alpha))
    phi_hi = float(np.percentile(phi, 100.0 - cfg.angle_alpha))
    cand_lo = _extreme_direction(v1, v2, phi_lo)
    cand_hi = _extreme_direction(v1, v2, phi_hi)

    # Hematoxylin absorbs red light most strongly; ties go to the lower angle.
    if cand_lo[0] > cand_hi[0] or (cand_lo[0] == cand_hi[0]):
        s_h, s_e = cand_lo, cand_hi
    else:
        s_h, s_e = cand_hi, cand_lo
    if cfg.he_assignment == "swap":
        s_h, s_e = s_e, s_h

    cos_he = abs(float(s_h @ s_e))
    if math.degrees(math.acos(min(cos_he, 1.0))) <= 0.1:
        raise DegeneratePlane("H and E extremes are indistinguishable")

    return StainBasis.from_he(s_h, s_e)


def estimate_profile(
    tile: np.ndarray,
    cfg: EstimationConfig | None = None,
    i0: float = DEFAULT_I0,
    *,
    source_id: str = "",
    metadata: dict | None = None,
    basis: StainBasis | None = None,
) -> StainProfile:
    """Estimate basis and image-level intensities for one tile.

    Intensities are the configured percentile of the per-pixel H and E
    concentrations over all pixels. Pass ``basis`` to skip estimation and
    profile against a known basis (used when a tile alone cannot constrain
    the stain plane, e.g. constant-concentration synthetics).
    """
    cfg = cfg or EstimationConfig()
    tile = check_rgb_tile(tile)
    if basis is None:
        od = rgb_to_od(tile, i0).reshape(-1, 3)
        basis = estimate_basis(od, cfg)
    conc = decompose(tile, basis, i0)
    return StainProfile(
        basis=basis,
        intensity_h=percentile(conc.i_h, cfg.intensity_percentile),
        intensity_e=percentile(conc.i_e, cfg.intensity_percentile),
        source_id=source_id,
        tile_count=1,
        i0=float(i0),
        metadata=dict(metadata or {}),
    )
