"""Optical-density transforms, stain decomposition, and recomposition.

The color model: a tile's RGB values relate to optical density through
Beer-Lambert attenuation, ``od = -ln(max(I, 1) / i0)`` per channel, and
each pixel's OD vector is a nonnegative combination of two stain vectors
(hematoxylin, eosin) plus a residual direction orthogonal to their plane.

All functions are pure and deterministic; tiles are ``(H, W, 3)`` uint8
arrays, OD and concentration buffers are float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import DegenerateBasis

DEFAULT_I0 = 255.0

#: Condition-number limit for the 3x3 stain matrix before a solve is refused.
MAX_BASIS_CONDITION = 1e8

#: Default attenuation applied to the residual component during recomposition.
DEFAULT_RESIDUAL_SCALE = 0.01

_UNIT_TOL = 1e-9
_MIN_HE_ANGLE_DEG = 0.1


def check_rgb_tile(tile: np.ndarray) -> np.ndarray:
    """Validate an (H, W, 3) uint8 tile and return it C-contiguous."""
    tile = np.asarray(tile)
    if tile.dtype != np.uint8:
        raise TypeError(f"tile must be uint8, got {tile.dtype}")
    if tile.ndim != 3 or tile.shape[2] != 3:
        raise ValueError(f"tile must have shape (H, W, 3), got {tile.shape}")
    if tile.shape[0] < 1 or tile.shape[1] < 1:
        raise ValueError("tile must have positive height and width")
    return np.ascontiguousarray(tile)


def _check_i0(i0: float) -> float:
    i0 = float(i0)
    if not (i0 > 0.0) or not math.isfinite(i0):
        raise ValueError(f"i0 must be positive and finite, got {i0}")
    return i0


def orient_vector(v: np.ndarray) -> np.ndarray:
    """Flip the sign of ``v`` so its component sum is nonnegative.

    An exact-zero sum is disambiguated by the sign of the largest-magnitude
    component, keeping the choice deterministic.
    """
    s = float(v.sum())
    if s < 0.0 or (s == 0.0 and v[int(np.argmax(np.abs(v)))] < 0.0):
        return -v
    return v


def _as_unit_vector(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).reshape(3).copy()
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite components")
    n = float(np.linalg.norm(v))
    if abs(n - 1.0) > _UNIT_TOL:
        raise DegenerateBasis(f"{name} is not unit length (norm={n!r})")
    v.flags.writeable = False
    return v


@dataclass(frozen=True)
class StainBasis:
    """Three unit stain vectors spanning OD space.

    ``s_h`` and ``s_e`` are the hematoxylin and eosin absorbance directions
    (componentwise nonnegative); ``s_r`` is the residual direction,
    orthogonal to the H&E plane.
    """

    s_h: np.ndarray
    s_e: np.ndarray
    s_r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "s_h", _as_unit_vector(self.s_h, "s_h"))
        object.__setattr__(self, "s_e", _as_unit_vector(self.s_e, "s_e"))
        object.__setattr__(self, "s_r", _as_unit_vector(self.s_r, "s_r"))
        if np.any(self.s_h < 0.0) or np.any(self.s_e < 0.0):
            raise DegenerateBasis("stain vectors must have nonnegative components")
        if abs(float(self.s_r @ self.s_h)) > _UNIT_TOL or abs(float(self.s_r @ self.s_e)) > _UNIT_TOL:
            raise DegenerateBasis("s_r is not orthogonal to the H&E plane")
        if self.he_angle_deg <= _MIN_HE_ANGLE_DEG:
            raise DegenerateBasis(
                f"H and E vectors are indistinguishable (angle {self.he_angle_deg:.4f} deg)"
            )

    @classmethod
    def from_he(cls, s_h, s_e) -> "StainBasis":
        """Build a basis from H and E vectors; the residual is derived.

        Inputs are normalized; tiny negative components (>= -1e-9, numerical
        noise) are clamped to zero. The residual is the unit cross product,
        sign-fixed so its component sum is nonnegative.
        """
        vecs = []
        for name, v in (("s_h", s_h), ("s_e", s_e)):
            v = np.asarray(v, dtype=np.float64).reshape(3).copy()
            if np.any(v < -_UNIT_TOL):
                raise DegenerateBasis(f"{name} has negative components")
            np.maximum(v, 0.0, out=v)
            n = float(np.linalg.norm(v))
            if n < _UNIT_TOL:
                raise DegenerateBasis(f"{name} is a zero vector")
            vecs.append(v / n)
        h, e = vecs
        r = np.cross(h, e)
        rn = float(np.linalg.norm(r))
        if rn < 1e-12:
            raise DegenerateBasis("H and E vectors are parallel")
        r = orient_vector(r / rn)
        return cls(h, e, r)

    @cached_property
    def he_angle_deg(self) -> float:
        """Angle between the H and E vectors, in degrees in [0, 90]."""
        d = abs(float(self.s_h @ self.s_e))
        return math.degrees(math.acos(min(d, 1.0)))

    @cached_property
    def matrix(self) -> np.ndarray:
        """Column-stacked (3, 3) mixing matrix [s_h | s_e | s_r]."""
        m = np.column_stack([self.s_h, self.s_e, self.s_r])
        m.flags.writeable = False
        return m

    @cached_property
    def inverse(self) -> np.ndarray:
        """Inverse of :attr:`matrix`; raises DegenerateBasis if ill-conditioned."""
        cond = float(np.linalg.cond(self.matrix))
        if not math.isfinite(cond) or cond > MAX_BASIS_CONDITION:
            raise DegenerateBasis(f"stain matrix condition number {cond:.3e} exceeds limit")
        inv = np.ascontiguousarray(np.linalg.inv(self.matrix))
        inv.flags.writeable = False
        return inv

    def close_to(self, other: "StainBasis", tol_deg: float = 1e-6) -> bool:
        from .profiling import stain_angle  # local import to avoid a cycle

        return (
            stain_angle(self.s_h, other.s_h) <= tol_deg
            and stain_angle(self.s_e, other.s_e) <= tol_deg
        )


@dataclass(frozen=True)
class ConcentrationMaps:
    """Per-pixel stain intensities, channel order (H, E, residual)."""

    data: np.ndarray  # (H, W, 3) float64, nonnegative

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 3 or d.shape[2] != 3:
            raise ValueError(f"concentration data must be (H, W, 3), got {d.shape}")
        object.__setattr__(self, "data", d)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def i_h(self) -> np.ndarray:
        return self.data[:, :, 0]

    @property
    def i_e(self) -> np.ndarray:
        return self.data[:, :, 1]

    @property
    def i_r(self) -> np.ndarray:
        return self.data[:, :, 2]


def rgb_to_od(tile: np.ndarray, i0: float = DEFAULT_I0) -> np.ndarray:
    """Convert an (H, W, 3) uint8 tile to optical density.

    Channel values of 0 are clamped to 1 before the (natural) log, so OD is
    capped at ln(i0).
    """
    tile = check_rgb_tile(tile)
    i0 = _check_i0(i0)
    flat = _kernels.rgb_to_od(tile.reshape(-1, 3), i0)
    return flat.reshape(tile.shape)


def od_to_rgb(od: np.ndarray, i0: float = DEFAULT_I0) -> np.ndarray:
    """Invert :func:`rgb_to_od`: I = round(i0 * exp(-od)), clamped to [0, 255].

    Rounding is half away from zero. Negative OD values are tolerated and
    clamp to 255 after exponentiation.
    """
    od = np.ascontiguousarray(od, dtype=np.float64)
    if od.ndim != 3 or od.shape[2] != 3:
        raise ValueError(f"od must be (H, W, 3), got {od.shape}")
    i0 = _check_i0(i0)
    flat = _kernels.od_to_rgb(od.reshape(-1, 3), i0)
    return flat.reshape(od.shape)


def decompose(tile: np.ndarray, basis: StainBasis, i0: float = DEFAULT_I0) -> ConcentrationMaps:
    """Project a tile onto a stain basis.

    Each pixel's OD vector is solved exactly against the full-rank 3x3
    stain matrix, then intensities are clamped to >= 0.
    """
    tile = check_rgb_tile(tile)
    i0 = _check_i0(i0)
    inv = basis.inverse  # raises DegenerateBasis when ill-conditioned
    flat = _kernels.decompose(tile.reshape(-1, 3), inv, i0)
    return ConcentrationMaps(flat.reshape(tile.shape[0], tile.shape[1], 3))


def recompose(
    conc: ConcentrationMaps,
    target_basis: StainBasis,
    scale_h: float,
    scale_e: float,
    residual_scale: float = DEFAULT_RESIDUAL_SCALE,
    i0: float = DEFAULT_I0,
) -> np.ndarray:
    """Rebuild a tile from concentrations under a target basis.

    OD' = (scale_h * i_h) s_h' + (scale_e * i_e) s_e' + (residual_scale * i_r) s_r',
    quantized back to uint8. Higher scales only darken (absorbance adds).
    """
    i0 = _check_i0(i0)
    scales = np.array([scale_h, scale_e, residual_scale], dtype=np.float64)
    if np.any(scales < 0.0) or not np.all(np.isfinite(scales)):
        raise ValueError(f"scales must be nonnegative and finite, got {scales}")
    flat_conc = np.ascontiguousarray(conc.data.reshape(-1, 3))
    flat = _kernels.recompose(flat_conc, target_basis.matrix, scales, i0)
    return flat.reshape(conc.height, conc.width, 3)


def od_magnitudes(tile: np.ndarray, i0: float = DEFAULT_I0) -> np.ndarray:
    """Euclidean OD norm per pixel, shape (H, W). Hot path for screening."""
    tile = check_rgb_tile(tile)
    i0 = _check_i0(i0)
    flat = _kernels.od_norm(tile.reshape(-1, 3), i0)
    return flat.reshape(tile.shape[0], tile.shape[1])
