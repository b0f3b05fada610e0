"""sRGB to CIELab conversion (D65 white point, 2-degree observer)."""

from __future__ import annotations

import math

import numpy as np

_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_D65 = np.array([0.95047, 1.0, 1.08883])
_EPS = 216.0 / 24389.0  # (6/29)^3
_KAPPA = 24389.0 / 27.0


def srgb_to_xyz(rgb) -> np.ndarray:
    """Convert an sRGB triple (channel range [0, 255]) to XYZ in [0, 1] scale."""
    v = np.asarray(rgb, dtype=np.float64).reshape(3) / 255.0
    v = np.clip(v, 0.0, 1.0)
    lin = np.where(v > 0.04045, ((v + 0.055) / 1.055) ** 2.4, v / 12.92)
    return _SRGB_TO_XYZ @ lin


def xyz_to_lab(xyz) -> tuple[float, float, float]:
    t = np.asarray(xyz, dtype=np.float64).reshape(3) / _D65
    f = np.where(t > _EPS, np.cbrt(t), (_KAPPA * t + 16.0) / 116.0)
    l_star = 116.0 * f[1] - 16.0
    a_star = 500.0 * (f[0] - f[1])
    b_star = 200.0 * (f[1] - f[2])
    return float(l_star), float(a_star), float(b_star)


def srgb_to_lab(rgb) -> tuple[float, float, float]:
    return xyz_to_lab(srgb_to_xyz(rgb))


def hue_angle_deg(a_star: float, b_star: float) -> float:
    """CIELab hue angle atan2(b*, a*) mapped to [0, 360)."""
    return math.degrees(math.atan2(b_star, a_star)) % 360.0
