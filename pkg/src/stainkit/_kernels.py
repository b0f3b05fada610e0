"""Per-pixel optical-density kernels.

Two interchangeable backends compute the same float64 math:

* a numba ``@njit(nogil=True)`` backend (default when numba imports), whose
  kernels release the GIL so the batch path can scale across threads;
* a pure-numpy backend, selected by setting ``STAINKIT_DISABLE_NUMBA=1``
  before import (or used automatically if numba is unavailable).

Each backend is deterministic: identical inputs give bit-identical outputs.
Across backends, results agree except for sub-ulp libm differences in
log/exp, which can move a quantized channel value by at most one count
(see tests and benchmarks/bench_kernels.py).

Conventions fixed here for the whole toolkit:
 - OD uses the natural logarithm; channel values are clamped to 1 before
   the log, capping OD at ln(i0).
 - Quantization back to 8 bits rounds half away from zero (values are
   nonnegative, so this is floor(x + 0.5)) and clamps to [0, 255].

All kernels take flat (N, 3) C-contiguous arrays.
"""

from __future__ import annotations

import math
import os

import numpy as np

_ENV_FLAG = "STAINKIT_DISABLE_NUMBA"


def _numba_disabled() -> bool:
    return os.environ.get(_ENV_FLAG, "").strip().lower() in ("1", "true", "yes", "on")


# ---------------------------------------------------------------------------
# numpy backend (reference implementation)
# ---------------------------------------------------------------------------

def rgb_to_od_numpy(rgb: np.ndarray, i0: float) -> np.ndarray:
    arr = rgb.astype(np.float64)
    np.maximum(arr, 1.0, out=arr)
    arr /= i0
    return -np.log(arr)


def od_to_rgb_numpy(od: np.ndarray, i0: float) -> np.ndarray:
    x = i0 * np.exp(-od)
    q = np.floor(x + 0.5)
    np.clip(q, 0.0, 255.0, out=q)
    return q.astype(np.uint8)


def decompose_numpy(rgb: np.ndarray, inv_m: np.ndarray, i0: float) -> np.ndarray:
    od = rgb_to_od_numpy(rgb, i0)
    conc = np.empty_like(od)
    for k in range(3):
        conc[:, k] = inv_m[k, 0] * od[:, 0] + inv_m[k, 1] * od[:, 1] + inv_m[k, 2] * od[:, 2]
    np.maximum(conc, 0.0, out=conc)
    return conc


def recompose_numpy(conc: np.ndarray, mix: np.ndarray, scales: np.ndarray, i0: float) -> np.ndarray:
    s = conc * scales
    od = np.empty_like(s)
    for c in range(3):
        od[:, c] = mix[c, 0] * s[:, 0] + mix[c, 1] * s[:, 1] + mix[c, 2] * s[:, 2]
    return od_to_rgb_numpy(od, i0)


def transform_numpy(rgb: np.ndarray, inv_m: np.ndarray, mix: np.ndarray,
                    scales: np.ndarray, i0: float) -> np.ndarray:
    return recompose_numpy(decompose_numpy(rgb, inv_m, i0), mix, scales, i0)


def od_norm_numpy(rgb: np.ndarray, i0: float) -> np.ndarray:
    od = rgb_to_od_numpy(rgb, i0)
    return np.sqrt(od[:, 0] ** 2 + od[:, 1] ** 2 + od[:, 2] ** 2)


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

HAVE_NUMBA = False

if not _numba_disabled():
    try:
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        HAVE_NUMBA = False

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def rgb_to_od_numba(rgb, i0):
        n = rgb.shape[0]
        out = np.empty((n, 3), dtype=np.float64)
        for i in range(n):
            for c in range(3):
                v = float(rgb[i, c])
                if v < 1.0:
                    v = 1.0
                out[i, c] = -math.log(v / i0)
        return out

    @njit(cache=True, nogil=True)
    def od_to_rgb_numba(od, i0):
        n = od.shape[0]
        out = np.empty((n, 3), dtype=np.uint8)
        for i in range(n):
            for c in range(3):
                q = math.floor(i0 * math.exp(-od[i, c]) + 0.5)
                if q < 0.0:
                    q = 0.0
                elif q > 255.0:
                    q = 255.0
                out[i, c] = np.uint8(q)
        return out

    @njit(cache=True, nogil=True)
    def decompose_numba(rgb, inv_m, i0):
        n = rgb.shape[0]
        out = np.empty((n, 3), dtype=np.float64)
        for i in range(n):
            v0 = float(rgb[i, 0])
            v1 = float(rgb[i, 1])
            v2 = float(rgb[i, 2])
            if v0 < 1.0:
                v0 = 1.0
            if v1 < 1.0:
                v1 = 1.0
            if v2 < 1.0:
                v2 = 1.0
            od0 = -math.log(v0 / i0)
            od1 = -math.log(v1 / i0)
            od2 = -math.log(v2 / i0)
            for k in range(3):
                c = inv_m[k, 0] * od0 + inv_m[k, 1] * od1 + inv_m[k, 2] * od2
                out[i, k] = c if c > 0.0 else 0.0
        return out

    @njit(cache=True, nogil=True)
    def recompose_numba(conc, mix, scales, i0):
        n = conc.shape[0]
        out = np.empty((n, 3), dtype=np.uint8)
        for i in range(n):
            s0 = conc[i, 0] * scales[0]
            s1 = conc[i, 1] * scales[1]
            s2 = conc[i, 2] * scales[2]
            for c in range(3):
                od = mix[c, 0] * s0 + mix[c, 1] * s1 + mix[c, 2] * s2
                q = math.floor(i0 * math.exp(-od) + 0.5)
                if q < 0.0:
                    q = 0.0
                elif q > 255.0:
                    q = 255.0
                out[i, c] = np.uint8(q)
        return out

    @njit(cache=True, nogil=True)
    def transform_numba(rgb, inv_m, mix, scales, i0):
        n = rgb.shape[0]
        out = np.empty((n, 3), dtype=np.uint8)
        for i in range(n):
            v0 = float(rgb[i, 0])
            v1 = float(rgb[i, 1])
            v2 = float(rgb[i, 2])
            if v0 < 1.0:
                v0 = 1.0
            if v1 < 1.0:
                v1 = 1.0
            if v2 < 1.0:
                v2 = 1.0
            od0 = -math.log(v0 / i0)
            od1 = -math.log(v1 / i0)
            od2 = -math.log(v2 / i0)
            c0 = inv_m[0, 0] * od0 + inv_m[0, 1] * od1 + inv_m[0, 2] * od2
            c1 = inv_m[1, 0] * od0 + inv_m[1, 1] * od1 + inv_m[1, 2] * od2
            c2 = inv_m[2, 0] * od0 + inv_m[2, 1] * od1 + inv_m[2, 2] * od2
            if c0 < 0.0:
                c0 = 0.0
            if c1 < 0.0:
                c1 = 0.0
            if c2 < 0.0:
                c2 = 0.0
            s0 = c0 * scales[0]
            s1 = c1 * scales[1]
            s2 = c2 * scales[2]
            for c in range(3):
                od = mix[c, 0] * s0 + mix[c, 1] * s1 + mix[c, 2] * s2
                q = math.floor(i0 * math.exp(-od) + 0.5)
                if q < 0.0:
                    q = 0.0
                elif q > 255.0:
                    q = 255.0
                out[i, c] = np.uint8(q)
        return out

    @njit(cache=True, nogil=True)
    def od_norm_numba(rgb, i0):
        n = rgb.shape[0]
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            v0 = float(rgb[i, 0])
            v1 = float(rgb[i, 1])
            v2 = float(rgb[i, 2])
            if v0 < 1.0:
                v0 = 1.0
            if v1 < 1.0:
                v1 = 1.0
            if v2 < 1.0:
                v2 = 1.0
            od0 = -math.log(v0 / i0)
            od1 = -math.log(v1 / i0)
            od2 = -math.log(v2 / i0)
            out[i] = math.sqrt(od0 * od0 + od1 * od1 + od2 * od2)
        return out

    rgb_to_od = rgb_to_od_numba
    od_to_rgb = od_to_rgb_numba
    decompose = decompose_numba
    recompose = recompose_numba
    transform = transform_numba
    od_norm = od_norm_numba
else:
    rgb_to_od = rgb_to_od_numpy
    od_to_rgb = od_to_rgb_numpy
    decompose = decompose_numpy
    recompose = recompose_numpy
    transform = transform_numpy
    od_norm = od_norm_numpy


def active_backend() -> str:
    """Name of the kernel backend in use: ``"numba"`` or ``"numpy"``."""
    return "numba" if HAVE_NUMBA else "numpy"


def warmup() -> None:
    """Trigger JIT compilation of all kernels (no-op on the numpy backend)."""
    rgb = np.zeros((2, 3), dtype=np.uint8)
    eye = np.eye(3)
    ones = np.ones(3)
    conc = decompose(rgb, eye, 255.0)
    recompose(conc, eye, ones, 255.0)
    transform(rgb, eye, eye, ones, 255.0)
    od_to_rgb(rgb_to_od(rgb, 255.0), 255.0)
    od_norm(rgb, 255.0)
