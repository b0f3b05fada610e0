"""Bound profile calls: estimation plus JSON (de)serialization.

The JSON schema is the toolkit's; documents written by the CLI load here
with identical field values.
"""

from __future__ import annotations

import numpy as np
import stainkit
from stainkit import io as _io

from ._boundary import as_tile, bound

EstimationConfig = stainkit.EstimationConfig
StainProfile = stainkit.StainProfile


@bound
def estimate_profile(
    tile: np.ndarray,
    cfg: EstimationConfig | None = None,
    i0: float = 255.0,
    *,
    source_id: str = "",
    basis=None,
) -> StainProfile:
    return stainkit.estimate_profile(
        as_tile(tile), cfg, i0, source_id=source_id, basis=basis
    )


@bound
def save_profile(profile: StainProfile, path) -> None:
    _io.save_profile(profile, path)


@bound
def load_profile(path) -> StainProfile:
    return _io.load_profile(path)


@bound
def load_profile_set(path):
    return _io.load_profile_set(path)


@bound
def load_library(path):
    return _io.load_library(path)
