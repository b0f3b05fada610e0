"""Boundary validation and error mapping.

Every bound call validates array arguments here and funnels toolkit errors
through :class:`BridgeError`, which carries the primary taxonomy name so
pipelines can branch on it without importing the toolkit's error classes.
"""

from __future__ import annotations

import functools
import warnings

import numpy as np
from stainkit.errors import StainKitError


class BridgeError(Exception):
    """A toolkit error surfaced at the binding boundary.

    ``taxonomy`` holds the primary error class name (e.g.
    ``"InsufficientTissue"``); the original exception is chained as
    ``__cause__``.
    """

    def __init__(self, taxonomy: str, message: str):
        self.taxonomy = taxonomy
        super().__init__(f"{taxonomy}: {message}")


class NonContiguousInputWarning(UserWarning):
    """Emitted when a non-contiguous array had to be copied at the boundary."""


def as_tile(arr, name: str = "tile") -> np.ndarray:
    """Validate an (H, W, 3) uint8 tile view.

    Contiguous inputs pass through zero-copy; non-contiguous inputs are
    copied with a :class:`NonContiguousInputWarning`.
    """
    if not isinstance(arr, np.ndarray):
        raise TypeError(f"{name} must be a numpy.ndarray, got {type(arr).__name__}")
    if arr.dtype != np.uint8:
        raise TypeError(f"{name} must have dtype uint8, got {arr.dtype}")
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {arr.shape}")
    if not arr.flags.c_contiguous:
        warnings.warn(
            f"{name} is not C-contiguous; copying at the binding boundary",
            NonContiguousInputWarning,
            stacklevel=3,
        )
        return np.ascontiguousarray(arr)
    return arr


def bound(fn):
    """Re-raise toolkit errors as :class:`BridgeError` with the taxonomy name."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except StainKitError as exc:
            raise BridgeError(type(exc).__name__, str(exc)) from exc

    return wrapper
