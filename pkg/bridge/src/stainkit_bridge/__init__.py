"""stainkit-bridge: array-boundary bindings for the stainkit kernels.

Exposes the stain transforms, profile estimation/(de)serialization, and
condition simulation to ML pipelines as numpy-array calls with strict
boundary validation. The bindings wrap the toolkit directly (one source of
numerical truth): results are bit-identical to the toolkit's own, and
contiguous inputs pass through zero-copy.
"""

from . import od, profile, simulate
from ._boundary import BridgeError, NonContiguousInputWarning

__version__ = "0.1.0"

__all__ = ["BridgeError", "NonContiguousInputWarning", "od", "profile", "simulate"]
