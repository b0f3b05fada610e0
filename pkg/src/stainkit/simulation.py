"""Staining-condition planning and deterministic tile transformation.

A condition either rescales stain intensities against the source basis
(intensity conditions), swaps in a reference basis at unit scales (color
conditions), or passes tiles through untouched (reference). The transform
is decompose -> scale -> recompose with the residual attenuated.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import MissingProfile, ZeroSourceIntensity
from .estimation import StainProfile
from .od import DEFAULT_I0, DEFAULT_RESIDUAL_SCALE, StainBasis, check_rgb_tile
from .profiling import ReferenceLibrary

CONDITIONS = ("reference", "low_intensity", "high_intensity", "low_similarity", "high_similarity")
SIMULATED_CONDITIONS = CONDITIONS[1:]
INTENSITY_CONDITIONS = ("low_intensity", "high_intensity")
COLOR_CONDITIONS = ("low_similarity", "high_similarity")

_MIN_SOURCE_INTENSITY = 1e-6


@dataclass(frozen=True)
class SimulationCondition:
    """Declarative transform target for one staining condition."""

    condition_id: str
    target_basis: StainBasis
    scale_h: float
    scale_e: float
    residual_scale: float = DEFAULT_RESIDUAL_SCALE
    passthrough: bool = False

    def __post_init__(self):
        if self.condition_id not in CONDITIONS:
            raise ValueError(f"unknown condition_id {self.condition_id!r}")
        for name in ("scale_h", "scale_e", "residual_scale"):
            if float(getattr(self, name)) < 0.0:
                raise ValueError(f"{name} must be nonnegative")


def plan_conditions(
    source: StainProfile,
    library: ReferenceLibrary,
    residual_scale: float = DEFAULT_RESIDUAL_SCALE,
    *,
    force_reference_roundtrip: bool = False,
) -> list[SimulationCondition]:
    """Derive the five conditions for one slide from its profile.

    Intensity conditions keep the source basis and scale concentrations by
    the reference/source intensity ratio; color conditions keep unit scales
    and swap in the reference basis. The reference condition is a bit-exact
    passthrough unless ``force_reference_roundtrip`` requests the
    decompose/recompose round trip for ablation.
    """
    if source.intensity_h < _MIN_SOURCE_INTENSITY or source.intensity_e < _MIN_SOURCE_INTENSITY:
        raise ZeroSourceIntensity(
            f"source intensities ({source.intensity_h}, {source.intensity_e}) too small to scale"
        )
    conditions = [
        SimulationCondition(
            "reference",
            source.basis,
            1.0,
            1.0,
            residual_scale,
            passthrough=not force_reference_roundtrip,
        )
    ]
    for cid in INTENSITY_CONDITIONS:
        ref = library.profile_for(cid)
        conditions.append(
            SimulationCondition(
                cid,
                source.basis,
                ref.intensity_h / source.intensity_h,
                ref.intensity_e / source.intensity_e,
                residual_scale,
            )
        )
    for cid in COLOR_CONDITIONS:
        ref = library.profile_for(cid)
        conditions.append(SimulationCondition(cid, ref.basis, 1.0, 1.0, residual_scale))
    return conditions


def simulate_tile(
    tile: np.ndarray,
    source_basis: StainBasis,
    cond: SimulationCondition,
    i0: float = DEFAULT_I0,
) -> np.ndarray:
    """Transform one tile to a staining condition (pure, deterministic)."""
    if cond.passthrough:
        return tile
    tile = check_rgb_tile(tile)
    scales = np.array([cond.scale_h, cond.scale_e, cond.residual_scale], dtype=np.float64)
    flat = _kernels.transform(
        tile.reshape(-1, 3),
        source_basis.inverse,
        cond.target_basis.matrix,
        scales,
        float(i0),
    )
    return flat.reshape(tile.shape)


def simulate_tiles(
    tiles,
    source_basis: StainBasis,
    cond: SimulationCondition,
    i0: float = DEFAULT_I0,
    workers: int = 1,
) -> list:
    """Transform a batch of tiles, optionally across threads.

    The kernels release the GIL, so threads scale on real cores; outputs are
    positionally ordered and independent of scheduling.
    """
    if workers <= 1:
        return [simulate_tile(t, source_basis, cond, i0) for t in tiles]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: simulate_tile(t, source_basis, cond, i0), tiles))


@dataclass
class RunReport:
    tiles_written: int = 0
    failures: list = field(default_factory=list)  # [{"slide_id":, "reason":}]
    elapsed_s: float = 0.0

    def to_doc(self) -> dict:
        return {
            "tiles_written": self.tiles_written,
            "failures": list(self.failures),
            "elapsed_s": self.elapsed_s,
        }


def simulate_batch(
    manifest: dict,
    profiles,
    library: ReferenceLibrary,
    out_root,
    *,
    i0: float = DEFAULT_I0,
    residual_scale: float = DEFAULT_RESIDUAL_SCALE,
    conditions=None,
    workers: int = 1,
    force_reference_roundtrip: bool = False,
) -> RunReport:
    """Transform every manifest tile under every condition and write PNGs.

    Layout: ``out_root/<condition_id>/<slide_id>/<tile_name>.png``. Slides
    without a profile are recorded as MissingProfile failures and skipped;
    I/O errors propagate. Reruns with identical inputs produce bit-identical
    tile trees.
    """
    from .io import read_tile, write_tile  # deferred: keep module import-light

    out_root = Path(out_root)
    wanted = tuple(conditions) if conditions else CONDITIONS
    unknown = [c for c in wanted if c not in CONDITIONS]
    if unknown:
        raise ValueError(f"unknown conditions requested: {unknown}")

    profile_map = getattr(profiles, "profiles", profiles)
    report = RunReport()
    start = time.perf_counter()

    tasks = []
    for slide_id, tile_paths in manifest.items():
        if slide_id not in profile_map:
            report.failures.append({"slide_id": slide_id, "reason": MissingProfile.__name__})
            continue
        source = profile_map[slide_id]
        conds = plan_conditions(
            source, library, residual_scale, force_reference_roundtrip=force_reference_roundtrip
        )
        for cond in conds:
            if cond.condition_id not in wanted:
                continue
            for tile_path in tile_paths:
                tasks.append((slide_id, source.basis, cond, Path(tile_path)))

    def run_task(task) -> int:
        slide_id, basis, cond, tile_path = task
        tile = read_tile(tile_path)
        out = simulate_tile(tile, basis, cond, i0)
        dest = out_root / cond.condition_id / slide_id / (tile_path.stem + ".png")
        write_tile(dest, out)
        return 1

    if workers <= 1:
        written = sum(run_task(t) for t in tasks)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            written = sum(pool.map(run_task, tasks))

    report.tiles_written = written
    report.elapsed_s = time.perf_counter() - start
    return report
