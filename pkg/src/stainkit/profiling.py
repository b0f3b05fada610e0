"""Tile quality screening, profile aggregation, and reference libraries.

Slide- and condition-level stain representatives are componentwise medians
of per-tile profiles (vectors renormalized, residual re-orthogonalized).
Reference selection picks intensity extremes by the H+E intensity sum and
color-similarity extremes by the angle between H and E vectors; "low
similarity" means the *larger* angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .color import hue_angle_deg, srgb_to_lab
from .errors import (
    AchromaticColor,
    DegeneratePlane,
    EmptyInput,
    InsufficientPassingTiles,
    InsufficientTissue,
    TooFewConditions,
)
from .estimation import EstimationConfig, StainProfile, estimate_profile
from .od import DEFAULT_I0, StainBasis, check_rgb_tile, od_magnitudes
from .rng import substream

SELECTION_KEYS = ("low_intensity", "high_intensity", "low_similarity", "high_similarity")


@dataclass(frozen=True)
class TileQualityCriteria:
    """Configurable tile screening thresholds.

    ``hue_gates`` lists excluded HSV hue intervals in degrees (wrapping
    intervals like (350, 10) are allowed); a tile fails when any interval
    captures more than ``hue_gate_max_fraction`` of its tissue pixels.
    """

    min_tissue_fraction: float = 0.5
    tissue_od_threshold: float = 0.15
    max_dark_fraction: float = 0.1
    dark_od_threshold: float = 4.0
    min_saturation_mean: float = 0.05
    hue_gates: tuple = ()
    hue_gate_max_fraction: float = 0.2

    def __post_init__(self):
        for name in ("min_tissue_fraction", "max_dark_fraction", "hue_gate_max_fraction"):
            v = float(getattr(self, name))
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        object.__setattr__(self, "hue_gates", tuple(tuple(map(float, g)) for g in self.hue_gates))


@dataclass(frozen=True)
class ScreenResult:
    passed: bool
    reason: str | None
    tissue_fraction: float
    dark_fraction: float
    mean_saturation: float

    def __bool__(self) -> bool:
        return self.passed


def _hsv_saturation_hue(tile: np.ndarray):
    v = tile.astype(np.float64) / 255.0
    mx = v.max(axis=2)
    mn = v.min(axis=2)
    delta = mx - mn
    sat = np.where(mx > 0.0, delta / np.where(mx > 0.0, mx, 1.0), 0.0)

    hue = np.zeros_like(mx)
    nz = delta > 0.0
    r, g, b = v[:, :, 0], v[:, :, 1], v[:, :, 2]
    rmax = nz & (mx == r)
    gmax = nz & ~rmax & (mx == g)
    bmax = nz & ~rmax & ~gmax
    hue[rmax] = (60.0 * (g[rmax] - b[rmax]) / delta[rmax]) % 360.0
    hue[gmax] = 60.0 * (b[gmax] - r[gmax]) / delta[gmax] + 120.0
    hue[bmax] = 60.0 * (r[bmax] - g[bmax]) / delta[bmax] + 240.0
    return sat, hue


def _in_hue_interval(hue: np.ndarray, lo: float, hi: float) -> np.ndarray:
    lo %= 360.0
    hi %= 360.0
    if lo <= hi:
        return (hue >= lo) & (hue <= hi)
    return (hue >= lo) | (hue <= hi)


def screen_tile(
    tile: np.ndarray,
    criteria: TileQualityCriteria | None = None,
    i0: float = DEFAULT_I0,
) -> ScreenResult:
    """Pass/fail quality screening; the reason names the first failed check."""
    criteria = criteria or TileQualityCriteria()
    tile = check_rgb_tile(tile)
    mags = od_magnitudes(tile, i0)
    n = mags.size
    tissue = mags >= criteria.tissue_od_threshold
    tissue_fraction = float(tissue.sum()) / n
    dark_fraction = float((mags >= criteria.dark_od_threshold).sum()) / n
    sat, hue = _hsv_saturation_hue(tile)
    mean_sat = float(sat.mean())

    reason = None
    if tissue_fraction < criteria.min_tissue_fraction:
        reason = "tissue_fraction"
    elif dark_fraction > criteria.max_dark_fraction:
        reason = "dark_fraction"
    elif mean_sat < criteria.min_saturation_mean:
        reason = "saturation"
    elif criteria.hue_gates and tissue.any():
        tissue_hue = hue[tissue]
        for lo, hi in criteria.hue_gates:
            frac = float(_in_hue_interval(tissue_hue, lo, hi).mean())
            if frac > criteria.hue_gate_max_fraction:
                reason = "hue_gate"
                break
    return ScreenResult(reason is None, reason, tissue_fraction, dark_fraction, mean_sat)


def _median_unit_vector(vectors, name: str) -> np.ndarray:
    med = np.median(np.stack(vectors), axis=0)
    n = float(np.linalg.norm(med))
    if n < 1e-9:
        raise DegeneratePlane(f"median {name} vector vanished")
    return med / n


def aggregate_profiles(profiles, source_id: str | None = None) -> StainProfile:
    """Median-aggregate per-tile profiles into one representative.

    Stain vectors are componentwise medians renormalized to unit length; the
    residual is re-derived orthogonal to the aggregated plane. Intensities
    are scalar medians; tile counts sum.
    """
    profiles = list(profiles)
    if not profiles:
        raise EmptyInput("aggregate_profiles needs at least one profile")
    i0s = {p.i0 for p in profiles}
    if len(i0s) > 1:
        raise ValueError(f"profiles disagree on i0: {sorted(i0s)}")
    s_h = _median_unit_vector([p.basis.s_h for p in profiles], "H")
    s_e = _median_unit_vector([p.basis.s_e for p in profiles], "E")
    basis = StainBasis.from_he(s_h, s_e)
    return StainProfile(
        basis=basis,
        intensity_h=float(np.median([p.intensity_h for p in profiles])),
        intensity_e=float(np.median([p.intensity_e for p in profiles])),
        source_id=profiles[0].source_id if source_id is None else source_id,
        tile_count=sum(p.tile_count for p in profiles),
        i0=profiles[0].i0,
        metadata={"n_profiles": str(len(profiles))},
    )


def stain_angle(a, b) -> float:
    """Angle between two unit stain vectors, degrees in [0, 90]."""
    a = np.asarray(a, dtype=np.float64).reshape(3)
    b = np.asarray(b, dtype=np.float64).reshape(3)
    d = abs(float(a @ b)) / (float(np.linalg.norm(a)) * float(np.linalg.norm(b)))
    return math.degrees(math.acos(min(d, 1.0)))


def he_angle(x) -> float:
    """H-E angle of a StainBasis or StainProfile."""
    basis = x.basis if isinstance(x, StainProfile) else x
    return stain_angle(basis.s_h, basis.s_e)


def stain_hue(v, render_intensity: float = 1.0, i0: float = DEFAULT_I0) -> float:
    """CIELab hue angle of a stain rendered at the given intensity.

    The stain color is ``i0 * exp(-render_intensity * v)`` (continuous,
    unquantized). Raises AchromaticColor when chroma falls below 0.5 and the
    hue is meaningless.
    """
    if render_intensity <= 0.0:
        raise ValueError("render_intensity must be positive")
    v = np.asarray(v, dtype=np.float64).reshape(3)
    rgb = np.clip(float(i0) * np.exp(-render_intensity * v), 0.0, 255.0)
    _, a_star, b_star = srgb_to_lab(rgb)
    if math.hypot(a_star, b_star) < 0.5:
        raise AchromaticColor(f"chroma {math.hypot(a_star, b_star):.3f} below 0.5")
    return hue_angle_deg(a_star, b_star)


@dataclass(frozen=True)
class ReferenceLibrary:
    """Aggregated condition profiles plus the four selected references."""

    entries: dict  # condition_id -> StainProfile
    selected: dict  # selection key -> condition_id

    def __post_init__(self):
        missing = [k for k in SELECTION_KEYS if k not in self.selected]
        if missing:
            raise ValueError(f"library selection missing keys: {missing}")
        for key, cid in self.selected.items():
            if cid not in self.entries:
                raise ValueError(f"selected {key}={cid!r} is not a library condition")
        lo = self.entries[self.selected["low_intensity"]]
        hi = self.entries[self.selected["high_intensity"]]
        if lo.intensity_h + lo.intensity_e > hi.intensity_h + hi.intensity_e + 1e-12:
            raise ValueError("low_intensity selection exceeds high_intensity selection")
        if he_angle(self.entries[self.selected["low_similarity"]]) < he_angle(
            self.entries[self.selected["high_similarity"]]
        ) - 1e-12:
            raise ValueError("low_similarity selection has a smaller H-E angle than high_similarity")

    def profile_for(self, key: str) -> StainProfile:
        return self.entries[self.selected[key]]


def build_library(condition_profiles, overrides=None) -> ReferenceLibrary:
    """Aggregate per-condition profiles and select the four references.

    ``condition_profiles`` maps condition_id to a collection of profiles.
    Intensity extremes use the H+E intensity sum; similarity extremes use
    the H-E angle (low similarity = largest angle). Ties break
    lexicographically by condition_id. ``overrides`` pins selections by key.
    """
    if len(condition_profiles) < 2:
        raise TooFewConditions(f"need at least 2 conditions, got {len(condition_profiles)}")
    entries = {
        cid: aggregate_profiles(profs, source_id=cid)
        for cid, profs in condition_profiles.items()
    }
    intensity = {cid: p.intensity_h + p.intensity_e for cid, p in entries.items()}
    angle = {cid: he_angle(p) for cid, p in entries.items()}
    selected = {
        "low_intensity": min(sorted(entries), key=lambda c: (intensity[c], c)),
        "high_intensity": min(sorted(entries), key=lambda c: (-intensity[c], c)),
        "low_similarity": min(sorted(entries), key=lambda c: (-angle[c], c)),
        "high_similarity": min(sorted(entries), key=lambda c: (angle[c], c)),
    }
    if overrides:
        unknown = [k for k in overrides if k not in SELECTION_KEYS]
        if unknown:
            raise ValueError(f"unknown selection keys in overrides: {unknown}")
        for key, cid in overrides.items():
            if cid not in entries:
                raise ValueError(f"override {key}={cid!r} is not a library condition")
            selected[key] = cid
    return ReferenceLibrary(entries=entries, selected=selected)


@dataclass(frozen=True)
class SlideProfileSet:
    """Slide-level profiles plus screening tallies from characterization."""

    profiles: dict = field(default_factory=dict)  # slide_id -> StainProfile
    tallies: dict = field(default_factory=dict)  # slide_id -> {screened, passed, failed}

    def __contains__(self, slide_id: str) -> bool:
        return slide_id in self.profiles

    def __getitem__(self, slide_id: str) -> StainProfile:
        return self.profiles[slide_id]


def characterize_slide(
    candidates,
    criteria: TileQualityCriteria | None = None,
    cfg: EstimationConfig | None = None,
    n_tiles: int = 10,
    *,
    seed: int = 0,
    i0: float = DEFAULT_I0,
    slide_id: str = "",
    loader=None,
) -> StainProfile:
    """Profile one slide from a candidate tile list.

    Candidates are visited in a seeded pseudo-random permutation; each is
    screened, and the first ``n_tiles`` passing tiles are profiled and
    median-aggregated. ``loader`` maps a candidate item to an (H, W, 3)
    uint8 array; by default items are assumed to be arrays already.

    The returned profile's metadata records the sampling seed and the
    screening tallies. Estimation failures on a screened-pass tile count as
    failures and the walk continues.
    """
    criteria = criteria or TileQualityCriteria()
    cfg = cfg or EstimationConfig()
    candidates = list(candidates)
    if n_tiles < 1:
        raise ValueError("n_tiles must be positive")

    order = substream(seed, "tile-order", slide_id).permutation(len(candidates))
    profiles = []
    screened = 0
    failed = 0
    for idx in order:
        if len(profiles) == n_tiles:
            break
        tile = candidates[idx] if loader is None else loader(candidates[idx])
        screened += 1
        result = screen_tile(tile, criteria, i0)
        if not result.passed:
            failed += 1
            continue
        try:
            profiles.append(estimate_profile(tile, cfg, i0, source_id=slide_id))
        except (DegeneratePlane, InsufficientTissue):
            failed += 1
    if len(profiles) < n_tiles:
        raise InsufficientPassingTiles(
            f"slide {slide_id!r}: {len(profiles)} of {n_tiles} tiles passed "
            f"({screened} screened)"
        )
    profile = aggregate_profiles(profiles, source_id=slide_id)
    meta = dict(profile.metadata)
    meta.update(
        {
            "seed": str(seed),
            "n_tiles": str(n_tiles),
            "screened": str(screened),
            "failed": str(failed),
        }
    )
    return StainProfile(
        basis=profile.basis,
        intensity_h=profile.intensity_h,
        intensity_e=profile.intensity_e,
        source_id=slide_id,
        tile_count=profile.tile_count,
        i0=profile.i0,
        metadata=meta,
    )
