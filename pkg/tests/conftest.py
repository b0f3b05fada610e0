import math
from pathlib import Path

import numpy as np
import pytest

from stainkit import _kernels
from stainkit.estimation import StainProfile
from stainkit.od import StainBasis
from stainkit.profiling import ReferenceLibrary
from stainkit.synth import canonical_basis


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    _kernels.warmup()


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.passed:
        outcome = "PASS"
    elif hasattr(report, "wasxfail"):
        outcome = "XFAIL (environment cannot satisfy premise)"
    else:
        outcome = "FAIL"
    print(f"\nACCEPTANCE {name}: {outcome}", flush=True)


@pytest.fixture
def basis() -> StainBasis:
    return canonical_basis()


def make_profile(basis, intensity_h, intensity_e, source_id="p", tile_count=1, i0=255.0):
    return StainProfile(
        basis=basis,
        intensity_h=intensity_h,
        intensity_e=intensity_e,
        source_id=source_id,
        tile_count=tile_count,
        i0=i0,
    )


def rotated_basis(base: StainBasis, delta_deg: float) -> StainBasis:
    """Open the H-E angle of ``base`` by rotating E away from H in-plane.

    Components pushed below zero are clamped and the vector renormalized,
    so the realized angle can differ slightly from the request.
    """
    h = base.s_h
    e = base.s_e
    w = e - (e @ h) * h
    w /= np.linalg.norm(w)
    theta = math.radians(base.he_angle_deg + delta_deg)
    e_new = np.maximum(math.cos(theta) * h + math.sin(theta) * w, 0.0)
    return StainBasis.from_he(h, e_new)


def make_reference_library(source_basis: StainBasis) -> ReferenceLibrary:
    """Four-condition fixture library anchored at published-range intensities.

    Intensity references: low (H=0.68, E=0.63), high (H=3.22, E=2.02).
    Color references at distinct H-E angles around the source's.
    """
    wide = rotated_basis(source_basis, 8.0)
    narrow = rotated_basis(source_basis, -8.0)
    entries = {
        "cond_low": [make_profile(source_basis, 0.68, 0.63, "cond_low")],
        "cond_high": [make_profile(source_basis, 3.22, 2.02, "cond_high")],
        "cond_wide": [make_profile(wide, 1.5, 1.0, "cond_wide")],
        "cond_narrow": [make_profile(narrow, 1.4, 0.9, "cond_narrow")],
    }
    from stainkit.profiling import build_library

    return build_library(entries)


# ---------------------------------------------------------------------------
# independent oracles (kept free of the code paths they check)
# ---------------------------------------------------------------------------

def pairwise_auc(labels, scores) -> float:
    """Exhaustive Mann-Whitney oracle: 1 per win, 0.5 per tie."""
    pos = [s for l, s in zip(labels, scores) if l == 1]
    neg = [s for l, s in zip(labels, scores) if l == 0]
    credit = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                credit += 1.0
            elif p == q:
                credit += 0.5
    return credit / (len(pos) * len(neg))


def sorted_percentile(values, p) -> float:
    """Linear-interpolation percentile straight from the rank formula."""
    v = sorted(float(x) for x in values)
    rank = (len(v) - 1) * p / 100.0
    lo = math.floor(rank)
    hi = math.ceil(rank)
    return v[lo] + (rank - lo) * (v[hi] - v[lo])


def render_od_pixels(conc_flat: np.ndarray, basis: StainBasis, i0: float = 255.0) -> np.ndarray:
    """Forward-synthesize quantized RGB pixels from (N, 3) concentrations.

    Plain numpy, independent of the package kernels.
    """
    m = np.column_stack([np.asarray(basis.s_h), np.asarray(basis.s_e), np.asarray(basis.s_r)])
    od = conc_flat @ m.T
    rgb = np.floor(i0 * np.exp(-od) + 0.5)
    return np.clip(rgb, 0, 255).astype(np.uint8)


def build_pipeline_fixture(root, seed=0, n_slides=3, tiles_per_slide=12, side=128):
    """Write a miniature end-to-end fixture under ``root``.

    Creates synthetic slide tiles plus a manifest, per-condition profile
    directories for build-library, and a predictions CSV. Returns the paths.
    """
    from stainkit.evaluation import CohortSpec, ConditionEffect, synth_cohort
    from stainkit.io import save_manifest, save_profile, write_tile
    from stainkit.rng import substream
    from stainkit.simulation import SIMULATED_CONDITIONS
    from stainkit.synth import random_basis, synthetic_tile

    root = Path(root)
    rng = substream(seed, "fixture")
    manifest = {}
    for s in range(n_slides):
        slide_id = f"slide{s:02d}"
        basis = random_basis(rng)
        paths = []
        for t in range(tiles_per_slide):
            tile, _ = synthetic_tile(rng, basis, side, side, background_fraction=0.15)
            p = root / "tiles" / slide_id / f"tile{t:02d}.png"
            write_tile(p, tile)
            paths.append(p)
        manifest[slide_id] = paths
    manifest_path = root / "manifest.csv"
    save_manifest(manifest, manifest_path)

    conditions_root = root / "condition_profiles"
    intensities = {"c_low": (0.68, 0.63), "c_high": (3.22, 2.02), "c_wide": (1.5, 1.0), "c_narrow": (1.4, 0.9)}
    for cid, (ih, ie) in intensities.items():
        b = canonical_basis()
        if cid == "c_wide":
            b = rotated_basis(b, 6.0)
        elif cid == "c_narrow":
            b = rotated_basis(b, -10.0)
        for k in range(2):
            save_profile(
                make_profile(b, ih + 0.01 * k, ie, cid),
                conditions_root / cid / f"p{k}.json",
            )

    spec = CohortSpec(
        n_slides=20,
        n_pos=9,
        n_models=4,
        base_auc=0.97,
        auc_step=0.02,
        conditions={c: ConditionEffect(noise_sd=0.04) for c in SIMULATED_CONDITIONS},
    )
    predictions_path = root / "predictions.csv"
    synth_cohort(spec, seed=seed + 1).to_csv(predictions_path)
    return manifest_path, conditions_root, predictions_path


def target_intensity_tile(rng, basis: StainBasis, intensity_h, intensity_e, side=448):
    """Tile whose 95th-percentile concentrations sit near the given intensities.

    Mixture concentrations are uniform on [0, target/0.95]; small pure-stain
    clusters pin the angular extremes for re-profiling.
    """
    n = side * side
    u = rng.random(n)
    c = np.zeros((n, 3))
    pure_h = u < 0.02
    pure_e = (u >= 0.02) & (u < 0.04)
    mix = u >= 0.04
    h_max, e_max = intensity_h / 0.95, intensity_e / 0.95
    c[mix, 0] = rng.uniform(0.0, h_max, mix.sum())
    c[mix, 1] = rng.uniform(0.0, e_max, mix.sum())
    c[pure_h, 0] = rng.uniform(0.6 * h_max, h_max, pure_h.sum())
    c[pure_e, 1] = rng.uniform(0.6 * e_max, e_max, pure_e.sum())
    return render_od_pixels(c, basis).reshape(side, side, 3), c.reshape(side, side, 3)
