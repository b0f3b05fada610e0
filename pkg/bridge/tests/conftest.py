import pytest

from stainkit.estimation import StainProfile
from stainkit.profiling import build_library
from stainkit.rng import substream
from stainkit.synth import random_basis, synthetic_tile


@pytest.fixture(scope="session")
def fixture_slide(tmp_path_factory):
    """One synthetic slide: 20 tiles on disk, manifest, and a library."""
    from stainkit.io import save_library, save_manifest, write_tile

    root = tmp_path_factory.mktemp("bridge_fixture")
    rng = substream(7, "bridge")
    basis = random_basis(rng)
    tiles = []
    paths = []
    for t in range(20):
        tile, _ = synthetic_tile(rng, basis, 128, 128)
        p = root / "tiles" / "slideA" / f"tile{t:02d}.png"
        write_tile(p, tile)
        tiles.append(tile)
        paths.append(p)
    manifest_path = root / "manifest.csv"
    save_manifest({"slideA": paths}, manifest_path)

    def prof(b, ih, ie, sid):
        return StainProfile(basis=b, intensity_h=ih, intensity_e=ie, source_id=sid)

    wide_rng = substream(8, "bridge-wide")
    library = build_library(
        {
            "lo": [prof(basis, 0.68, 0.63, "lo")],
            "hi": [prof(basis, 3.22, 2.02, "hi")],
            "wide": [prof(random_basis(wide_rng, (26.0, 30.0)), 1.5, 1.0, "wide")],
            "narrow": [prof(random_basis(wide_rng, (6.0, 9.0)), 1.4, 0.9, "narrow")],
        }
    )
    library_path = root / "library.json"
    save_library(library, library_path)
    return root, manifest_path, library_path, tiles, basis
