"""File formats: profile/library JSON, tile manifests, PNG tiles, predictions CSV.

JSON documents are written with sorted keys and two-space indentation so
identical inputs always produce byte-identical files. Floats use Python's
shortest round-trip repr, which preserves the exact binary value.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
from PIL import Image

from .estimation import StainProfile
from .od import StainBasis
from .profiling import ReferenceLibrary, SlideProfileSet

SCHEMA_VERSION = 1


def profile_to_doc(profile: StainProfile) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "source_id": profile.source_id,
        "log_base": "e",
        "i0": profile.i0,
        "stain_vectors": {
            "H": [float(v) for v in profile.basis.s_h],
            "E": [float(v) for v in profile.basis.s_e],
            "R": [float(v) for v in profile.basis.s_r],
        },
        "intensities": {"H": profile.intensity_h, "E": profile.intensity_e},
        "tile_count": profile.tile_count,
        "metadata": {str(k): str(v) for k, v in profile.metadata.items()},
    }


def profile_from_doc(doc: dict) -> StainProfile:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported profile schema_version {doc.get('schema_version')!r}")
    if doc.get("log_base") != "e":
        raise ValueError(f"unsupported log_base {doc.get('log_base')!r}; intensities are natural-log OD")
    vecs = doc["stain_vectors"]
    basis = StainBasis(
        np.array(vecs["H"], dtype=np.float64),
        np.array(vecs["E"], dtype=np.float64),
        np.array(vecs["R"], dtype=np.float64),
    )
    return StainProfile(
        basis=basis,
        intensity_h=float(doc["intensities"]["H"]),
        intensity_e=float(doc["intensities"]["E"]),
        source_id=str(doc.get("source_id", "")),
        tile_count=int(doc.get("tile_count", 1)),
        i0=float(doc.get("i0", 255.0)),
        metadata=dict(doc.get("metadata", {})),
    )


def _dump_json(doc: dict, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def save_profile(profile: StainProfile, path) -> None:
    _dump_json(profile_to_doc(profile), path)


def load_profile(path) -> StainProfile:
    return profile_from_doc(_load_json(path))


def save_profile_set(profiles: SlideProfileSet, path) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "profiles": {sid: profile_to_doc(p) for sid, p in profiles.profiles.items()},
        "tallies": {sid: dict(t) for sid, t in profiles.tallies.items()},
    }
    _dump_json(doc, path)


def load_profile_set(path) -> SlideProfileSet:
    doc = _load_json(path)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported profiles schema_version {doc.get('schema_version')!r}")
    return SlideProfileSet(
        profiles={sid: profile_from_doc(d) for sid, d in doc["profiles"].items()},
        tallies={sid: dict(t) for sid, t in doc.get("tallies", {}).items()},
    )


def save_library(library: ReferenceLibrary, path) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "entries": {cid: profile_to_doc(p) for cid, p in library.entries.items()},
        "selected": dict(library.selected),
    }
    _dump_json(doc, path)


def load_library(path) -> ReferenceLibrary:
    doc = _load_json(path)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported library schema_version {doc.get('schema_version')!r}")
    return ReferenceLibrary(
        entries={cid: profile_from_doc(d) for cid, d in doc["entries"].items()},
        selected=dict(doc["selected"]),
    )


def load_manifest(path) -> dict:
    """Read a tile manifest CSV (columns slide_id, tile_path).

    Returns an ordered mapping slide_id -> list of tile paths. Relative tile
    paths are resolved against the manifest's directory.
    """
    path = Path(path)
    manifest: dict[str, list[Path]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"slide_id", "tile_path"} <= set(reader.fieldnames):
            raise ValueError(f"manifest {path} must have columns slide_id, tile_path")
        for row in reader:
            tile_path = Path(row["tile_path"])
            if not tile_path.is_absolute():
                tile_path = path.parent / tile_path
            manifest.setdefault(row["slide_id"], []).append(tile_path)
    return manifest


def save_manifest(manifest: dict, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["slide_id", "tile_path"])
        for slide_id, tiles in manifest.items():
            for tile in tiles:
                writer.writerow([slide_id, str(tile)])


def read_tile(path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def write_tile(path, tile: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(tile, mode="RGB").save(path, format="PNG")
