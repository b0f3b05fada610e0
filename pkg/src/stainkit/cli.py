"""Command-line orchestration: profile | build-library | simulate | evaluate | plot-data.

Conventions:
 - progress and diagnostics go to stderr; machine-readable results go to
   files under --out only;
 - flag values override config-file values, which override defaults; the
   fully resolved configuration is written to ``<out>/resolved_config.json``;
 - exit codes: 0 success, 1 usage/config error, 2 partial or data failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import io as skio
from .errors import AchromaticColor, DegenerateCohort, SingleClass, StainKitError
from .estimation import EstimationConfig
from .evaluation import (
    PredictionTable,
    bootstrap_model,
    cohort_stats,
    model_result,
    write_condition_summary_csv,
    write_model_summary_csv,
    write_report_json,
)
from .profiling import (
    SELECTION_KEYS,
    SlideProfileSet,
    TileQualityCriteria,
    build_library,
    characterize_slide,
    he_angle,
    stain_hue,
)
from .simulation import CONDITIONS, simulate_batch


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


_PROFILE_DEFAULTS = {
    "manifest": None,
    "out": None,
    "seed": 0,
    "n_tiles": 10,
    "i0": 255.0,
    "workers": None,
    "estimation": {},
    "quality": {},
}

_BUILD_LIBRARY_DEFAULTS = {
    "profiles": None,
    "out": None,
    "selected_overrides": {},
}

_SIMULATE_DEFAULTS = {
    "manifest": None,
    "profiles": None,
    "library": None,
    "out": None,
    "conditions": list(CONDITIONS),
    "workers": None,
    "residual_scale": 0.01,
    "i0": 255.0,
    "force_reference_roundtrip": False,
}

_EVALUATE_DEFAULTS = {
    "predictions": None,
    "out": None,
    "seed": 0,
    "n_bootstrap": 1000,
}

_PLOT_DATA_DEFAULTS = {
    "profiles": None,
    "library": None,
    "predictions": None,
    "out": None,
    "seed": 0,
    "n_bootstrap": 1000,
    "render_intensity": 1.0,
    "i0": 255.0,
}


def _resolve(defaults: dict, config_path, args, flag_keys) -> dict:
    resolved = {k: (dict(v) if isinstance(v, dict) else v) for k, v in defaults.items()}
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(doc) - set(defaults))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        for key, value in doc.items():
            if isinstance(defaults[key], dict):
                if not isinstance(value, dict):
                    raise ConfigError(f"config key {key!r} must be an object")
                resolved[key].update(value)
            else:
                resolved[key] = value
    for key in flag_keys:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    return resolved


def _require(resolved: dict, keys) -> None:
    missing = [k for k in keys if not resolved.get(k)]
    if missing:
        raise ConfigError(f"missing required options: {', '.join('--' + k for k in missing)}")


def _emit_resolved(command: str, resolved: dict, out_dir: Path) -> None:
    doc = {"command": command}
    for key, value in resolved.items():
        doc[key] = str(value) if isinstance(value, Path) else value
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "resolved_config.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _section(cls, section: dict, name: str):
    try:
        return cls(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {name} config: {exc}") from exc


def _workers(value) -> int:
    return int(value) if value else (os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_profile(args) -> int:
    resolved = _resolve(
        _PROFILE_DEFAULTS, args.config, args, ["manifest", "out", "seed", "n_tiles", "i0", "workers"]
    )
    _require(resolved, ["manifest", "out"])
    out_dir = Path(resolved["out"])
    _emit_resolved("profile", resolved, out_dir)
    est_cfg = _section(EstimationConfig, resolved["estimation"], "estimation")
    quality = _section(TileQualityCriteria, resolved["quality"], "quality")

    try:
        manifest = skio.load_manifest(resolved["manifest"])
    except (OSError, ValueError) as exc:
        _log(f"profile: cannot read manifest: {exc}")
        return 2

    failures = []
    profiles = {}
    tallies = {}
    if not manifest:
        failures.append({"slide_id": "", "reason": "no slides in manifest"})
        _log("profile: no slides in manifest")

    def profile_slide(slide_id):
        try:
            profile = characterize_slide(
                manifest[slide_id],
                quality,
                est_cfg,
                n_tiles=int(resolved["n_tiles"]),
                seed=int(resolved["seed"]),
                i0=float(resolved["i0"]),
                slide_id=slide_id,
                loader=skio.read_tile,
            )
            return slide_id, profile, None
        except (StainKitError, OSError, ValueError) as exc:
            return slide_id, None, f"{type(exc).__name__}: {exc}"

    slide_ids = sorted(manifest)
    n_workers = min(_workers(resolved["workers"]), max(1, len(slide_ids)))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            outcomes = list(pool.map(profile_slide, slide_ids))
    else:
        outcomes = [profile_slide(s) for s in slide_ids]

    for slide_id, profile, reason in outcomes:
        if profile is None:
            failures.append({"slide_id": slide_id, "reason": reason})
            _log(f"profile: {slide_id}: {reason}")
            continue
        profiles[slide_id] = profile
        tallies[slide_id] = {
            "screened": int(profile.metadata.get("screened", 0)),
            "passed": int(resolved["n_tiles"]),
            "failed": int(profile.metadata.get("failed", 0)),
        }

    skio.save_profile_set(SlideProfileSet(profiles=profiles, tallies=tallies), out_dir / "profiles.json")
    report = {"slides_profiled": len(profiles), "failures": failures}
    with open(out_dir / "run_report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _log(f"profile: {len(profiles)} slide(s) profiled, {len(failures)} failure(s)")
    return 2 if failures else 0


def cmd_build_library(args) -> int:
    resolved = _resolve(_BUILD_LIBRARY_DEFAULTS, args.config, args, ["profiles", "out"])
    _require(resolved, ["profiles", "out"])
    out_dir = Path(resolved["out"])
    _emit_resolved("build-library", resolved, out_dir)

    root = Path(resolved["profiles"])
    if not root.is_dir():
        _log(f"build-library: {root} is not a directory")
        return 2
    condition_profiles = {}
    for cond_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        docs = sorted(cond_dir.glob("*.json"))
        if not docs:
            _log(f"build-library: condition {cond_dir.name!r} has no profile files")
            return 2
        try:
            condition_profiles[cond_dir.name] = [skio.load_profile(p) for p in docs]
        except (OSError, ValueError, KeyError, StainKitError) as exc:
            _log(f"build-library: cannot load {cond_dir.name!r}: {exc}")
            return 2

    try:
        library = build_library(condition_profiles, overrides=resolved["selected_overrides"] or None)
    except (StainKitError, ValueError) as exc:
        _log(f"build-library: {exc}")
        return 2

    chosen = [library.selected[k] for k in SELECTION_KEYS]
    if len(set(chosen)) < len(chosen):
        _log("build-library: warning: selections overlap (degenerate library)")
    skio.save_library(library, out_dir / "library.json")
    _log(f"build-library: {len(condition_profiles)} condition(s), selections {library.selected}")
    return 0


def cmd_simulate(args) -> int:
    resolved = _resolve(
        _SIMULATE_DEFAULTS,
        args.config,
        args,
        ["manifest", "profiles", "library", "out", "conditions", "workers", "residual_scale", "i0"],
    )
    _require(resolved, ["manifest", "profiles", "library", "out"])
    out_dir = Path(resolved["out"])
    _emit_resolved("simulate", resolved, out_dir)

    conditions = resolved["conditions"]
    if isinstance(conditions, str):
        conditions = [c.strip() for c in conditions.split(",") if c.strip()]
    unknown = [c for c in conditions if c not in CONDITIONS]
    if unknown:
        raise ConfigError(f"unknown conditions: {unknown}")

    try:
        manifest = skio.load_manifest(resolved["manifest"])
        profiles = skio.load_profile_set(resolved["profiles"])
        library = skio.load_library(resolved["library"])
    except (OSError, ValueError, KeyError, StainKitError) as exc:
        _log(f"simulate: cannot load inputs: {exc}")
        return 2

    report = simulate_batch(
        manifest,
        profiles,
        library,
        out_dir,
        i0=float(resolved["i0"]),
        residual_scale=float(resolved["residual_scale"]),
        conditions=conditions,
        workers=_workers(resolved["workers"]),
        force_reference_roundtrip=bool(resolved["force_reference_roundtrip"]),
    )
    with open(out_dir / "run_report.json", "w", encoding="utf-8") as fh:
        json.dump(report.to_doc(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    for failure in report.failures:
        _log(f"simulate: {failure['slide_id']}: {failure['reason']}")
    _log(f"simulate: wrote {report.tiles_written} tile(s) in {report.elapsed_s:.2f}s")
    return 2 if report.failures else 0


def cmd_evaluate(args) -> int:
    resolved = _resolve(
        _EVALUATE_DEFAULTS, args.config, args, ["predictions", "out", "seed", "n_bootstrap"]
    )
    _require(resolved, ["predictions", "out"])
    out_dir = Path(resolved["out"])
    _emit_resolved("evaluate", resolved, out_dir)

    try:
        table = PredictionTable.from_csv(resolved["predictions"])
    except (OSError, ValueError) as exc:
        _log(f"evaluate: cannot load predictions: {exc}")
        return 2

    seed = int(resolved["seed"])
    n_boot = int(resolved["n_bootstrap"])
    results = []
    bootstraps = {}
    failures = []
    for model_id in table.models:
        try:
            preds = table.model(model_id)
            results.append(model_result(preds))
        except (StainKitError, ValueError) as exc:
            failures.append({"model_id": model_id, "reason": f"{type(exc).__name__}: {exc}"})
            _log(f"evaluate: {model_id}: {exc}")
            continue
        try:
            bootstraps[model_id] = bootstrap_model(preds, n_iter=n_boot, seed=seed)
        except (DegenerateCohort, SingleClass) as exc:
            _log(f"evaluate: {model_id}: bootstrap skipped: {exc}")

    if not results:
        _log("evaluate: no model could be evaluated")
        return 2

    report = cohort_stats(
        results, boot_seed=seed, n_boot=n_boot, bootstraps=bootstraps or None
    )
    write_report_json(report, out_dir / "report.json")
    write_condition_summary_csv(report, out_dir / "condition_summary.csv")
    write_model_summary_csv(report, out_dir / "model_summary.csv")
    if failures:
        with open(out_dir / "failures.json", "w", encoding="utf-8") as fh:
            json.dump(failures, fh, indent=2, sort_keys=True)
            fh.write("\n")
    _log(f"evaluate: {len(results)} model(s), {len(failures)} failure(s)")
    return 2 if failures else 0


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def cmd_plot_data(args) -> int:
    resolved = _resolve(
        _PLOT_DATA_DEFAULTS,
        args.config,
        args,
        ["profiles", "library", "predictions", "out", "seed", "n_bootstrap"],
    )
    _require(resolved, ["out"])
    if not (resolved["profiles"] or resolved["library"] or resolved["predictions"]):
        raise ConfigError("plot-data needs at least one of --profiles, --library, --predictions")
    out_dir = Path(resolved["out"])
    _emit_resolved("plot-data", resolved, out_dir)

    collections = []
    try:
        if resolved["profiles"]:
            pset = skio.load_profile_set(resolved["profiles"])
            collections.append(("profiles", [pset.profiles[s] for s in sorted(pset.profiles)]))
        if resolved["library"]:
            library = skio.load_library(resolved["library"])
            collections.append(("library", [library.entries[c] for c in sorted(library.entries)]))
    except (OSError, ValueError, KeyError, StainKitError) as exc:
        _log(f"plot-data: cannot load stain inputs: {exc}")
        return 2

    if collections:
        intensity_rows = []
        angle_rows = []
        hue_rows = []
        render = float(resolved["render_intensity"])
        i0 = float(resolved["i0"])
        for name, profiles in collections:
            for p in profiles:
                intensity_rows.append(
                    (name, p.source_id, repr(p.intensity_h), repr(p.intensity_e))
                )
                angle_rows.append((name, p.source_id, repr(he_angle(p))))
                for stain, vec in (("H", p.basis.s_h), ("E", p.basis.s_e)):
                    try:
                        hue_rows.append((name, p.source_id, stain, repr(stain_hue(vec, render, i0))))
                    except AchromaticColor:
                        _log(f"plot-data: {p.source_id} {stain}: achromatic at render intensity {render}")
        _write_csv(out_dir / "intensities.csv",
                   ["collection", "source_id", "intensity_h", "intensity_e"], intensity_rows)
        _write_csv(out_dir / "angles.csv",
                   ["collection", "source_id", "he_angle_deg"], angle_rows)
        _write_csv(out_dir / "hues.csv",
                   ["collection", "source_id", "stain", "hue_deg"], hue_rows)

    if resolved["predictions"]:
        try:
            table = PredictionTable.from_csv(resolved["predictions"])
        except (OSError, ValueError) as exc:
            _log(f"plot-data: cannot load predictions: {exc}")
            return 2
        point_rows = []
        ellipse_rows = []
        for model_id in table.models:
            try:
                preds = table.model(model_id)
                res = model_result(preds)
            except (StainKitError, ValueError) as exc:
                _log(f"plot-data: {model_id}: {exc}")
                continue
            point_rows.append((model_id, repr(res.reference_auc), repr(res.robustness)))
            try:
                boot = bootstrap_model(
                    preds, n_iter=int(resolved["n_bootstrap"]), seed=int(resolved["seed"])
                )
                report = cohort_stats([res], boot_seed=int(resolved["seed"]),
                                      n_boot=int(resolved["n_bootstrap"]),
                                      bootstraps={model_id: boot})
                summary = report.bootstrap[model_id]
                if summary.ellipse is not None:
                    ellipse_rows.append(
                        (
                            model_id,
                            repr(summary.mean_point[0]),
                            repr(summary.mean_point[1]),
                            repr(summary.ellipse.semi_axes[0]),
                            repr(summary.ellipse.semi_axes[1]),
                            repr(summary.ellipse.rotation_deg),
                        )
                    )
            except (DegenerateCohort, SingleClass) as exc:
                _log(f"plot-data: {model_id}: bootstrap skipped: {exc}")
        _write_csv(out_dir / "performance_robustness.csv",
                   ["model_id", "reference_auc", "robustness"], point_rows)
        _write_csv(
            out_dir / "ellipses.csv",
            ["model_id", "center_perf", "center_robust", "semi_major", "semi_minor", "rotation_deg"],
            ellipse_rows,
        )
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--out", help="output directory")


def build_parser() -> _Parser:
    parser = _Parser(prog="stainkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("profile", help="characterize slide staining from a tile manifest")
    _add_common(p)
    p.add_argument("--manifest", help="tile manifest CSV (slide_id, tile_path)")
    p.add_argument("--seed", type=int, help="tile sampling seed")
    p.add_argument("--n-tiles", dest="n_tiles", type=int, help="passing tiles per slide")
    p.add_argument("--i0", type=float, help="illumination constant")
    p.add_argument("--workers", type=int, help="parallel slide workers")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("build-library", help="aggregate per-condition profiles into a reference library")
    _add_common(p)
    p.add_argument("--profiles", help="root directory with one subdirectory of profile JSONs per condition")
    p.set_defaults(func=cmd_build_library)

    p = sub.add_parser("simulate", help="transform manifest tiles under the planned staining conditions")
    _add_common(p)
    p.add_argument("--manifest", help="tile manifest CSV")
    p.add_argument("--profiles", help="slide profiles JSON from 'profile'")
    p.add_argument("--library", help="reference library JSON from 'build-library'")
    p.add_argument("--conditions", help="comma-separated subset of conditions")
    p.add_argument("--workers", type=int, help="parallel tile workers")
    p.add_argument("--residual-scale", dest="residual_scale", type=float,
                   help="residual attenuation factor")
    p.add_argument("--i0", type=float, help="illumination constant")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="compute robustness statistics from a predictions CSV")
    _add_common(p)
    p.add_argument("--predictions", help="predictions CSV (model_id,slide_id,label,condition,score)")
    p.add_argument("--seed", type=int, help="bootstrap seed")
    p.add_argument("--n-bootstrap", dest="n_bootstrap", type=int, help="bootstrap iterations")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("plot-data", help="emit plot-ready CSVs for stain and robustness figures")
    _add_common(p)
    p.add_argument("--profiles", help="slide profiles JSON")
    p.add_argument("--library", help="reference library JSON")
    p.add_argument("--predictions", help="predictions CSV")
    p.add_argument("--seed", type=int, help="bootstrap seed")
    p.add_argument("--n-bootstrap", dest="n_bootstrap", type=int, help="bootstrap iterations")
    p.set_defaults(func=cmd_plot_data)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        _log(f"{args.command}: config error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
