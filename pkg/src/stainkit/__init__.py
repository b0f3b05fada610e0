"""stainkit: H&E stain profiling, staining-condition simulation, and
robustness evaluation for computational-pathology pipelines.

The toolkit covers three protocol steps plus evaluation: build a stain
reference library from tile collections, characterize a test set's staining
per slide, deterministically re-render tiles under selected reference
staining conditions, and compute robustness/performance statistics from
per-condition model predictions.
"""

from . import io
from ._kernels import active_backend
from .errors import (
    AchromaticColor,
    DegenerateBasis,
    DegenerateCohort,
    DegenerateCovariance,
    DegeneratePlane,
    DegenerateVariance,
    EmptyInput,
    IncompleteConditions,
    InsufficientPassingTiles,
    InsufficientTissue,
    InvalidSpec,
    MissingProfile,
    SingleClass,
    StainKitError,
    TooFewConditions,
    TooFewPoints,
    ZeroSourceIntensity,
)
from .estimation import EstimationConfig, StainProfile, estimate_basis, estimate_profile, percentile
from .evaluation import (
    BootstrapResult,
    CohortReport,
    CohortSpec,
    ConditionEffect,
    CorrelationResult,
    EllipseSummary,
    ModelResult,
    PredictionTable,
    auc,
    bootstrap_model,
    cohort_stats,
    correlate,
    ellipse_summary,
    model_result,
    synth_cohort,
)
from .od import ConcentrationMaps, StainBasis, decompose, od_to_rgb, recompose, rgb_to_od
from .profiling import (
    ReferenceLibrary,
    SlideProfileSet,
    TileQualityCriteria,
    aggregate_profiles,
    build_library,
    characterize_slide,
    he_angle,
    screen_tile,
    stain_angle,
    stain_hue,
)
from .simulation import (
    CONDITIONS,
    SIMULATED_CONDITIONS,
    SimulationCondition,
    plan_conditions,
    simulate_batch,
    simulate_tile,
    simulate_tiles,
)

__version__ = "0.1.0"

__all__ = [
    "AchromaticColor",
    "BootstrapResult",
    "CohortReport",
    "CohortSpec",
    "ConcentrationMaps",
    "ConditionEffect",
    "CONDITIONS",
    "CorrelationResult",
    "DegenerateBasis",
    "DegenerateCohort",
    "DegenerateCovariance",
    "DegeneratePlane",
    "DegenerateVariance",
    "EllipseSummary",
    "EmptyInput",
    "EstimationConfig",
    "IncompleteConditions",
    "InsufficientPassingTiles",
    "InsufficientTissue",
    "InvalidSpec",
    "MissingProfile",
    "ModelResult",
    "PredictionTable",
    "ReferenceLibrary",
    "SIMULATED_CONDITIONS",
    "SimulationCondition",
    "SingleClass",
    "SlideProfileSet",
    "StainBasis",
    "StainKitError",
    "StainProfile",
    "TileQualityCriteria",
    "TooFewConditions",
    "TooFewPoints",
    "ZeroSourceIntensity",
    "active_backend",
    "aggregate_profiles",
    "auc",
    "bootstrap_model",
    "build_library",
    "characterize_slide",
    "cohort_stats",
    "correlate",
    "decompose",
    "ellipse_summary",
    "estimate_basis",
    "estimate_profile",
    "he_angle",
    "model_result",
    "od_to_rgb",
    "percentile",
    "plan_conditions",
    "recompose",
    "rgb_to_od",
    "screen_tile",
    "simulate_batch",
    "simulate_tile",
    "simulate_tiles",
    "stain_angle",
    "stain_hue",
    "synth_cohort",
]
