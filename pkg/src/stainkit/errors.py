"""Error taxonomy shared across the toolkit.

Every failure mode that callers are expected to branch on gets its own
class; generic misuse (wrong dtype, bad shapes) raises plain
``TypeError``/``ValueError``.
"""


class StainKitError(Exception):
    """Base class for all toolkit-specific errors."""


class DegenerateBasis(StainKitError):
    """Stain basis matrix is (numerically) singular or violates invariants."""


class InsufficientTissue(StainKitError):
    """Too few pixels survive OD filtering to estimate stain vectors."""


class DegeneratePlane(StainKitError):
    """OD point cloud has no usable two-dimensional stain plane."""


class EmptyInput(StainKitError):
    """An operation that needs at least one element received none."""


class AchromaticColor(StainKitError):
    """Hue is undefined: the rendered color sits on the gray axis."""


class TooFewConditions(StainKitError):
    """Reference library construction needs at least two conditions."""


class InsufficientPassingTiles(StainKitError):
    """Tile sampler exhausted before enough tiles passed quality screening."""


class ZeroSourceIntensity(StainKitError):
    """Source profile has a (near-)zero stain intensity; scale is undefined."""


class MissingProfile(StainKitError):
    """A slide in the manifest has no stain profile."""


class SingleClass(StainKitError):
    """AUC is undefined: labels contain only one class."""


class IncompleteConditions(StainKitError):
    """A model's predictions do not cover all five staining conditions."""


class DegenerateCohort(StainKitError):
    """Bootstrap resampling could not produce two-class resamples."""


class DegenerateVariance(StainKitError):
    """Correlation is undefined: one of the inputs has zero variance."""


class TooFewPoints(StainKitError):
    """Not enough data points for the requested statistic."""


class DegenerateCovariance(StainKitError):
    """Covariance ellipse is undefined: points are collinear or identical."""


class InvalidSpec(StainKitError):
    """Synthetic cohort generator configuration is inconsistent."""
