"""Robustness and performance statistics over per-condition predictions.

Performance is the AUC on the reference condition; robustness is the
min-max range of AUCs across the five staining conditions (smaller is more
robust). AUC uses the Mann-Whitney pairwise formulation with 0.5 credit
for ties, computed via midranks (exactly equal to the pairwise count).

All resampling is seeded and order-independent: iteration i draws from the
substream (seed, "bootstrap", i), so reruns are bit-identical.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateCohort,
    DegenerateCovariance,
    DegenerateVariance,
    IncompleteConditions,
    InvalidSpec,
    SingleClass,
    TooFewPoints,
)
from .rng import substream
from .simulation import CONDITIONS, SIMULATED_CONDITIONS

#: sqrt of the chi-square(2 dof) 0.95 quantile scales covariance ellipses.
CHI2_2DOF_95 = 5.991

HIGH_PERFORMANCE_AUC = 0.90
ROBUSTNESS_LIMIT = 0.03


# ---------------------------------------------------------------------------
# prediction tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelPredictions:
    """One model's labels and per-condition scores in canonical slide order."""

    model_id: str
    slides: tuple
    labels: np.ndarray  # (n,) int8
    scores: dict  # condition_id -> (n,) float64


class PredictionTable:
    """Rows of (model_id, slide_id, label, condition, score)."""

    def __init__(self, rows):
        data: dict[str, dict[str, dict[str, float]]] = {}
        labels: dict[str, dict[str, int]] = {}
        for model_id, slide_id, label, condition, score in rows:
            model_id, slide_id, condition = str(model_id), str(slide_id), str(condition)
            if condition not in CONDITIONS:
                raise ValueError(f"unknown condition {condition!r}")
            label = int(label)
            if label not in (0, 1):
                raise ValueError(f"label must be 0 or 1, got {label}")
            score = float(score)
            if not math.isfinite(score):
                raise ValueError(f"non-finite score for ({model_id}, {slide_id}, {condition})")
            cond_map = data.setdefault(model_id, {}).setdefault(condition, {})
            if slide_id in cond_map:
                raise ValueError(f"duplicate row ({model_id}, {slide_id}, {condition})")
            cond_map[slide_id] = score
            prev = labels.setdefault(model_id, {}).setdefault(slide_id, label)
            if prev != label:
                raise ValueError(f"inconsistent label for ({model_id}, {slide_id})")
        self._data = data
        self._labels = labels

    @property
    def models(self) -> tuple:
        return tuple(sorted(self._data))

    def model(self, model_id: str) -> ModelPredictions:
        """Extract one model's slice; conditions must cover identical slides."""
        conds = self._data[model_id]
        slide_sets = {c: frozenset(m) for c, m in conds.items()}
        universe = frozenset().union(*slide_sets.values())
        bad = [c for c, s in slide_sets.items() if s != universe]
        if bad:
            raise ValueError(f"model {model_id!r}: conditions {bad} do not cover the full slide set")
        slides = tuple(sorted(universe))
        labels = np.array([self._labels[model_id][s] for s in slides], dtype=np.int8)
        scores = {
            c: np.array([conds[c][s] for s in slides], dtype=np.float64) for c in conds
        }
        return ModelPredictions(model_id, slides, labels, scores)

    def to_rows(self):
        for model_id in self.models:
            for condition in CONDITIONS:
                if condition not in self._data[model_id]:
                    continue
                for slide_id in sorted(self._data[model_id][condition]):
                    yield (
                        model_id,
                        slide_id,
                        self._labels[model_id][slide_id],
                        condition,
                        self._data[model_id][condition][slide_id],
                    )

    @classmethod
    def from_csv(cls, path) -> "PredictionTable":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            required = {"model_id", "slide_id", "label", "condition", "score"}
            if reader.fieldnames is None or not required <= set(reader.fieldnames):
                raise ValueError(f"predictions CSV must have columns {sorted(required)}")
            rows = [
                (r["model_id"], r["slide_id"], r["label"], r["condition"], r["score"])
                for r in reader
            ]
        return cls(rows)

    def to_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["model_id", "slide_id", "label", "condition", "score"])
            for row in self.to_rows():
                writer.writerow([row[0], row[1], row[2], row[3], repr(row[4])])


# ---------------------------------------------------------------------------
# core statistics
# ---------------------------------------------------------------------------

def auc(labels, scores) -> float:
    """Mann-Whitney AUC with 0.5 credit for tied (positive, negative) pairs."""
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.ndim != 1 or labels.shape != scores.shape:
        raise ValueError("labels and scores must be equal-length 1-d arrays")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass(f"need both classes, got {n_pos} positives of {labels.size}")
    _, inverse, counts = np.unique(scores, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    midranks = ends - counts + (counts + 1) / 2.0  # 1-based, exact half-integers
    u = float(midranks[inverse][pos].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


@dataclass(frozen=True)
class ModelResult:
    model_id: str
    auc_by_condition: dict
    reference_auc: float
    robustness: float
    delta_auc: dict
    best_condition: str


def model_result(preds: ModelPredictions) -> ModelResult:
    """Per-condition AUCs plus robustness, deltas, and the best condition.

    Ties at the maximum resolve to the earliest condition in canonical order
    (reference first).
    """
    missing = [c for c in CONDITIONS if c not in preds.scores]
    if missing:
        raise IncompleteConditions(f"model {preds.model_id!r} missing conditions {missing}")
    aucs = {c: auc(preds.labels, preds.scores[c]) for c in CONDITIONS}
    values = [aucs[c] for c in CONDITIONS]
    reference_auc = aucs["reference"]
    best = max(values)
    return ModelResult(
        model_id=preds.model_id,
        auc_by_condition=aucs,
        reference_auc=reference_auc,
        robustness=max(values) - min(values),
        delta_auc={c: aucs[c] - reference_auc for c in SIMULATED_CONDITIONS},
        best_condition=next(c for c in CONDITIONS if aucs[c] == best),
    )


@dataclass(frozen=True)
class BootstrapResult:
    model_id: str
    reference_auc: np.ndarray
    robustness: np.ndarray
    reference_auc_ci: tuple
    robustness_ci: tuple
    n_iter: int
    seed: int
    redraws: int


def bootstrap_model(
    preds: ModelPredictions,
    n_iter: int = 1000,
    seed: int = 0,
    *,
    max_redraws_per_iter: int = 10,
) -> BootstrapResult:
    """Slide-level bootstrap of (reference AUC, robustness) pairs.

    Each iteration resamples slides with replacement and applies the same
    resample to all five conditions. Single-class resamples are redrawn
    (counted; more than ``max_redraws_per_iter`` in one iteration raises
    DegenerateCohort). CIs are the 2.5/97.5 percentiles.
    """
    missing = [c for c in CONDITIONS if c not in preds.scores]
    if missing:
        raise IncompleteConditions(f"model {preds.model_id!r} missing conditions {missing}")
    n = len(preds.slides)
    if n < 10:
        raise DegenerateCohort(f"cohort of {n} slides is too small to bootstrap")
    n_pos = int((preds.labels == 1).sum())
    if n_pos == 0 or n_pos == n:
        raise SingleClass("cohort labels contain a single class")

    score_mat = np.stack([preds.scores[c] for c in CONDITIONS])
    ref_idx = CONDITIONS.index("reference")
    ref_out = np.empty(n_iter)
    rob_out = np.empty(n_iter)
    redraws = 0
    for i in range(n_iter):
        rng = substream(seed, "bootstrap", i)
        for _ in range(max_redraws_per_iter + 1):
            idx = rng.integers(0, n, n)
            labels = preds.labels[idx]
            pos = int((labels == 1).sum())
            if 0 < pos < n:
                break
            redraws += 1
        else:
            raise DegenerateCohort(
                f"iteration {i} exceeded {max_redraws_per_iter} single-class redraws"
            )
        aucs = [auc(labels, score_mat[c, idx]) for c in range(len(CONDITIONS))]
        ref_out[i] = aucs[ref_idx]
        rob_out[i] = max(aucs) - min(aucs)

    def ci(arr):
        return (float(np.percentile(arr, 2.5)), float(np.percentile(arr, 97.5)))

    return BootstrapResult(
        model_id=preds.model_id,
        reference_auc=ref_out,
        robustness=rob_out,
        reference_auc_ci=ci(ref_out),
        robustness_ci=ci(rob_out),
        n_iter=n_iter,
        seed=seed,
        redraws=redraws,
    )


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    ci: tuple | None
    n: int
    degenerate: bool = False


def correlate(x, y, min_n_ci: int = 4) -> CorrelationResult:
    """Sample Pearson r with a Fisher-z 95% CI (z +/- 1.96/sqrt(n-3)).

    Below ``min_n_ci`` points the CI is suppressed and r alone is reported.
    |r| = 1 collapses the CI to [r, r] and sets the degeneracy flag.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError("x and y must have equal length")
    n = x.size
    if n < 2:
        raise TooFewPoints(f"correlation needs at least 2 points, got {n}")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise DegenerateVariance("correlation undefined for a constant input")
    xc = x - x.mean()
    yc = y - y.mean()
    r = float(xc @ yc / math.sqrt(float(xc @ xc) * float(yc @ yc)))
    r = max(-1.0, min(1.0, r))
    if n < max(4, min_n_ci):
        return CorrelationResult(r=r, ci=None, n=n)
    if abs(r) >= 1.0 - 1e-12:
        return CorrelationResult(r=r, ci=(r, r), n=n, degenerate=True)
    z = math.atanh(r)
    half = 1.96 / math.sqrt(n - 3)
    return CorrelationResult(r=r, ci=(math.tanh(z - half), math.tanh(z + half)), n=n)


@dataclass(frozen=True)
class EllipseSummary:
    center: tuple
    semi_axes: tuple  # (major, minor)
    rotation_deg: float  # major-axis angle in [0, 180)


def ellipse_summary(points) -> EllipseSummary:
    """95% covariance ellipse of 2-d points (semi-axes scaled by sqrt(5.991))."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"points must be (n, 2), got {pts.shape}")
    if pts.shape[0] < 3:
        raise TooFewPoints(f"ellipse needs at least 3 points, got {pts.shape[0]}")
    cov = np.cov(pts.T, ddof=1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    if not np.all(np.isfinite(eigvals)) or eigvals[1] <= 0.0 or eigvals[0] <= 1e-12 * eigvals[1]:
        raise DegenerateCovariance("points are collinear or identical")
    major = math.sqrt(eigvals[1] * CHI2_2DOF_95)
    minor = math.sqrt(eigvals[0] * CHI2_2DOF_95)
    v = eigvecs[:, 1]
    rotation = math.degrees(math.atan2(v[1], v[0])) % 180.0
    return EllipseSummary(
        center=(float(pts[:, 0].mean()), float(pts[:, 1].mean())),
        semi_axes=(major, minor),
        rotation_deg=rotation,
    )


# ---------------------------------------------------------------------------
# cohort-level report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionSummary:
    best_model_count: int
    median_delta_auc: float | None
    delta_ci: tuple | None
    worst_case_decrease: float | None


@dataclass(frozen=True)
class ModelFlags:
    high_performing: bool
    highly_robust: bool


@dataclass(frozen=True)
class BootstrapSummary:
    mean_point: tuple  # (performance, robustness)
    reference_auc_ci: tuple
    robustness_ci: tuple
    ellipse: EllipseSummary | None
    redraws: int


@dataclass(frozen=True)
class CohortReport:
    models: tuple
    conditions: dict  # condition_id -> ConditionSummary
    flags: dict  # model_id -> ModelFlags
    performance_robustness: CorrelationResult | None
    bootstrap: dict | None  # model_id -> BootstrapSummary
    n_boot: int
    boot_seed: int
    notes: tuple = ()


def cohort_stats(
    results,
    boot_seed: int = 0,
    *,
    n_boot: int = 1000,
    bootstraps=None,
    high_performance_auc: float = HIGH_PERFORMANCE_AUC,
    robustness_limit: float = ROBUSTNESS_LIMIT,
) -> CohortReport:
    """Summarize per-model results into the cohort report.

    Best-condition counts multi-count ties; median-delta CIs are percentile
    bootstraps over models (``n_boot`` resamples from substreams of
    ``boot_seed``); worst-case decrease is the minimum delta. Models are
    flagged high-performing above ``high_performance_auc`` reference AUC and
    highly robust below ``robustness_limit`` min-max range.
    """
    results = sorted(results, key=lambda r: r.model_id)
    if not results:
        raise ValueError("cohort_stats needs at least one ModelResult")
    notes = []

    best_counts = {c: 0 for c in CONDITIONS}
    for res in results:
        top = max(res.auc_by_condition.values())
        for c in CONDITIONS:
            if res.auc_by_condition[c] == top:
                best_counts[c] += 1

    conditions = {
        "reference": ConditionSummary(best_counts["reference"], None, None, None)
    }
    n_models = len(results)
    for ci_idx, cond in enumerate(SIMULATED_CONDITIONS):
        deltas = np.array([r.delta_auc[cond] for r in results])
        rng = substream(boot_seed, "delta-ci", ci_idx)
        idx = rng.integers(0, n_models, (n_boot, n_models))
        medians = np.median(deltas[idx], axis=1)
        conditions[cond] = ConditionSummary(
            best_model_count=best_counts[cond],
            median_delta_auc=float(np.median(deltas)),
            delta_ci=(float(np.percentile(medians, 2.5)), float(np.percentile(medians, 97.5))),
            worst_case_decrease=float(deltas.min()),
        )

    flags = {
        r.model_id: ModelFlags(
            high_performing=r.reference_auc > high_performance_auc,
            highly_robust=r.robustness < robustness_limit,
        )
        for r in results
    }

    try:
        perf_rob = correlate(
            [r.reference_auc for r in results], [r.robustness for r in results]
        )
    except (TooFewPoints, DegenerateVariance) as exc:
        perf_rob = None
        notes.append(f"performance-robustness correlation unavailable: {exc}")

    summaries = None
    if bootstraps is not None:
        summaries = {}
        for model_id in sorted(bootstraps):
            boot = bootstraps[model_id]
            points = np.column_stack([boot.reference_auc, boot.robustness])
            try:
                ellipse = ellipse_summary(points)
            except (DegenerateCovariance, TooFewPoints) as exc:
                ellipse = None
                notes.append(f"bootstrap ellipse unavailable for {model_id}: {exc}")
            summaries[model_id] = BootstrapSummary(
                mean_point=(float(boot.reference_auc.mean()), float(boot.robustness.mean())),
                reference_auc_ci=boot.reference_auc_ci,
                robustness_ci=boot.robustness_ci,
                ellipse=ellipse,
                redraws=boot.redraws,
            )

    return CohortReport(
        models=tuple(results),
        conditions=conditions,
        flags=flags,
        performance_robustness=perf_rob,
        bootstrap=summaries,
        n_boot=n_boot,
        boot_seed=boot_seed,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# synthetic cohorts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionEffect:
    """Per-condition score perturbation for the synthetic generator.

    ``margin_swaps`` flips exactly that many isolated (positive, negative)
    adjacent pairs, lowering the condition's AUC by swaps/(n_pos*n_neg)
    exactly. ``pos_shift`` adds to positive-class scores; ``noise_sd`` adds
    seeded Gaussian noise to every score.
    """

    noise_sd: float = 0.0
    pos_shift: float = 0.0
    margin_swaps: int = 0


@dataclass(frozen=True)
class CohortSpec:
    """Configuration for :func:`synth_cohort`.

    In the default mode, per-model base scores are a tie-free ladder with
    exactly round((1 - auc) * n_pos * n_neg) discordant pairs, where auc =
    base_auc - model_index * auc_step. When any condition requests margin
    swaps, the base is a staircase layout that isolates the swap pairs
    (base_auc must be 1.0 in that mode).
    """

    n_slides: int
    n_pos: int
    n_models: int = 1
    base_auc: float = 0.9
    auc_step: float = 0.0
    conditions: dict = field(default_factory=dict)  # condition_id -> ConditionEffect
    model_prefix: str = "model"


def _validate_spec(spec: CohortSpec) -> int:
    if spec.n_slides < 2 or not 0 < spec.n_pos < spec.n_slides:
        raise InvalidSpec(f"need 0 < n_pos < n_slides, got {spec.n_pos}/{spec.n_slides}")
    if spec.n_models < 1:
        raise InvalidSpec("n_models must be positive")
    if not 0.0 <= spec.base_auc <= 1.0:
        raise InvalidSpec(f"base_auc must be in [0, 1], got {spec.base_auc}")
    if spec.auc_step < 0.0:
        raise InvalidSpec("auc_step must be nonnegative")
    k_max = 0
    for cond, eff in spec.conditions.items():
        if cond not in SIMULATED_CONDITIONS:
            raise InvalidSpec(f"effects only apply to simulated conditions, got {cond!r}")
        if eff.noise_sd < 0.0:
            raise InvalidSpec("noise_sd must be nonnegative")
        if eff.margin_swaps < 0:
            raise InvalidSpec("margin_swaps must be nonnegative")
        k_max = max(k_max, eff.margin_swaps)
    n_neg = spec.n_slides - spec.n_pos
    if k_max > min(spec.n_pos, n_neg):
        raise InvalidSpec(f"margin_swaps {k_max} exceeds min(n_pos, n_neg)")
    if k_max > 0 and (spec.base_auc != 1.0 or spec.auc_step != 0.0):
        raise InvalidSpec("margin-swap mode requires base_auc=1.0 and auc_step=0")
    return k_max


def _staircase_scores(n_pos: int, n_neg: int, k: int) -> np.ndarray:
    """Scores with k isolated adjacent (neg, pos) pairs at the class boundary.

    Slide index convention: positives are 0..n_pos-1, negatives follow.
    Pair j holds positive j at score 4j+1 directly above negative j at 4j,
    with gaps so a swap flips only that pair's ordering.
    """
    scores = np.empty(n_pos + n_neg)
    for j in range(k):
        scores[j] = 4.0 * j + 1.0
        scores[n_pos + j] = 4.0 * j
    for i in range(k, n_pos):
        scores[i] = 4.0 * k + 10.0 + (i - k)
    for i in range(k, n_neg):
        scores[n_pos + i] = -10.0 - (i - k)
    return scores


def _ladder_scores(n_pos: int, n_neg: int, target_auc: float) -> np.ndarray:
    """Tie-free scores with exactly round((1-auc)*P*N) discordant pairs."""
    inversions = int(round((1.0 - target_auc) * n_pos * n_neg))
    order = [("n", i) for i in range(n_neg)] + [("p", j) for j in range(n_pos)]
    remaining = inversions
    for j in range(n_pos):
        d = min(n_neg, remaining)
        remaining -= d
        if d == 0:
            break
        pos_idx = order.index(("p", j))
        i = pos_idx
        crossed = 0
        while crossed < d:
            i -= 1
            if order[i][0] == "n":
                crossed += 1
        order.pop(pos_idx)
        order.insert(i, ("p", j))
    n = n_pos + n_neg
    scores = np.empty(n)
    for rank, (kind, idx) in enumerate(order):
        slide = idx if kind == "p" else n_pos + idx
        scores[slide] = (rank + 1.0) / (n + 1.0)
    return scores


def synth_cohort(spec: CohortSpec, seed: int = 0) -> PredictionTable:
    """Deterministic synthetic prediction table with known AUC structure."""
    k_max = _validate_spec(spec)
    n = spec.n_slides
    n_pos = spec.n_pos
    n_neg = n - n_pos
    slide_ids = [f"s{idx:04d}" for idx in range(n)]
    labels = [1 if idx < n_pos else 0 for idx in range(n)]

    rows = []
    for m in range(spec.n_models):
        model_id = f"{spec.model_prefix}{m:03d}"
        if k_max > 0:
            base = _staircase_scores(n_pos, n_neg, k_max)
        else:
            target = min(1.0, max(0.0, spec.base_auc - spec.auc_step * m))
            base = _ladder_scores(n_pos, n_neg, target)
        for ci_idx, cond in enumerate(CONDITIONS):
            scores = base.copy()
            eff = spec.conditions.get(cond) if cond != "reference" else None
            if eff is not None:
                for j in range(eff.margin_swaps):
                    scores[j], scores[n_pos + j] = base[n_pos + j], base[j]
                if eff.pos_shift:
                    scores[:n_pos] += eff.pos_shift
                if eff.noise_sd > 0.0:
                    rng = substream(seed, "synth", m, ci_idx)
                    scores += rng.normal(0.0, eff.noise_sd, n)
            for idx in range(n):
                rows.append((model_id, slide_ids[idx], labels[idx], cond, scores[idx]))
    return PredictionTable(rows)


# ---------------------------------------------------------------------------
# report serialization
# ---------------------------------------------------------------------------

def _opt(v):
    return None if v is None else list(v)


def report_to_doc(report: CohortReport) -> dict:
    doc = {
        "schema_version": 1,
        "models": [
            {
                "model_id": r.model_id,
                "auc_by_condition": {c: r.auc_by_condition[c] for c in CONDITIONS},
                "reference_auc": r.reference_auc,
                "robustness": r.robustness,
                "delta_auc": {c: r.delta_auc[c] for c in SIMULATED_CONDITIONS},
                "best_condition": r.best_condition,
                "high_performing": report.flags[r.model_id].high_performing,
                "highly_robust": report.flags[r.model_id].highly_robust,
            }
            for r in report.models
        ],
        "conditions": {
            c: {
                "best_model_count": s.best_model_count,
                "median_delta_auc": s.median_delta_auc,
                "delta_ci": _opt(s.delta_ci),
                "worst_case_decrease": s.worst_case_decrease,
            }
            for c, s in report.conditions.items()
        },
        "performance_robustness": None,
        "bootstrap": None,
        "n_boot": report.n_boot,
        "boot_seed": report.boot_seed,
        "notes": list(report.notes),
    }
    if report.performance_robustness is not None:
        pr = report.performance_robustness
        doc["performance_robustness"] = {
            "pearson_r": pr.r,
            "ci": _opt(pr.ci),
            "n": pr.n,
            "degenerate": pr.degenerate,
        }
    if report.bootstrap is not None:
        doc["bootstrap"] = {
            model_id: {
                "mean_point": list(s.mean_point),
                "reference_auc_ci": list(s.reference_auc_ci),
                "robustness_ci": list(s.robustness_ci),
                "ellipse": None
                if s.ellipse is None
                else {
                    "center": list(s.ellipse.center),
                    "semi_axes": list(s.ellipse.semi_axes),
                    "rotation_deg": s.ellipse.rotation_deg,
                },
                "redraws": s.redraws,
            }
            for model_id, s in report.bootstrap.items()
        }
    return doc


def write_report_json(report: CohortReport, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_doc(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def write_condition_summary_csv(report: CohortReport, path) -> None:
    """Per-condition table: best count, median delta AUC with CI, worst case."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["condition", "best_model_count", "median_delta_auc", "ci_lo", "ci_hi", "worst_case_decrease"]
        )
        for cond in CONDITIONS:
            s = report.conditions[cond]
            ci_lo, ci_hi = (s.delta_ci if s.delta_ci is not None else (None, None))
            writer.writerow(
                [
                    cond,
                    s.best_model_count,
                    _fmt(s.median_delta_auc),
                    _fmt(ci_lo),
                    _fmt(ci_hi),
                    _fmt(s.worst_case_decrease),
                ]
            )


def write_model_summary_csv(report: CohortReport, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["model_id", "reference_auc", "robustness", "best_condition", "high_performing", "highly_robust"]
        )
        for r in report.models:
            flags = report.flags[r.model_id]
            writer.writerow(
                [
                    r.model_id,
                    repr(r.reference_auc),
                    repr(r.robustness),
                    r.best_condition,
                    flags.high_performing,
                    flags.highly_robust,
                ]
            )
