"""ROC/PR analysis, DeLong tests, bootstrap intervals, and FDR correction.

Conventions used throughout:

- labels are binary vectors (1 = positive), scores are real-valued;
- the classification rule is always ``score >= threshold  =>  positive``;
- p-values are two-sided normal;
- degenerate inputs raise typed errors instead of returning silent zeros.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .core import RadlabelError

__all__ = [
    "SingleClass",
    "NoPositives",
    "LengthMismatch",
    "DegenerateData",
    "OutOfRange",
    "NoEligibleLabels",
    "RocCurve",
    "PrCurve",
    "DelongResult",
    "ConfidenceInterval",
    "LabelEvalRow",
    "auc",
    "roc_curve",
    "pr_curve",
    "youden_threshold",
    "confusion_metrics",
    "delong_paired",
    "delong_unpaired",
    "bootstrap_ci",
    "benjamini_hochberg",
    "macro_auc",
]


class SingleClass(RadlabelError):
    code = "single_class"


class NoPositives(RadlabelError):
    code = "no_positives"


class LengthMismatch(RadlabelError):
    code = "length_mismatch"


class DegenerateData(RadlabelError):
    code = "degenerate_data"


class OutOfRange(RadlabelError):
    code = "out_of_range"


class NoEligibleLabels(RadlabelError):
    code = "no_eligible_labels"


def _as_arrays(scores: Sequence[float], labels: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=int)
    if s.shape != y.shape or s.ndim != 1:
        raise LengthMismatch(f"scores {s.shape} vs labels {y.shape}")
    if not np.isin(y, (0, 1)).all():
        raise OutOfRange("labels must be 0/1")
    return s, y


def _require_both_classes(y: np.ndarray) -> tuple[int, int]:
    n_pos = int(y.sum())
    n_neg = int(len(y) - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise SingleClass(f"need both classes, got {n_pos} positives / {n_neg} negatives")
    return n_pos, n_neg


def _midrank(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean rank of their block."""
    order = np.argsort(x, kind="mergesort")
    z = x[order]
    n = len(x)
    ranks = np.empty(n, dtype=float)
    i = 0
    while i < n:
        j = i
        while j < n and z[j] == z[i]:
            j += 1
        ranks[i:j] = 0.5 * (i + j - 1) + 1.0
        i = j
    out = np.empty(n, dtype=float)
    out[order] = ranks
    return out


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Area under the ROC curve as the tie-corrected Mann-Whitney statistic.

    Equals (#correctly ordered positive/negative pairs + 0.5 * #tied pairs)
    divided by n_pos * n_neg, and equals the trapezoidal area under
    :func:`roc_curve` up to floating-point error.
    """
    s, y = _as_arrays(scores, labels)
    n_pos, n_neg = _require_both_classes(y)
    ranks = _midrank(s)
    rank_sum_pos = float(ranks[y == 1].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


@dataclass(frozen=True)
class RocCurve:
    """Operating points sorted by threshold descending; starts (0,0), ends (1,1)."""

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def area(self) -> float:
        trapezoid = getattr(np, "trapezoid", None) or np.trapz
        return float(trapezoid(self.tpr, self.fpr))


def _threshold_counts(s: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(tp, fp, thresholds) of the >= rule at each distinct score, descending."""
    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    y_sorted = y[order]
    distinct = np.flatnonzero(np.diff(s_sorted) != 0)
    last_of_block = np.r_[distinct, len(s_sorted) - 1]
    tp = np.cumsum(y_sorted)[last_of_block]
    fp = (last_of_block + 1) - tp
    return tp, fp, s_sorted[last_of_block]


def roc_curve(scores: Sequence[float], labels: Sequence[int]) -> RocCurve:
    """One point per distinct score threshold plus the (0,0) endpoint.

    Tied scores collapse onto a single point; the final point is always (1,1)
    because the lowest threshold predicts everything positive.
    """
    s, y = _as_arrays(scores, labels)
    n_pos, n_neg = _require_both_classes(y)
    tp, fp, distinct_desc = _threshold_counts(s, y)
    fpr = np.r_[0.0, fp / n_neg]
    tpr = np.r_[0.0, tp / n_pos]
    thresholds = np.r_[np.inf, distinct_desc]
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thresholds)


@dataclass(frozen=True)
class PrCurve:
    """Precision/recall per distinct threshold with step-interpolated AP."""

    recall: np.ndarray
    precision: np.ndarray
    thresholds: np.ndarray
    average_precision: float

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.recall.tolist(), self.precision.tolist()))


def pr_curve(scores: Sequence[float], labels: Sequence[int]) -> PrCurve:
    """Precision-recall curve; average precision is the step sum sum_i (R_i - R_{i-1}) P_i."""
    s, y = _as_arrays(scores, labels)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise NoPositives("precision-recall needs at least one positive")
    tp, fp, thresholds = _threshold_counts(s, y)
    recall = tp / n_pos
    precision = tp / (tp + fp)
    ap = float(np.sum(np.diff(np.r_[0.0, recall]) * precision))
    return PrCurve(recall=recall, precision=precision,
                   thresholds=thresholds, average_precision=ap)


def youden_threshold(scores: Sequence[float], labels: Sequence[int]) -> tuple[float, float]:
    """Threshold maximizing J = sensitivity + specificity - 1.

    Candidates are the midpoints of adjacent distinct sorted scores plus the
    -inf/+inf sentinel rules. Ties in J break toward higher sensitivity, then
    the lower threshold.
    """
    s, y = _as_arrays(scores, labels)
    n_pos, n_neg = _require_both_classes(y)
    tp, fp, distinct_desc = _threshold_counts(s, y)
    tp = np.r_[0, tp]  # leading entry: the all-negative rule
    fp = np.r_[0, fp]
    # Each count pair is one distinct classification of the >= rule. Its
    # canonical threshold is the midpoint below the rule's raw score
    # (-inf below the minimum, +inf for the all-negative rule).
    candidates = np.empty(len(tp))
    candidates[0] = np.inf
    if len(distinct_desc) > 1:
        candidates[1:-1] = (distinct_desc[:-1] + distinct_desc[1:]) / 2.0
    candidates[-1] = -np.inf
    # Rank J = tp/n_pos - fp/n_neg in exact integer arithmetic so that
    # mathematically tied rules really tie and the sensitivity/threshold
    # tie-breaks decide.
    j_scaled = tp * n_neg - fp * n_pos
    best = np.lexsort((candidates, -tp, -j_scaled))[0]
    return float(candidates[best]), float(j_scaled[best] / (n_pos * n_neg))


def confusion_metrics(scores: Sequence[float], labels: Sequence[int],
                      threshold: float) -> tuple[float, float, float]:
    """(accuracy, sensitivity, specificity) of the 2x2 table at a threshold.

    Raises SingleClass when the rate that would be needed is undefined
    (no positives for sensitivity, no negatives for specificity).
    """
    s, y = _as_arrays(scores, labels)
    if len(y) == 0:
        raise LengthMismatch("empty input")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("sensitivity/specificity undefined without both classes")
    pred = s >= threshold
    tp = int(np.sum(pred & (y == 1)))
    tn = int(np.sum(~pred & (y == 0)))
    accuracy = (tp + tn) / len(y)
    sensitivity = tp / n_pos
    specificity = tn / n_neg
    return accuracy, sensitivity, specificity


# --- DeLong ------------------------------------------------------------------


@dataclass(frozen=True)
class DelongResult:
    auc_a: float
    auc_b: float
    variance_a: float
    variance_b: float
    covariance: float
    z: float
    p_two_sided: float
    mode: str  # "paired" | "unpaired"


def _placements(scores: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """AUC plus the per-positive and per-negative structural components.

    V+_i is the mean over negatives of psi(s+_i, s-_j) with psi = 1/0.5/0 for
    greater/equal/less; V-_j is symmetric. Both average to the AUC.
    """
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    m, n = len(pos), len(neg)
    combined_rank = _midrank(np.concatenate([pos, neg]))
    v_pos = (combined_rank[:m] - _midrank(pos)) / n
    v_neg = 1.0 - (combined_rank[m:] - _midrank(neg)) / m
    return float(v_pos.mean()), v_pos, v_neg


def _component_cov(a: np.ndarray, b: np.ndarray) -> float:
    # ddof=1 covariance; a singleton component carries no variance information.
    if len(a) < 2:
        return 0.0
    return float(np.cov(a, b, ddof=1)[0, 1])


def _two_sided_p(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


def _z_and_p(diff: float, var_diff: float) -> tuple[float, float]:
    if diff == 0.0:
        return 0.0, 1.0
    if var_diff <= 0.0:
        return math.copysign(math.inf, diff), 0.0
    z = diff / math.sqrt(var_diff)
    return z, _two_sided_p(z)


def delong_variance(scores: Sequence[float], labels: Sequence[int]) -> float:
    """DeLong variance estimate of a single AUC."""
    s, y = _as_arrays(scores, labels)
    n_pos, n_neg = _require_both_classes(y)
    _, v_pos, v_neg = _placements(s, y)
    return _component_cov(v_pos, v_pos) / n_pos + _component_cov(v_neg, v_neg) / n_neg


def delong_paired(scores_a: Sequence[float], scores_b: Sequence[float],
                  labels: Sequence[int]) -> DelongResult:
    """DeLong test for two correlated AUCs measured on the same cases."""
    a, y = _as_arrays(scores_a, labels)
    b = np.asarray(scores_b, dtype=float)
    if b.shape != a.shape:
        raise LengthMismatch(f"scores_a {a.shape} vs scores_b {b.shape}")
    n_pos, n_neg = _require_both_classes(y)
    auc_a, vp_a, vn_a = _placements(a, y)
    auc_b, vp_b, vn_b = _placements(b, y)
    var_a = _component_cov(vp_a, vp_a) / n_pos + _component_cov(vn_a, vn_a) / n_neg
    var_b = _component_cov(vp_b, vp_b) / n_pos + _component_cov(vn_b, vn_b) / n_neg
    cov = _component_cov(vp_a, vp_b) / n_pos + _component_cov(vn_a, vn_b) / n_neg
    z, p = _z_and_p(auc_a - auc_b, var_a + var_b - 2.0 * cov)
    return DelongResult(auc_a=auc_a, auc_b=auc_b, variance_a=var_a, variance_b=var_b,
                        covariance=cov, z=z, p_two_sided=p, mode="paired")


def delong_unpaired(scores_1: Sequence[float], labels_1: Sequence[int],
                    scores_2: Sequence[float], labels_2: Sequence[int]) -> DelongResult:
    """DeLong comparison of AUCs from two independent samples (covariance 0)."""
    s1, y1 = _as_arrays(scores_1, labels_1)
    s2, y2 = _as_arrays(scores_2, labels_2)
    m1, n1 = _require_both_classes(y1)
    m2, n2 = _require_both_classes(y2)
    auc_1, vp1, vn1 = _placements(s1, y1)
    auc_2, vp2, vn2 = _placements(s2, y2)
    var_1 = _component_cov(vp1, vp1) / m1 + _component_cov(vn1, vn1) / n1
    var_2 = _component_cov(vp2, vp2) / m2 + _component_cov(vn2, vn2) / n2
    z, p = _z_and_p(auc_1 - auc_2, var_1 + var_2)
    return DelongResult(auc_a=auc_1, auc_b=auc_2, variance_a=var_1, variance_b=var_2,
                        covariance=0.0, z=z, p_two_sided=p, mode="unpaired")


# --- bootstrap ----------------------------------------------------------------


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float = 0.95
    method: str = "percentile-bootstrap"
    replicates: int = 1000

    def __post_init__(self) -> None:
        if self.lower > self.upper:
            raise ValueError("interval bounds out of order")


_MAX_REDRAWS = 10


def bootstrap_ci(metric: Callable[[np.ndarray, np.ndarray], float],
                 scores: Sequence[float], labels: Sequence[int],
                 replicates: int = 1000, seed: int | Sequence[int] = 0,
                 level: float = 0.95) -> ConfidenceInterval:
    """Percentile bootstrap interval of ``metric(scores, labels)``.

    Case resampling with replacement. A resample on which the metric is
    undefined (raises SingleClass/NoPositives) is redrawn, at most 10 times
    per replicate; exhausting the budget raises DegenerateData. Replicate i
    draws from substream i of the seed, so results are seed-deterministic
    even if replicates are evaluated in parallel.
    """
    s, y = _as_arrays(scores, labels)
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    n = len(s)
    if n == 0:
        raise DegenerateData("cannot resample empty data")
    streams = np.random.SeedSequence(seed).spawn(replicates)
    values = np.empty(replicates, dtype=float)
    for i, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        for _ in range(_MAX_REDRAWS + 1):
            idx = rng.integers(0, n, size=n)
            try:
                values[i] = float(metric(s[idx], y[idx]))
                break
            except (SingleClass, NoPositives):
                continue
        else:
            raise DegenerateData(
                f"metric undefined on {_MAX_REDRAWS} consecutive resamples of replicate {i}"
            )
    alpha = 1.0 - level
    lower, upper = np.quantile(values, [alpha / 2.0, 1.0 - alpha / 2.0])
    return ConfidenceInterval(lower=float(lower), upper=float(upper), level=level,
                              replicates=replicates)


# --- multiple testing -----------------------------------------------------------


def benjamini_hochberg(p_values: Sequence[float]) -> np.ndarray:
    """Step-up FDR adjustment, returned in the original order.

    Sort ascending, q_i = p_(i) * m / i, enforce monotonicity from the largest
    rank down, cap at 1.
    """
    p = np.asarray(p_values, dtype=float)
    if p.size and (p.min() < 0.0 or p.max() > 1.0):
        raise OutOfRange("p-values must lie in [0, 1]")
    m = len(p)
    if m == 0:
        return np.empty(0, dtype=float)
    order = np.argsort(p, kind="mergesort")
    ranked = p[order] * m / np.arange(1, m + 1)
    adjusted = np.minimum.accumulate(ranked[::-1])[::-1]
    adjusted = np.minimum(adjusted, 1.0)
    out = np.empty(m, dtype=float)
    out[order] = adjusted
    return out


# --- macro averaging ------------------------------------------------------------


@dataclass(frozen=True)
class LabelEvalRow:
    """Per-label evaluation summary as it appears in an EvalReport."""

    label: str
    n_positive: Mapping[str, int]
    auc: float
    auc_ci: ConfidenceInterval | None = None
    threshold: float | None = None
    youden_j: float | None = None
    accuracy: float | None = None
    accuracy_ci: ConfidenceInterval | None = None
    sensitivity: float | None = None
    sensitivity_ci: ConfidenceInterval | None = None
    specificity: float | None = None
    specificity_ci: ConfidenceInterval | None = None
    included_in_macro: bool = False


def macro_auc(rows: Iterable[LabelEvalRow],
              min_positives: int = 10) -> tuple[float, float, float, list[str]]:
    """Unweighted mean (plus min/max) of AUCs over eligible labels.

    A label is eligible when its positive count reaches ``min_positives`` in
    every set it reports counts for.
    """
    eligible = [
        row for row in rows
        if row.n_positive and all(v >= min_positives for v in row.n_positive.values())
    ]
    if not eligible:
        raise NoEligibleLabels(f"no label has >= {min_positives} positives in every set")
    values = np.array([row.auc for row in eligible], dtype=float)
    names = [row.label for row in eligible]
    return float(values.mean()), float(values.min()), float(values.max()), names
