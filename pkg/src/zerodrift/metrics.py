"""Zero-training drift metrics computed from inference outputs only.

Per-day metrics:

* PCS, prediction consistency: share of the day's most frequent predicted label.
* CSI, confidence stability: population coefficient of variation of confidences.
* STR, sentiment transition rate: fraction of adjacent predictions (timestamp
  order) whose labels differ.
* CED, confidence-entropy divergence: mean confidence times the base-2 Shannon
  entropy of the day's predicted-label distribution.

Window-level "drops" compare the record-weighted pre-window mean of a metric
against its worst single day after the event starts, in percentage points.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import asdict, dataclass
from datetime import date
from typing import Mapping, Optional, Sequence

from .model import DriftError, LabelSet
from .temporal import DEFAULT_MIN_BIN_SIZE, EventWindows, TemporalBin, qualifying

DROP_METRICS = ("accuracy", "mean_confidence", "pcs", "ced", "csi", "str_")
SERIES_COLUMNS = (
    "day",
    "n",
    "mean_confidence",
    "confidence_std",
    "prediction_entropy_mean",
    "accuracy",
    "pcs",
    "csi",
    "str",
    "ced",
    "label_entropy",
)


class MetricUnavailableError(DriftError, ValueError):
    pass


@dataclass(frozen=True)
class BinMetrics:
    day: date
    n: int
    mean_confidence: float
    confidence_std: float
    pcs: float
    csi: float
    ced: float
    label_entropy: float
    str_: Optional[float] = None
    prediction_entropy_mean: Optional[float] = None
    accuracy: Optional[float] = None
    n_labeled: int = 0
    n_with_probs: int = 0

    def get(self, metric: str) -> Optional[float]:
        return getattr(self, "str_" if metric == "str" else metric)

    def weight(self, metric: str) -> int:
        if metric == "accuracy":
            return self.n_labeled
        if metric == "prediction_entropy_mean":
            return self.n_with_probs
        return self.n

    def to_row(self) -> dict:
        row = asdict(self)
        row["str"] = row.pop("str_")
        row["day"] = self.day.isoformat()
        row.pop("n_labeled")
        row.pop("n_with_probs")
        return {k: row[k] for k in SERIES_COLUMNS}


@dataclass(frozen=True)
class DropResult:
    """Adverse movement of a metric, in percentage points.

    For ``direction == "decrease"`` the worst day is the minimum and
    ``drop_points = (baseline_value - worst_window_value) * 100``; for
    ``"increase"`` the worst day is the maximum and the sign flips, so a
    positive value always means movement in the adverse direction.
    """

    metric_name: str
    baseline_value: float
    worst_window_value: float
    drop_points: float
    worst_day: date
    direction: str = "decrease"


def _records(bin_or_records):
    return getattr(bin_or_records, "records", bin_or_records)


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def prediction_consistency(bin: TemporalBin) -> float:
    labels = [r.predicted_label for r in _records(bin)]
    return max(Counter(labels).values()) / len(labels)


def confidence_stability(bin: TemporalBin) -> float:
    conf = [r.confidence for r in _records(bin)]
    mu = _mean(conf)
    sigma = math.sqrt(math.fsum((c - mu) ** 2 for c in conf) / len(conf))
    return sigma / mu


def sentiment_transition_rate(bin: TemporalBin) -> Optional[float]:
    labels = [r.predicted_label for r in _records(bin)]
    if len(labels) < 2:
        return None
    changes = sum(1 for a, b in zip(labels, labels[1:]) if a != b)
    return changes / (len(labels) - 1)


def shannon_entropy(distribution: Mapping[str, float] | Sequence[float]) -> float:
    """Base-2 entropy, with ``0 * log 0`` taken as 0."""
    probs = list(distribution.values()) if isinstance(distribution, Mapping) else list(distribution)
    if any(p < 0 for p in probs):
        raise ValueError("negative probability")
    if abs(math.fsum(probs) - 1.0) > 1e-9:
        raise ValueError("probabilities do not sum to 1")
    h = -math.fsum(p * math.log2(p) for p in probs if p > 0)
    return h if h > 0 else 0.0


def label_entropy(bin: TemporalBin) -> float:
    """Entropy of the empirical predicted-label distribution of a bin."""
    counts = Counter(r.predicted_label for r in _records(bin))
    n = sum(counts.values())
    if len(counts) == 1:
        return 0.0
    return -math.fsum((c / n) * math.log2(c / n) for c in counts.values())


def confidence_entropy_divergence(bin: TemporalBin) -> float:
    mu = _mean([r.confidence for r in _records(bin)])
    return mu * label_entropy(bin)


def bin_summary(bin: TemporalBin, label_set: Optional[LabelSet] = None) -> BinMetrics:
    """All per-day metrics of one bin.

    ``accuracy`` counts only records that carry a ``true_label``;
    ``prediction_entropy_mean`` only records that carry ``class_probs``.
    """
    records = _records(bin)
    if not records:
        raise ValueError("empty bin")
    if label_set is not None:
        stray = {r.predicted_label for r in records} - set(label_set)
        if stray:
            raise ValueError(f"labels outside the label set: {sorted(stray)}")
    conf = [r.confidence for r in records]
    mu = _mean(conf)
    sigma = math.sqrt(math.fsum((c - mu) ** 2 for c in conf) / len(conf))
    h = label_entropy(records)
    labeled = [r for r in records if r.true_label is not None]
    with_probs = [r.class_probs for r in records if r.class_probs is not None]
    return BinMetrics(
        day=getattr(bin, "day", None),
        n=len(records),
        mean_confidence=mu,
        confidence_std=sigma,
        pcs=prediction_consistency(records),
        csi=sigma / mu,
        ced=mu * h,
        label_entropy=h,
        str_=sentiment_transition_rate(records),
        prediction_entropy_mean=(
            _mean([shannon_entropy(p) for p in with_probs]) if with_probs else None
        ),
        accuracy=(
            sum(1 for r in labeled if r.predicted_label == r.true_label) / len(labeled)
            if labeled
            else None
        ),
        n_labeled=len(labeled),
        n_with_probs=len(with_probs),
    )


def metric_series(
    bins: Sequence[TemporalBin],
    label_set: Optional[LabelSet] = None,
    min_bin_size: int = DEFAULT_MIN_BIN_SIZE,
) -> list[BinMetrics]:
    """Per-day metrics for the bins that meet ``min_bin_size``, in day order."""
    return [bin_summary(b, label_set) for b in qualifying(bins, min_bin_size)]


def weighted_mean(summaries: Sequence[BinMetrics], metric: str) -> Optional[float]:
    """Record-weighted mean of a per-day metric; None when no bin carries it."""
    pairs = [(s.get(metric), s.weight(metric)) for s in summaries]
    pairs = [(v, w) for v, w in pairs if v is not None and w > 0]
    total = sum(w for _, w in pairs)
    if not total:
        return None
    return math.fsum(v * w for v, w in pairs) / total


def max_drop(
    windows: EventWindows,
    metric: str,
    label_set: Optional[LabelSet] = None,
    min_bin_size: int = DEFAULT_MIN_BIN_SIZE,
    direction: str = "decrease",
    summaries: Optional[Mapping[date, BinMetrics]] = None,
) -> DropResult:
    """Largest adverse move of ``metric`` after the event starts.

    The baseline is the record-weighted mean over every pre-window bin (small
    days included); the worst value is taken over qualifying during and post
    days only. Ties go to the earliest day.

    Args:
        summaries: optional precomputed ``day -> BinMetrics`` map.

    Raises:
        MetricUnavailableError: the metric has no baseline or no qualifying
            day after the event starts.
    """
    if metric == "str":
        metric = "str_"
    if metric not in DROP_METRICS:
        raise ValueError(f"unsupported metric {metric!r}")
    if direction not in ("decrease", "increase"):
        raise ValueError(f"direction must be 'decrease' or 'increase', got {direction!r}")

    def summary(b: TemporalBin) -> BinMetrics:
        if summaries is not None and b.day in summaries:
            return summaries[b.day]
        return bin_summary(b, label_set)

    if not qualifying(windows.pre, min_bin_size):
        raise MetricUnavailableError(f"{metric}: pre window has no qualifying day")
    baseline = weighted_mean([summary(b) for b in windows.pre], metric)
    candidates = [
        (b.day, summary(b).get(metric))
        for b in qualifying(windows.during + windows.post, min_bin_size)
    ]
    candidates = [(d, v) for d, v in candidates if v is not None]
    if baseline is None or not candidates:
        raise MetricUnavailableError(f"{metric}: metric unavailable")
    if direction == "decrease":
        worst_day, worst = min(candidates, key=lambda dv: dv[1])
        points = (baseline - worst) * 100.0
    else:
        worst_day, worst = max(candidates, key=lambda dv: dv[1])
        points = (worst - baseline) * 100.0
    return DropResult(
        metric_name="str" if metric == "str_" else metric,
        baseline_value=baseline,
        worst_window_value=worst,
        drop_points=points,
        worst_day=worst_day,
        direction=direction,
    )


def series_to_csv(series: Sequence[BinMetrics | Mapping]) -> str:
    """One CSV row per day; missing optional metrics are written as empty cells."""
    buf = io.StringIO(newline="")
    writer = csv.DictWriter(buf, fieldnames=SERIES_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for item in series:
        row = item.to_row() if isinstance(item, BinMetrics) else item
        writer.writerow(
            {k: ("" if row.get(k) is None else _fmt(row.get(k))) for k in SERIES_COLUMNS}
        )
    return buf.getvalue()


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)
