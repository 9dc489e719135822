"""Drift verdicts, industry threshold breaches and detection-rate bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional, Sequence

import numpy as np

from .baselines import (
    centroid_drift,
    clustering_drift,
    densify,
    ks_statistic,
    median_sq_distance,
    mmd_rbf,
    psi,
    tfidf_vectorize,
    wasserstein_1d,
)
from .metrics import BinMetrics, DropResult, MetricUnavailableError, max_drop
from .model import DriftError, PredictionRecord
from .rng import CounterRNG, derive_seed
from .stats import permutation_test
from .temporal import DEFAULT_MIN_BIN_SIZE, EventWindows

DEFAULT_Z_THRESHOLD = 2.0
DEFAULT_MIN_ABS_DROP = 2.0
DECREASE_METRICS = ("mean_confidence", "pcs", "accuracy")
INCREASE_METRICS = ("ced", "str")

SEVERITY_BANDS = ((4.0, "Critical"), (2.0, "High"), (1.0, "Breach"))
WITHIN = "Within-threshold"


class InsufficientBaselineError(DriftError, ValueError):
    pass


@dataclass(frozen=True)
class IndustryProfile:
    name: str
    threshold_points: float

    def __post_init__(self):
        if not self.threshold_points > 0:
            raise ValueError(f"{self.name}: threshold_points must be positive")


DEFAULT_PROFILES = (
    IndustryProfile("Customer Service", 5.0),
    IndustryProfile("Financial Trading", 3.0),
    IndustryProfile("Medical NLP", 2.0),
    IndustryProfile("Brand Monitoring", 8.0),
)


@dataclass(frozen=True)
class Breach:
    profile: str
    threshold_points: float
    multiplier: float
    severity: str
    exact_multiplier: float


@dataclass(frozen=True)
class Trigger:
    metric: str
    z_score: Optional[float]  # None when the baseline has zero variance
    day: str
    drop_points: float
    flags: tuple[str, ...] = ()


@dataclass
class DriftVerdict:
    event_name: str
    detected: bool
    trigger_metrics: list[Trigger]
    max_drop: Optional[DropResult]
    breaches: list[Breach] = field(default_factory=list)
    evaluated: dict = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)


def round_half_up(value: float, places: int = 1) -> float:
    quantum = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def severity_for(multiplier: float) -> str:
    for bound, name in SEVERITY_BANDS:
        if multiplier >= bound:
            return name
    return WITHIN


def industry_breach(drop_points: float, profiles: Sequence[IndustryProfile] = DEFAULT_PROFILES) -> list[Breach]:
    """Multiples of each profile's tolerance consumed by an accuracy drop.

    The reported multiplier is rounded half-up to one decimal; severity is
    read from the unrounded ratio.
    """
    if drop_points < 0:
        raise ValueError("drop_points must be non-negative")
    out = []
    for profile in profiles:
        if not profile.threshold_points > 0:
            raise ValueError(f"{profile.name}: threshold must be positive")
        exact = drop_points / profile.threshold_points
        out.append(
            Breach(
                profile=profile.name,
                threshold_points=profile.threshold_points,
                multiplier=round_half_up(exact, 1),
                severity=severity_for(exact),
                exact_multiplier=exact,
            )
        )
    return out


def _values(summaries: Sequence[BinMetrics], metric: str) -> list[tuple[str, float]]:
    return [(s.day.isoformat(), s.get(metric)) for s in summaries if s.get(metric) is not None]


def detect_drift(
    windows: EventWindows,
    metrics_series: Sequence[BinMetrics],
    z_threshold: float = DEFAULT_Z_THRESHOLD,
    min_abs_drop: float = DEFAULT_MIN_ABS_DROP,
    min_bin_size: int = DEFAULT_MIN_BIN_SIZE,
    profiles: Sequence[IndustryProfile] = DEFAULT_PROFILES,
) -> DriftVerdict:
    """Decide whether an event window shows drift.

    For each metric, the pre-window qualifying days give a baseline mean and
    sample standard deviation. A metric triggers when some during-event day
    deviates adversely by at least ``z_threshold`` baseline standard
    deviations (downward for mean confidence, PCS and accuracy; upward for CED
    and STR) and the metric's worst move over the during and post windows,
    from :func:`max_drop`, is at least ``min_abs_drop`` points. A
    zero-variance baseline triggers on the absolute arm alone and is flagged.

    Args:
        metrics_series: per-day metrics covering at least the window bins.

    Raises:
        InsufficientBaselineError: fewer than 3 qualifying pre-window days.
    """
    by_day = {s.day: s for s in metrics_series}
    pre = [by_day[b.day] for b in windows.pre if b.day in by_day and len(b) >= min_bin_size]
    during = [by_day[b.day] for b in windows.during if b.day in by_day and len(b) >= min_bin_size]
    if len(pre) < 3:
        raise InsufficientBaselineError(
            f"{windows.event_name}: need 3 qualifying baseline days, have {len(pre)}"
        )

    triggers: list[Trigger] = []
    evaluated: dict = {}
    drops: dict[str, DropResult] = {}
    for metric in DECREASE_METRICS + INCREASE_METRICS:
        direction = "decrease" if metric in DECREASE_METRICS else "increase"
        base = [v for _, v in _values(pre, metric)]
        days = _values(during, metric)
        if len(base) < 3 or not days:
            evaluated[metric] = {"status": "unavailable"}
            continue
        try:
            drop = max_drop(windows, metric, min_bin_size=min_bin_size, direction=direction, summaries=by_day)
        except MetricUnavailableError:
            evaluated[metric] = {"status": "unavailable"}
            continue
        drops[metric] = drop
        mu = math.fsum(base) / len(base)
        sigma = float(np.std(base, ddof=1))
        sign = 1.0 if direction == "decrease" else -1.0
        deviations = [(day, sign * (mu - v)) for day, v in days]
        worst_day, worst_dev = max(deviations, key=lambda dv: dv[1])
        flags: tuple[str, ...] = ()
        if sigma > 0:
            z = worst_dev / sigma
            fires_z = z >= z_threshold
        else:
            z = None
            flags = ("zero_variance_baseline",)
            fires_z = worst_dev > 0
        fires = fires_z and drop.drop_points >= min_abs_drop
        evaluated[metric] = {
            "status": "evaluated",
            "baseline_mean": mu,
            "baseline_std": sigma,
            "max_z": z,
            "max_z_day": worst_day,
            "drop_points": drop.drop_points,
            "direction": direction,
            "triggered": fires,
        }
        if fires:
            triggers.append(Trigger(metric, z, worst_day, drop.drop_points, flags))

    headline = drops.get("accuracy") or drops.get("mean_confidence")
    breaches = industry_breach(max(headline.drop_points, 0.0), profiles) if headline else []
    verdict_flags = sorted({f for t in triggers for f in t.flags} | set(windows.flags))
    return DriftVerdict(
        event_name=windows.event_name,
        detected=bool(triggers),
        trigger_metrics=triggers,
        max_drop=headline,
        breaches=breaches,
        evaluated=evaluated,
        flags=verdict_flags,
    )


def detection_rate(verdicts: Sequence) -> float:
    """Fraction of verdicts (objects with ``.detected`` or plain booleans) that fired."""
    if not verdicts:
        raise ValueError("need at least one verdict")
    hits = sum(1 for v in verdicts if (v.detected if hasattr(v, "detected") else bool(v)))
    return hits / len(verdicts)


def _row_stat(fn):
    def stat(a_rows: np.ndarray, b_rows: np.ndarray) -> np.ndarray:
        return np.array([fn(a, b) for a, b in zip(a_rows, b_rows)])

    return stat


def baseline_verdicts(
    reference: Sequence[PredictionRecord],
    candidate: Sequence[PredictionRecord],
    methods: Sequence[str],
    alpha: float = 0.05,
    iterations: int = 199,
    seed: int = 42,
    psi_bins: int = 10,
    kmeans_k: int = 5,
) -> dict[str, dict]:
    """Per-method drift decisions for the comparison detectors.

    A baseline score has no native decision rule, so each method fires when
    its score is significant under a permutation null: window membership is
    shuffled ``iterations`` times and the method detects when
    ``p <= alpha``. Methods whose inputs are missing report ``detected=False``
    with a reason.
    """
    out: dict[str, dict] = {}
    conf_a = np.array([r.confidence for r in reference])
    conf_b = np.array([r.confidence for r in candidate])
    for method in methods:
        sub_seed = derive_seed(seed, f"baseline:{method}")
        if method in ("ks", "psi", "wasserstein"):
            fn = {
                "ks": ks_statistic,
                "psi": lambda a, b: psi(a, b, psi_bins),
                "wasserstein": wasserstein_1d,
            }[method]
            score, p = permutation_test(conf_a, conf_b, _row_stat(fn), iterations, sub_seed)
        elif method == "tfidf_centroid":
            texts_a = [r.text for r in reference if r.text is not None]
            texts_b = [r.text for r in candidate if r.text is not None]
            if not texts_a or not texts_b:
                out[method] = {"detected": False, "reason": "no text"}
                continue
            vecs = densify(tfidf_vectorize(texts_a + texts_b))
            score, p = _index_permutation(vecs, len(texts_a), centroid_drift, iterations, sub_seed)
        elif method in ("mmd", "clustering_js"):
            emb_a = [r.embedding for r in reference if r.embedding is not None]
            emb_b = [r.embedding for r in candidate if r.embedding is not None]
            if not emb_a or not emb_b:
                out[method] = {"detected": False, "reason": "no embeddings"}
                continue
            pooled = np.asarray(emb_a + emb_b, dtype=np.float64)
            if method == "mmd":
                sigma2 = median_sq_distance(pooled)
                fn = lambda a, b: mmd_rbf(a, b, sigma2)  # noqa: E731
            else:
                fn = lambda a, b: clustering_drift(a, b, kmeans_k, seed)  # noqa: E731
            score, p = _index_permutation(pooled, len(emb_a), fn, iterations, sub_seed)
        else:
            raise ValueError(f"unknown baseline method {method!r}")
        out[method] = {
            "detected": bool(p <= alpha),
            "score": float(score),
            "p_value": float(p),
            "iterations": iterations,
            "seed": sub_seed,
        }
    return out


def _index_permutation(pooled: np.ndarray, n_first: int, fn, iterations: int, seed: int):
    n = pooled.shape[0]
    observed = fn(pooled[:n_first], pooled[n_first:])
    rng = CounterRNG(seed)
    threshold = observed - 1e-12 * max(1.0, abs(observed))
    exceed = 0
    for _ in range(iterations):
        perm = rng.permutation_keys(n)
        if fn(pooled[perm[:n_first]], pooled[perm[n_first:]]) >= threshold:
            exceed += 1
    return observed, (1 + exceed) / (1 + iterations)
