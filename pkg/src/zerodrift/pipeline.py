"""End-to-end analysis: ingest -> bin -> window -> metrics -> baselines -> stats -> alerting."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass
from datetime import date
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .alerting import InsufficientBaselineError, detect_drift
from .baselines import score_windows
from .config import RunConfig
from .metrics import BinMetrics, max_drop, metric_series
from .model import Dataset, DriftError, make_dataset, parse_records
from .rng import derive_seed
from .stats import (
    anova_f,
    bh_fdr,
    bootstrap_ci,
    correlation_permutation_p,
    effect_sizes,
    permutation_p,
)
from .temporal import EventConfig, EventWindows, assign_bins, window_partition

log = logging.getLogger(__name__)

FDR_METRICS = ("mean_confidence", "pcs", "csi", "str", "ced", "accuracy")


class StageError(DriftError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage}: {cause}")


@dataclass
class DriftReport:
    config: dict
    dataset: dict
    events: list[dict]
    tool: str = "zerodrift"
    version: str = __version__
    runtime_seconds: Optional[float] = None

    @property
    def any_detected(self) -> bool:
        return any((e.get("verdict") or {}).get("detected") for e in self.events)

    def to_dict(self, include_runtime: bool = False) -> dict:
        out = {
            "tool": self.tool,
            "version": self.version,
            "config": self.config,
            "dataset": self.dataset,
            "events": self.events,
        }
        if include_runtime and self.runtime_seconds is not None:
            out["runtime_seconds"] = self.runtime_seconds
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DriftReport":
        return cls(
            config=data["config"],
            dataset=data["dataset"],
            events=data["events"],
            tool=data.get("tool", "zerodrift"),
            version=data.get("version", __version__),
            runtime_seconds=data.get("runtime_seconds"),
        )


def to_plain(obj):
    """Dataclasses, dates and numpy scalars to JSON-ready structures."""
    if hasattr(obj, "__dataclass_fields__"):
        return to_plain(asdict(obj))
    if isinstance(obj, dict):
        return {str("str" if k == "str_" else k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if hasattr(obj, "isoformat"):
        return obj.isoformat()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def ingest(config: RunConfig) -> Dataset:
    if not config.inputs:
        raise StageError("ingest", FileNotFoundError("no input files configured"))
    records = []
    for spec in config.inputs:
        try:
            data = Path(spec.path).read_bytes()
        except OSError as exc:
            raise StageError("ingest", FileNotFoundError(f"{spec.path}: {exc.strerror}")) from exc
        try:
            ds = parse_records(data, spec.format, config.labels, name=config.name)
        except DriftError as exc:
            raise StageError("ingest", type(exc)(f"{spec.path}: {exc}")) from exc
        records.extend(ds.records)
    try:
        return make_dataset(records, config.labels, name=config.name)
    except DriftError as exc:
        raise StageError("ingest", exc) from exc


def _guard(fn, *args, **kwargs):
    try:
        return to_plain(fn(*args, **kwargs))
    except (DriftError, ValueError) as exc:
        return {"error": str(exc)}


def window_records(bins) -> list:
    return [r for b in bins for r in b.records]


def _correctness(records) -> list[float]:
    return [float(r.predicted_label == r.true_label) for r in records if r.true_label is not None]


def _stats_section(
    windows: EventWindows,
    series: Sequence[BinMetrics],
    drops: dict,
    config: RunConfig,
    event_seed: int,
) -> dict:
    pre_recs = window_records(windows.pre)
    during_recs = window_records(windows.during)
    post_recs = window_records(windows.post)
    pre_conf = [r.confidence for r in pre_recs]
    during_conf = [r.confidence for r in during_recs]
    by_day = {b.day: b for b in windows.all_bins()}

    boot: dict = {}
    boot["pre_mean_confidence"] = _guard(
        bootstrap_ci, pre_conf, "mean", config.iterations,
        derive_seed(event_seed, "bootstrap:pre_mean_confidence"), config.level,
    )
    for metric, values_of in (
        ("mean_confidence", lambda recs: [r.confidence for r in recs]),
        ("accuracy", _correctness),
    ):
        drop = drops.get(metric)
        if not isinstance(drop, dict) or "worst_day" not in drop:
            continue
        worst = by_day[_date(drop["worst_day"])]
        boot[f"{metric}_drop_points"] = _guard(
            bootstrap_ci, values_of(worst.records), "drop_points", config.iterations,
            derive_seed(event_seed, f"bootstrap:{metric}_drop"), config.level,
            reference=drop["baseline_value"],
        )

    effects = {"confidence": _guard(effect_sizes, during_conf, pre_conf)}
    if _correctness(during_recs) and _correctness(pre_recs):
        effects["correctness"] = _guard(effect_sizes, _correctness(during_recs), _correctness(pre_recs))

    pre_days = {b.day for b in windows.pre}
    during_days = {b.day for b in windows.during}
    tests = []
    for metric in FDR_METRICS:
        a = [s.get(metric) for s in series if s.day in during_days and s.get(metric) is not None]
        b = [s.get(metric) for s in series if s.day in pre_days and s.get(metric) is not None]
        if not a or not b:
            continue
        p = permutation_p(a, b, config.permutation_iterations, derive_seed(event_seed, f"perm:{metric}"))
        tests.append({"metric": metric, "p_value": p, "n_during_days": len(a), "n_pre_days": len(b)})
    if tests:
        reject, adjusted = bh_fdr([t["p_value"] for t in tests], config.alpha)
        for t, rej, adj in zip(tests, reject, adjusted):
            t["rejected"] = rej
            t["adjusted_p"] = adj
    fdr = {
        "method": "benjamini_hochberg",
        "alpha": config.alpha,
        "p_value_source": "permutation (two-sided difference of per-day means)",
        "iterations": config.permutation_iterations,
        "tests": tests,
    }

    groups = [g for g in (pre_conf, during_conf, [r.confidence for r in post_recs]) if len(g) >= 2]
    anova = _guard(lambda: {"f_statistic": anova_f(groups), "groups": len(groups),
                            "group_sizes": [len(g) for g in groups], "feature": "confidence"})

    days = [s for s in series if s.day in by_day]
    corr = _guard(_correlation, days, config.permutation_iterations, derive_seed(event_seed, "perm:correlation"))
    return {
        "bootstrap": boot,
        "effect_sizes": effects,
        "fdr": fdr,
        "anova": anova,
        "correlation": corr,
    }


def _correlation(days: Sequence[BinMetrics], iterations: int, seed: int) -> dict:
    r, p = correlation_permutation_p(
        [s.mean_confidence for s in days], [s.label_entropy for s in days], iterations, seed
    )
    return {
        "x": "mean_confidence",
        "y": "label_entropy",
        "r": r,
        "p_value": p,
        "p_value_source": "permutation",
        "iterations": iterations,
        "n_days": len(days),
    }


def _date(value) -> date:
    return value if isinstance(value, date) else date.fromisoformat(value)


def analyze_event(dataset: Dataset, bins, event: EventConfig, config: RunConfig) -> dict:
    stage = "window"
    try:
        windows = window_partition(bins, event)
        stage = "metrics"
        series = metric_series(windows.all_bins(), dataset.label_set, config.min_bin_size)
        by_day = {s.day: s for s in series}
        drops = {}
        for metric in config.metrics:
            drops[metric] = _guard(
                max_drop, windows, metric, dataset.label_set, config.min_bin_size, summaries=by_day
            )
        stage = "baselines"
        event_seed = derive_seed(config.seed, f"event:{event.event_name}")
        scores, skipped = score_windows(
            window_records(windows.pre),
            window_records(windows.during),
            config.baselines,
            config.psi_bins,
            config.kmeans_k,
            derive_seed(event_seed, "kmeans"),
        )
        stage = "stats"
        stats = _stats_section(windows, series, drops, config, event_seed)
        stage = "alerting"
        try:
            verdict = to_plain(
                detect_drift(
                    windows, series, config.z_threshold, config.min_abs_drop,
                    config.min_bin_size, config.profiles,
                )
            )
        except InsufficientBaselineError as exc:
            verdict = {"detected": False, "error": str(exc), "event_name": event.event_name}
    except (DriftError, ValueError) as exc:
        if isinstance(exc, StageError):
            raise
        raise StageError(stage, exc) from exc

    window_days = {
        "pre": [b.day for b in windows.pre],
        "during": [b.day for b in windows.during],
        "post": [b.day for b in windows.post],
    }
    series_rows = []
    for name, days in window_days.items():
        for s in series:
            if s.day in days:
                series_rows.append({"window": name, **s.to_row()})
    return {
        "event_name": event.event_name,
        "windows": {**windows.sizes, "flags": list(windows.flags)},
        "series": to_plain(series_rows),
        "drops": drops,
        "baselines": {
            "comparison": "pre vs during",
            "scores": to_plain(scores),
            "skipped": skipped,
        },
        "stats": stats,
        "verdict": verdict,
    }


def run_analyze(config: RunConfig, dataset: Optional[Dataset] = None) -> DriftReport:
    """Run every configured event through the full pipeline.

    Raises:
        StageError: naming the failing stage (``ingest``, ``bin``, ``window``,
            ``metrics``, ``baselines``, ``stats`` or ``alerting``).
    """
    started = time.perf_counter()
    if not config.events:
        raise StageError("window", ValueError("no events configured"))
    if dataset is None:
        dataset = ingest(config)
    try:
        bins = assign_bins(dataset)
    except DriftError as exc:
        raise StageError("bin", exc) from exc
    skipped_fields = {
        "true_label": sum(1 for r in dataset.records if r.true_label is None),
        "text": sum(1 for r in dataset.records if r.text is None),
        "embedding": sum(1 for r in dataset.records if r.embedding is None),
        "class_probs": sum(1 for r in dataset.records if r.class_probs is None),
    }
    events = []
    for event in sorted(config.events, key=lambda e: e.event_name):
        log.info("analysing event %s", event.event_name)
        events.append(analyze_event(dataset, bins, event, config))
    return DriftReport(
        config=config.echo(),
        dataset={**dataset.metadata, "days": len(bins), "records_missing_field": skipped_fields},
        events=events,
        runtime_seconds=time.perf_counter() - started,
    )
