"""Synthetic prediction streams with injected, known drift.

Each day draws true labels from a categorical distribution, marks a record
correct with probability equal to the target accuracy (otherwise it predicts
one of the other labels uniformly), and draws confidence from a normal clamped
to ``[1/K, 1]`` (an argmax probability can never fall below ``1/K``). Inside the
event window the drift parameters are added on top of the baseline ones.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from datetime import date, datetime, timedelta, timezone
from typing import Optional, Sequence, Union

import numpy as np

from .model import Dataset, DriftError, LabelSet, PredictionRecord
from .rng import CounterRNG, derive_seed

DEFAULT_LABELS = ("negative", "neutral", "positive")


class SynthConfigError(DriftError, ValueError):
    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass(frozen=True)
class DriftSpec:
    confidence_delta: float = 0.0
    accuracy_delta: float = 0.0
    label_shift: Optional[tuple[float, ...]] = None  # replaces the label distribution
    transition_boost: float = 0.0
    vocab_shift: float = 0.0  # share of tokens drawn from an unseen vocabulary


@dataclass(frozen=True)
class SynthConfig:
    n_days: int = 60
    records_per_day: Union[int, tuple[int, ...]] = 50
    labels: tuple[str, ...] = DEFAULT_LABELS
    baseline_confidence_mean: float = 0.85
    baseline_confidence_std: float = 0.08
    baseline_label_probs: Optional[tuple[float, ...]] = None
    baseline_accuracy: float = 0.9
    event_start: int = 30
    event_end: int = 36
    drift: DriftSpec = field(default_factory=DriftSpec)
    seed: int = 42
    start_date: str = "2020-01-01"
    emit_text: bool = True
    tokens_per_record: int = 8
    vocab_size: int = 200
    embedding_dim: int = 0
    emit_class_probs: bool = False

    @property
    def label_set(self) -> LabelSet:
        return LabelSet(tuple(self.labels))

    def day_counts(self) -> list[int]:
        if isinstance(self.records_per_day, int):
            return [self.records_per_day] * self.n_days
        return [int(c) for c in self.records_per_day]

    def label_probs(self) -> np.ndarray:
        if self.baseline_label_probs is None:
            return np.full(len(self.labels), 1.0 / len(self.labels))
        return np.asarray(self.baseline_label_probs, dtype=np.float64)

    @classmethod
    def from_dict(cls, data: dict) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise SynthConfigError(sorted(unknown)[0], "unknown synth option")
        data = dict(data)
        drift = data.pop("drift", None) or {}
        drift_known = {f.name for f in fields(DriftSpec)}
        if set(drift) - drift_known:
            raise SynthConfigError("drift." + sorted(set(drift) - drift_known)[0], "unknown drift option")
        if drift.get("label_shift") is not None:
            drift["label_shift"] = tuple(drift["label_shift"])
        for key in ("labels", "baseline_label_probs"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        if isinstance(data.get("records_per_day"), list):
            data["records_per_day"] = tuple(data["records_per_day"])
        return cls(drift=DriftSpec(**drift), **data)

    def to_dict(self) -> dict:
        return asdict(self)


def _check_probs(name: str, probs, k: int) -> None:
    arr = np.asarray(probs, dtype=np.float64)
    if arr.shape != (k,):
        raise SynthConfigError(name, f"needs {k} probabilities")
    if np.any(arr < 0) or abs(arr.sum() - 1.0) > 1e-9:
        raise SynthConfigError(name, "must be non-negative and sum to 1")


def validate_config(cfg: SynthConfig) -> None:
    try:
        LabelSet(tuple(cfg.labels))
    except ValueError as exc:
        raise SynthConfigError("labels", str(exc)) from None
    k = len(cfg.labels)
    if cfg.n_days < 1:
        raise SynthConfigError("n_days", "must be positive")
    counts = cfg.day_counts()
    if len(counts) != cfg.n_days or any(c < 0 for c in counts):
        raise SynthConfigError("records_per_day", "needs one non-negative count per day")
    if not 0 <= cfg.event_start <= cfg.event_end < cfg.n_days:
        raise SynthConfigError("event_start", "event window must lie within [0, n_days)")
    if cfg.baseline_confidence_std < 0:
        raise SynthConfigError("baseline_confidence_std", "must be non-negative")
    for name, value in (
        ("baseline_confidence_mean", cfg.baseline_confidence_mean),
        ("drift.confidence_delta", cfg.baseline_confidence_mean + cfg.drift.confidence_delta),
    ):
        if not 0 < value <= 1:
            raise SynthConfigError(name, "confidence mean must stay in (0, 1]")
    for name, value in (
        ("baseline_accuracy", cfg.baseline_accuracy),
        ("drift.accuracy_delta", cfg.baseline_accuracy + cfg.drift.accuracy_delta),
    ):
        if not 0 <= value <= 1:
            raise SynthConfigError(name, "accuracy must stay in [0, 1]")
    _check_probs("baseline_label_probs", cfg.label_probs(), k)
    if cfg.drift.label_shift is not None:
        _check_probs("drift.label_shift", cfg.drift.label_shift, k)
    for name in ("transition_boost", "vocab_shift"):
        if not 0 <= getattr(cfg.drift, name) <= 1:
            raise SynthConfigError(f"drift.{name}", "must be in [0, 1]")
    if cfg.emit_text and (cfg.tokens_per_record < 1 or cfg.vocab_size < 1):
        raise SynthConfigError("tokens_per_record", "text generation needs tokens and a vocabulary")
    if cfg.embedding_dim < 0:
        raise SynthConfigError("embedding_dim", "must be non-negative")


def _boost_transitions(labels: np.ndarray, boost: float, rng: CounterRNG, k: int) -> np.ndarray:
    """Relabel a record to differ from its predecessor with probability ``boost``."""
    n = labels.size
    u = rng.uniform(n)
    offset = 1 + rng.integers(k - 1, n)
    out = labels.copy()
    for i in range(1, n):
        if out[i] == out[i - 1] and u[i] < boost:
            out[i] = (out[i - 1] + offset[i]) % k
    return out


def generate_stream(config: SynthConfig, name: str = "synthetic") -> Dataset:
    """Draw a deterministic prediction stream from ``config``."""
    validate_config(config)
    cfg = config
    labels = tuple(cfg.labels)
    k = len(labels)
    label_set = LabelSet(labels)
    rng = CounterRNG(cfg.seed)
    start = datetime.combine(date.fromisoformat(cfg.start_date), datetime.min.time(), tzinfo=timezone.utc)
    start_ts = int(start.timestamp())
    base_probs = cfg.label_probs()

    centres = None
    churn_dir = None
    if cfg.embedding_dim:
        geo = CounterRNG(derive_seed(cfg.seed, "synth:embedding-geometry"))
        centres = geo.normal((k, cfg.embedding_dim)) * 2.0
        churn_dir = geo.normal(cfg.embedding_dim) * 2.0

    records: list[PredictionRecord] = []
    for day, n in enumerate(cfg.day_counts()):
        if n == 0:
            continue
        active = cfg.event_start <= day <= cfg.event_end
        drift = cfg.drift if active else DriftSpec()
        probs = np.asarray(drift.label_shift) if drift.label_shift is not None else base_probs
        accuracy = cfg.baseline_accuracy + drift.accuracy_delta
        conf_mean = cfg.baseline_confidence_mean + drift.confidence_delta

        seconds = np.sort(rng.integers(86400, n))
        truth = rng.categorical(probs, n)
        if drift.transition_boost > 0:
            truth = _boost_transitions(truth, drift.transition_boost, rng, k)
        correct = rng.uniform(n) < accuracy
        wrong = (truth + 1 + rng.integers(k - 1, n)) % k
        pred = np.where(correct, truth, wrong)
        conf = np.clip(conf_mean + cfg.baseline_confidence_std * rng.normal(n), 1.0 / k, 1.0)

        texts: Sequence[Optional[str]] = [None] * n
        if cfg.emit_text:
            tok_ids = rng.integers(cfg.vocab_size, (n, cfg.tokens_per_record))
            churned = rng.uniform((n, cfg.tokens_per_record)) < drift.vocab_shift
            label_tok = rng.integers(10, n)
            texts = [
                " ".join(
                    [f"s{truth[i]}t{label_tok[i]}"]
                    + [("e" if churned[i, j] else "w") + str(tok_ids[i, j]) for j in range(cfg.tokens_per_record)]
                )
                for i in range(n)
            ]
        embeddings: Sequence[Optional[tuple]] = [None] * n
        if cfg.embedding_dim:
            noise = rng.normal((n, cfg.embedding_dim))
            shifted = rng.uniform(n) < drift.vocab_shift
            emb = centres[truth] + noise + np.outer(shifted, churn_dir)
            embeddings = [tuple(float(v) for v in row) for row in emb]

        day_ts = start_ts + day * 86400
        for i in range(n):
            c = float(conf[i])
            p_lab = labels[pred[i]]
            probs_map = None
            if cfg.emit_class_probs:
                rest = (1.0 - c) / (k - 1)
                probs_map = {lab: (c if lab == p_lab else rest) for lab in labels}
            records.append(
                PredictionRecord(
                    timestamp=day_ts + int(seconds[i]),
                    predicted_label=p_lab,
                    confidence=c,
                    class_probs=probs_map,
                    true_label=labels[truth[i]],
                    embedding=embeddings[i],
                    text=texts[i],
                )
            )
    if not records:
        raise SynthConfigError("records_per_day", "generated no records")
    return Dataset(
        records=tuple(records),
        label_set=label_set,
        name=name,
        embedding_dim=cfg.embedding_dim or None,
    )


def event_dates(config: SynthConfig) -> tuple[date, date]:
    """Calendar dates of the first and last event day."""
    start = date.fromisoformat(config.start_date)
    return start + timedelta(days=config.event_start), start + timedelta(days=config.event_end)
