from __future__ import annotations

from datetime import date, datetime, timezone

from zerodrift.model import LabelSet, PredictionRecord
from zerodrift.synth import DriftSpec, SynthConfig

LABELS = LabelSet(("negative", "neutral", "positive"))
DAY0 = int(datetime(2020, 1, 1, tzinfo=timezone.utc).timestamp())


def rec(label="positive", conf=0.9, ts=DAY0, truth=None, **kw) -> PredictionRecord:
    return PredictionRecord(timestamp=ts, predicted_label=label, confidence=conf, true_label=truth, **kw)


def day_records(day: int, labels, confs=None, truths=None) -> list[PredictionRecord]:
    confs = confs if confs is not None else [0.9] * len(labels)
    truths = truths if truths is not None else [None] * len(labels)
    base = DAY0 + day * 86400
    return [
        rec(lab, c, base + 60 * i, t) for i, (lab, c, t) in enumerate(zip(labels, confs, truths))
    ]


def event_stream_config(seed: int, drift: DriftSpec = DriftSpec(), **overrides) -> SynthConfig:
    """35-day stream whose three event days carry a traffic surge.

    Baseline days hold 300 records and event days 4000, so a null stream
    shares exactly the same volume profile as a drifted one.
    """
    counts = [300] * 35
    for d in (17, 18, 19):
        counts[d] = 4000
    params = dict(
        n_days=35,
        records_per_day=tuple(counts),
        baseline_label_probs=(0.25, 0.25, 0.5),
        event_start=17,
        event_end=19,
        drift=drift,
        seed=seed,
        emit_text=False,
    )
    params.update(overrides)
    return SynthConfig(**params)


def as_date(s: str) -> date:
    return date.fromisoformat(s)
