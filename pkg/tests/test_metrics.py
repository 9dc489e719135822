import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zerodrift.metrics import (
    MetricUnavailableError,
    bin_summary,
    confidence_entropy_divergence,
    confidence_stability,
    max_drop,
    metric_series,
    prediction_consistency,
    sentiment_transition_rate,
    series_to_csv,
    shannon_entropy,
    weighted_mean,
)
from zerodrift.temporal import EventWindows, assign_bins

import oracles
from helpers import LABELS, day_records, rec

POS, NEG, NEU = "positive", "negative", "neutral"


def recs(labels, confs=None):
    return [rec(lab, c) for lab, c in zip(labels, confs or [0.9] * len(labels))]


def test_pcs_examples():
    assert prediction_consistency(recs([POS] * 5)) == 1.0
    assert prediction_consistency(recs([POS, NEG, NEU])) == pytest.approx(1 / 3)
    assert prediction_consistency(recs([POS, POS, NEG, NEU, POS])) == pytest.approx(0.6)


def test_csi_examples():
    assert confidence_stability(recs([POS] * 4, [0.8] * 4)) == 0.0
    assert confidence_stability(recs([POS, POS], [0.5, 1.0])) == pytest.approx(1 / 3, abs=1e-15)
    assert confidence_stability(recs([POS], [0.7])) == 0.0


def test_str_examples():
    assert sentiment_transition_rate(recs([POS] * 3)) == 0.0
    assert sentiment_transition_rate(recs([POS, NEG, POS, NEG])) == 1.0
    assert sentiment_transition_rate(recs([POS, POS, NEG, NEG, POS])) == 0.5
    assert sentiment_transition_rate(recs([POS])) is None


def test_entropy_examples():
    assert shannon_entropy({"positive": 1.0}) == 0.0
    assert shannon_entropy([0.5, 0.5]) == 1.0
    assert round(shannon_entropy([1 / 3] * 3), 5) == 1.58496
    with pytest.raises(ValueError):
        shannon_entropy([1.2, -0.2])


def test_ced_examples():
    assert confidence_entropy_divergence(recs([POS] * 4, [0.1, 0.5, 0.7, 1.0])) == 0.0
    assert confidence_entropy_divergence(recs([POS, NEG], [1.0, 1.0])) == 1.0
    assert round(confidence_entropy_divergence(recs([POS, NEG, NEU], [0.8] * 3)), 5) == 1.26797


def test_bin_summary_accuracy_and_probs():
    labeled = [rec(POS, 0.9, truth=POS), rec(NEG, 0.8, truth=NEG)]
    assert bin_summary(labeled).accuracy == 1.0
    assert bin_summary(recs([POS, NEG])).accuracy is None
    mixed = [rec(POS, 0.6, truth=NEG), rec(POS, 0.6), rec(POS, 0.6, class_probs={POS: 0.6, NEG: 0.4})]
    s = bin_summary(mixed)
    assert s.accuracy == 0.0 and s.n_labeled == 1
    assert s.prediction_entropy_mean == pytest.approx(-(0.6 * math.log2(0.6) + 0.4 * math.log2(0.4)))


def random_bin(rng: random.Random, max_n=200):
    n = rng.randint(1, max_n)
    labels = [rng.choice(LABELS.labels) for _ in range(n)]
    confs = [rng.uniform(0.34, 1.0) for _ in range(n)]
    truths = [rng.choice(LABELS.labels + (None,)) for _ in range(n)]
    return labels, confs, truths


def assert_matches_oracle(labels, confs, truths, tol=1e-12):
    got = bin_summary([rec(l, c, truth=t) for l, c, t in zip(labels, confs, truths)], LABELS)
    want = oracles.bin_fields(labels, confs, truths)
    for key, value in want.items():
        actual = getattr(got, key)
        if value is None:
            assert actual is None, key
        else:
            assert actual == pytest.approx(value, abs=tol, rel=0), key


def test_bin_summary_matches_oracle():
    rng = random.Random(11)
    for _ in range(100):
        assert_matches_oracle(*random_bin(rng))


label_lists = st.lists(st.sampled_from(LABELS.labels), min_size=1, max_size=60)


@given(label_lists, st.data())
@settings(max_examples=200, deadline=None)
def test_metric_invariants(labels, data):
    confs = data.draw(st.lists(st.floats(0.34, 1.0), min_size=len(labels), max_size=len(labels)))
    s = bin_summary(recs(labels, confs))
    k = len(LABELS)
    assert 1 / k - 1e-12 <= s.pcs <= 1.0
    assert s.ced <= s.mean_confidence * math.log2(k) + 1e-12
    assert (s.ced == 0.0) == (len(set(labels)) == 1)
    assert (s.str_ is None) == (len(labels) < 2)

    relabel = dict(zip(LABELS.labels, data.draw(st.permutations(LABELS.labels))))
    renamed = bin_summary(recs([relabel[l] for l in labels], confs))
    assert renamed.str_ == s.str_ and renamed.pcs == s.pcs

    order = data.draw(st.permutations(range(len(labels))))
    shuffled = bin_summary(recs([labels[i] for i in order], [confs[i] for i in order]))
    for key in ("pcs", "csi", "ced", "mean_confidence"):
        assert getattr(shuffled, key) == pytest.approx(getattr(s, key), abs=1e-12)


def windows_from_days(pre, during, post=()):
    """Build windows from per-day (labels, confs, truths) tuples."""
    days = list(pre) + list(during) + list(post)
    records = [r for i, spec in enumerate(days) for r in day_records(i, *spec)]
    bins = assign_bins(records)
    a, b = len(pre), len(pre) + len(during)
    return EventWindows(tuple(bins[:a]), tuple(bins[a:b]), tuple(bins[b:]), "e")


def accuracy_day(n, correct):
    return ([POS] * n, [0.9] * n, [POS] * correct + [NEG] * (n - correct))


def test_max_drop_accuracy_headline():
    w = windows_from_days([accuracy_day(1000, 900)] * 3, [accuracy_day(1000, 666)], [accuracy_day(1000, 880)])
    d = max_drop(w, "accuracy")
    assert d.baseline_value == pytest.approx(0.9)
    assert d.worst_window_value == pytest.approx(0.666)
    assert d.drop_points == pytest.approx(23.4, abs=1e-9)
    assert d.worst_day == w.during[0].day


def test_max_drop_confidence_headline():
    pre = [([POS] * 10, [0.85] * 10, None)] * 3
    w = windows_from_days(pre, [([POS] * 10, [0.719] * 10, None)])
    assert max_drop(w, "mean_confidence").drop_points == pytest.approx(13.1, abs=1e-9)


def test_max_drop_constant_and_ties():
    day = ([POS] * 6, [0.8] * 6, None)
    w = windows_from_days([day] * 2, [day] * 2, [day])
    d = max_drop(w, "mean_confidence")
    assert d.drop_points == pytest.approx(0.0, abs=1e-12)
    assert d.worst_day == w.during[0].day  # earliest on ties


def test_max_drop_weights_baseline_by_records():
    pre = [accuracy_day(10, 10), accuracy_day(30, 15)]
    w = windows_from_days(pre, [accuracy_day(10, 5)])
    assert max_drop(w, "accuracy").baseline_value == pytest.approx(25 / 40)


def test_max_drop_increase_direction_and_errors():
    pre = [([POS] * 5 + [NEG] * 5, [0.9] * 10, None)] * 2
    during = [([POS, NEG] * 5, [0.9] * 10, None)]
    w = windows_from_days(pre, during)
    up = max_drop(w, "str", direction="increase")
    assert up.drop_points == pytest.approx((1.0 - 1 / 9) * 100)
    assert up.metric_name == "str"
    with pytest.raises(MetricUnavailableError, match="metric unavailable"):
        max_drop(w, "accuracy")


def test_series_skips_small_days_and_exports_csv():
    bins = assign_bins(day_records(0, [POS] * 3) + day_records(1, [POS, NEG] * 3))
    series = metric_series(bins, LABELS, min_bin_size=5)
    assert [s.n for s in series] == [6]
    lines = series_to_csv(series).splitlines()
    assert lines[0].startswith("day,n,mean_confidence")
    assert len(lines) == 2
    assert weighted_mean(series, "accuracy") is None
