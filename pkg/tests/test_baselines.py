import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from zerodrift.baselines import (
    ALL_METHODS,
    BaselineError,
    centroid_drift,
    clustering_drift,
    js_divergence,
    ks_statistic,
    mmd_rbf,
    psi,
    score_windows,
    tfidf_vectorize,
    tokenize,
    wasserstein_1d,
)

import oracles
from helpers import rec

samples = st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=30)


def test_ks_examples():
    assert ks_statistic([1, 2, 3], [1, 2, 3]) == 0.0
    assert ks_statistic([1, 2], [3, 4]) == 1.0
    assert ks_statistic([1, 3], [2, 4]) == 0.5
    with pytest.raises(BaselineError):
        ks_statistic([], [1])


def test_psi_examples():
    ref = np.linspace(0, 1, 1000)
    assert psi(ref, ref) <= 1e-9
    beyond = ref + 5
    assert psi(ref, beyond) == pytest.approx(oracles.psi(list(ref), list(beyond)), abs=1e-9)
    assert psi(ref, beyond) > 5
    # all candidate mass inside the 4th decile of a uniform reference
    hand = (1 - 0.1) * math.log(1 / 0.1) + 9 * (1e-4 - 0.1) * math.log(1e-4 / 0.1)
    assert psi(ref, np.full(50, 0.35)) == pytest.approx(hand, abs=1e-9)
    with pytest.raises(BaselineError):
        psi(ref, ref, n_bins=1)


def test_wasserstein_examples():
    assert wasserstein_1d([1, 2, 2], [2, 1, 2]) == 0.0
    assert wasserstein_1d([0, 1], [1, 2]) == 1.0
    assert wasserstein_1d([0], [5]) == 5.0


def test_tfidf_examples():
    same = tfidf_vectorize(["good news today", "good news today"])
    assert same[0] == same[1]
    disjoint = tfidf_vectorize(["alpha beta", "gamma delta"])
    assert not set(disjoint[0]) & set(disjoint[1])
    toy = tfidf_vectorize(["apple banana", "apple cherry", "banana banana"])
    idf_shared = math.log(4 / 3) + 1
    idf_cherry = math.log(4 / 2) + 1
    norm = math.hypot(idf_shared, idf_cherry)
    assert toy[0] == pytest.approx({"apple": 1 / math.sqrt(2), "banana": 1 / math.sqrt(2)}, abs=1e-12)
    assert toy[1] == pytest.approx({"apple": idf_shared / norm, "cherry": idf_cherry / norm}, abs=1e-12)
    assert toy[2] == pytest.approx({"banana": 1.0}, abs=1e-12)
    with pytest.raises(BaselineError):
        tfidf_vectorize([])
    assert tokenize("It's a GOOD_day, 42!") == ["it", "good", "day", "42"]


@given(st.lists(st.text(min_size=1, max_size=40), min_size=1, max_size=10))
@settings(max_examples=100, deadline=None)
def test_tfidf_vectors_have_unit_norm(corpus):
    try:
        vectors = tfidf_vectorize(corpus)
    except BaselineError:
        return
    for v in vectors:
        if v:
            assert math.sqrt(sum(w * w for w in v.values())) == pytest.approx(1.0, abs=1e-9)


def test_centroid_examples():
    x = [[1.0, 2.0], [3.0, 1.0]]
    assert centroid_drift(x, x) == pytest.approx(0.0, abs=1e-12)
    assert centroid_drift([[1, 0]], [[0, 1]]) == pytest.approx(1.0)
    with pytest.raises(BaselineError, match="degenerate centroid"):
        centroid_drift([[1, 0], [-1, 0]], [[0, 1]])
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=(10, 4)), rng.normal(size=(10, 4))
    assert centroid_drift(a, b) == pytest.approx(oracles.centroid_distance(a.tolist(), b.tolist()), abs=1e-12)


def test_mmd_examples():
    x = [[0.0, 1.0], [2.0, 2.0], [0.0, 1.0]]
    assert mmd_rbf(x, [x[1], x[0], x[2]]) == pytest.approx(0.0, abs=1e-12)
    far = [[1e6], [1e6]]
    # an explicit unit bandwidth makes the cross-kernel vanish
    assert mmd_rbf([[0.0], [0.0]], far, sigma2=1.0) == pytest.approx(math.sqrt(2), abs=1e-12)
    # the median heuristic scales the bandwidth with the separation
    assert mmd_rbf([[0.0], [0.0]], far) == pytest.approx(math.sqrt(2 - 2 * math.exp(-0.5)), abs=1e-12)
    rng = np.random.default_rng(5)
    a, b = rng.normal(size=(5, 3)), rng.normal(size=(5, 3))
    assert mmd_rbf(a, b) == pytest.approx(oracles.mmd(a.tolist(), b.tolist()), abs=1e-12)
    with pytest.raises(BaselineError, match="dimensionality"):
        mmd_rbf([[0.0, 1.0]], [[0.0]])


def test_clustering_examples():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(30, 2))
    assert clustering_drift(x, x, k=3) == pytest.approx(0.0, abs=1e-9)
    blob_a = rng.normal(scale=0.01, size=(40, 2))
    blob_b = rng.normal(scale=0.01, size=(40, 2)) + 1.0
    score = clustering_drift(blob_a, blob_b, k=2)
    assert 1.0 - score < 1e-6
    assert clustering_drift(blob_a, blob_b, k=2, seed=7) == clustering_drift(blob_a, blob_b, k=2, seed=7)
    with pytest.raises(BaselineError):
        clustering_drift([[0.0]], [[1.0]], k=3)


def test_js_examples():
    assert js_divergence([0.2, 0.8], [0.2, 0.8]) == 0.0
    assert js_divergence([1, 0], [0, 1]) == 1.0
    assert js_divergence([0.5, 0.5], [0.9, 0.1]) == pytest.approx(oracles.js([0.5, 0.5], [0.9, 0.1]), abs=1e-15)
    with pytest.raises(BaselineError):
        js_divergence([0.5, 0.5], [1.0])


@given(samples, samples)
@settings(max_examples=150, deadline=None)
def test_symmetry_and_nonnegativity(a, b):
    assert ks_statistic(a, b) == ks_statistic(b, a)
    assert wasserstein_1d(a, b) == pytest.approx(wasserstein_1d(b, a), abs=1e-9)
    assert ks_statistic(a, b) >= 0 and wasserstein_1d(a, b) >= 0 and psi(a, b) >= 0
    xa, xb = [[v] for v in a], [[v] for v in b]
    assert mmd_rbf(xa, xb) == pytest.approx(mmd_rbf(xb, xa), abs=1e-12)
    if len(a) + len(b) >= 2:
        assert clustering_drift(xa, xb, k=2) == pytest.approx(clustering_drift(xb, xa, k=2), abs=1e-12)


@given(samples, samples, st.floats(0.01, 100))
@settings(max_examples=150, deadline=None)
def test_wasserstein_scales_linearly(a, b, c):
    a, b = np.array(a), np.array(b)
    assert wasserstein_1d(c * a, c * b) == pytest.approx(c * wasserstein_1d(a, b), rel=1e-9, abs=1e-9)


int_samples = st.lists(st.integers(-1000, 1000), min_size=1, max_size=30)


@given(int_samples, int_samples)
def test_ks_invariant_under_monotone_maps(a, b):
    # integer support keeps both maps strictly monotone in floating point
    a, b = np.array(a, dtype=float), np.array(b, dtype=float)
    assert ks_statistic(np.arctan(a), np.arctan(b)) == pytest.approx(ks_statistic(a, b), abs=1e-12)
    assert ks_statistic(a**3, b**3) == pytest.approx(ks_statistic(a, b), abs=1e-12)
    assert ks_statistic(-a, -b) == pytest.approx(ks_statistic(a, b), abs=1e-12)


@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=8), st.data())
def test_js_symmetric_and_bounded(raw_p, data):
    raw_q = data.draw(st.lists(st.floats(0.0, 1.0), min_size=len(raw_p), max_size=len(raw_p)))
    assume(sum(raw_p) > 0 and sum(raw_q) > 0)
    p = np.array(raw_p) / sum(raw_p)
    q = np.array(raw_q) / sum(raw_q)
    assert js_divergence(p, q) == pytest.approx(js_divergence(q, p), abs=1e-12)
    assert 0.0 <= js_divergence(p, q) <= 1.0


def test_identical_windows_score_zero_for_every_method():
    records = [
        rec("positive", 0.5 + i / 100, text=f"tok{i % 7} word{i % 3}", embedding=(float(i % 5), float(i % 4)))
        for i in range(40)
    ]
    scores, skipped = score_windows(records, records, ALL_METHODS, kmeans_k=3)
    assert not skipped
    assert {s.method for s in scores} == set(ALL_METHODS)
    for s in scores:
        assert s.score == pytest.approx(0.0, abs=1e-9), s.method
    psi_score = next(s for s in scores if s.method == "psi")
    assert psi_score.details["n_bins"] == 10 and psi_score.details["epsilon"] == 1e-4


def test_score_windows_skips_missing_inputs():
    plain = [rec("positive", 0.9 - i / 100) for i in range(10)]
    scores, skipped = score_windows(plain, plain[:5], ALL_METHODS)
    assert {s.method for s in scores} == {"ks", "psi", "wasserstein"}
    assert set(skipped) == {"tfidf_centroid", "mmd", "clustering_js"}
    with pytest.raises(BaselineError):
        score_windows(plain, plain, ["bogus"])
