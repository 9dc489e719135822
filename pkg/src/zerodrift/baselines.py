"""Comparison drift detectors: two-sample statistics and embedding distances.

Statistical baselines (KS, PSI, Wasserstein) compare record-level confidence
samples. Embedding baselines compare document vectors: TF-IDF vectors built
from record text, or precomputed embeddings carried on the records.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .model import DriftError, PredictionRecord
from .rng import CounterRNG

PSI_EPS = 1e-4
JS_EPS = 1e-9
STAT_METHODS = ("ks", "psi", "wasserstein")
EMBEDDING_METHODS = ("tfidf_centroid", "mmd", "clustering_js")
ALL_METHODS = STAT_METHODS + EMBEDDING_METHODS

_TOKEN = re.compile(r"[^\W_]+")


class BaselineError(DriftError, ValueError):
    pass


@dataclass(frozen=True)
class BaselineScore:
    method: str
    score: float
    details: dict = field(default_factory=dict)


def _sample(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise BaselineError(f"{name} sample is empty")
    return arr


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov D = sup |ECDF_a - ECDF_b|."""
    a = np.sort(_sample(a, "first"))
    b = np.sort(_sample(b, "second"))
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def quantile_edges(reference, n_bins: int = 10) -> np.ndarray:
    """Interior bin edges at the reference's ``i / n_bins`` quantiles (duplicates dropped)."""
    if n_bins < 2:
        raise BaselineError("n_bins must be at least 2")
    ref = _sample(reference, "reference")
    qs = np.arange(1, n_bins) / n_bins
    return np.unique(np.quantile(ref, qs))


def psi(reference, candidate, n_bins: int = 10, eps: float = PSI_EPS) -> float:
    """Population Stability Index of ``candidate`` against ``reference``.

    Bins are right-closed intervals between reference quantiles, open-ended at
    both extremes. Proportions are floored at ``eps`` before the log ratio.
    Not symmetric: the reference defines the bins.
    """
    ref = _sample(reference, "reference")
    cand = _sample(candidate, "candidate")
    edges = quantile_edges(ref, n_bins)
    k = edges.size + 1
    p_ref = np.bincount(np.searchsorted(edges, ref, side="left"), minlength=k) / ref.size
    p_cand = np.bincount(np.searchsorted(edges, cand, side="left"), minlength=k) / cand.size
    p_ref = np.maximum(p_ref, eps)
    p_cand = np.maximum(p_cand, eps)
    return float(np.sum((p_cand - p_ref) * np.log(p_cand / p_ref)))


def wasserstein_1d(a, b) -> float:
    """W1 distance: integral of |ECDF_a - ECDF_b| over the merged support."""
    a = np.sort(_sample(a, "first"))
    b = np.sort(_sample(b, "second"))
    grid = np.sort(np.concatenate([a, b]))
    widths = np.diff(grid)
    fa = np.searchsorted(a, grid[:-1], side="right") / a.size
    fb = np.searchsorted(b, grid[:-1], side="right") / b.size
    return float(np.sum(np.abs(fa - fb) * widths))


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN.findall(text.lower()) if len(t) >= 2]


def tfidf_vectorize(corpus: Sequence[str]) -> list[dict[str, float]]:
    """Sparse L2-normalised TF-IDF vectors with smoothed idf.

    tf is the raw count and ``idf = ln((1 + N) / (1 + df)) + 1``. A document
    without tokens maps to an empty (zero) vector.
    """
    if not corpus:
        raise BaselineError("empty corpus")
    docs = [Counter(tokenize(text or "")) for text in corpus]
    df = Counter()
    for counts in docs:
        df.update(counts.keys())
    if not df:
        raise BaselineError("corpus has no tokens")
    n = len(docs)
    idf = {term: math.log((1 + n) / (1 + d)) + 1.0 for term, d in df.items()}
    vectors = []
    for counts in docs:
        weights = {t: c * idf[t] for t, c in counts.items()}
        norm = math.sqrt(math.fsum(w * w for w in weights.values()))
        vectors.append({t: w / norm for t, w in sorted(weights.items())} if norm else {})
    return vectors


def densify(vectors: Sequence[Mapping[str, float]], vocabulary: Optional[Sequence[str]] = None) -> np.ndarray:
    if vocabulary is None:
        vocabulary = sorted({t for v in vectors for t in v})
    column = {t: i for i, t in enumerate(vocabulary)}
    out = np.zeros((len(vectors), len(vocabulary)))
    for row, vec in enumerate(vectors):
        for term, w in vec.items():
            out[row, column[term]] = w
    return out


def _matrix(vectors, name: str) -> np.ndarray:
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise BaselineError(f"{name} must be a non-empty list of vectors")
    return arr


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    if len(x) and isinstance(x[0], Mapping):
        vocab = sorted({t for v in list(x) + list(y) for t in v})
        return densify(x, vocab), densify(y, vocab)
    x, y = _matrix(x, "first window"), _matrix(y, "second window")
    if x.shape[1] != y.shape[1]:
        raise BaselineError(f"dimensionality mismatch: {x.shape[1]} vs {y.shape[1]}")
    return x, y


def centroid_drift(pre_vecs, post_vecs) -> float:
    """Cosine distance ``1 - cos`` between the two window centroids."""
    x, y = _pair(pre_vecs, post_vecs)
    cx, cy = x.mean(axis=0), y.mean(axis=0)
    nx, ny = np.linalg.norm(cx), np.linalg.norm(cy)
    if nx == 0 or ny == 0:
        raise BaselineError("degenerate centroid")
    return float(max(1.0 - np.dot(cx, cy) / (nx * ny), 0.0))


def median_sq_distance(points: np.ndarray) -> float:
    """Median of the nonzero pairwise squared distances; 1.0 if there are none."""
    d = cdist(points, points, "sqeuclidean")
    upper = d[np.triu_indices(points.shape[0], k=1)]
    upper = upper[upper > 0]
    return float(np.median(upper)) if upper.size else 1.0


def mmd_rbf(x, y, sigma2: Optional[float] = None) -> float:
    """Biased (V-statistic) MMD with an RBF kernel, returned as sqrt(max(MMD^2, 0)).

    ``k(u, v) = exp(-|u - v|^2 / (2 sigma2))``; when ``sigma2`` is None the
    median heuristic over the pooled sample sets it.
    """
    x, y = _pair(x, y)
    if sigma2 is None:
        sigma2 = median_sq_distance(np.vstack([x, y]))
    gamma = 1.0 / (2.0 * sigma2)
    kxx = np.exp(-gamma * cdist(x, x, "sqeuclidean")).mean()
    kyy = np.exp(-gamma * cdist(y, y, "sqeuclidean")).mean()
    kxy = np.exp(-gamma * cdist(x, y, "sqeuclidean")).mean()
    return float(math.sqrt(max(kxx + kyy - 2.0 * kxy, 0.0)))


def kmeans(points: np.ndarray, k: int, seed: int, max_iter: int = 100, tol: float = 1e-6):
    """Lloyd's k-means with seeded farthest-point initialisation.

    The first centre is a uniformly drawn point; each further centre is the
    point farthest from the centres chosen so far (lowest index on ties).
    Empty clusters keep their previous centre.

    Returns:
        (centroids, labels, iterations)
    """
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    if k < 2:
        raise BaselineError("k must be at least 2")
    if k > n:
        raise BaselineError(f"k={k} exceeds the {n} pooled points")
    first = int(CounterRNG(seed).integers(n, 1)[0])
    chosen = [first]
    nearest = np.sum((pts - pts[first]) ** 2, axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, np.sum((pts - pts[nxt]) ** 2, axis=1))
    centroids = pts[chosen].copy()
    labels = np.zeros(n, dtype=np.int64)
    it = 0
    for it in range(1, max_iter + 1):
        dist = np.sum((pts[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        labels = np.argmin(dist, axis=1)
        updated = centroids.copy()
        for j in range(k):
            members = pts[labels == j]
            if len(members):
                updated[j] = members.mean(axis=0)
        shift = float(np.max(np.sqrt(np.sum((updated - centroids) ** 2, axis=1))))
        centroids = updated
        if shift <= tol:
            break
    dist = np.sum((pts[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
    return centroids, np.argmin(dist, axis=1), it


def js_divergence(p, q) -> float:
    """Jensen-Shannon divergence in bits, in [0, 1]."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise BaselineError(f"support size mismatch: {p.size} vs {q.size}")
    if np.any(p < 0) or np.any(q < 0):
        raise BaselineError("negative probability")
    if abs(p.sum() - 1.0) > 1e-9 or abs(q.sum() - 1.0) > 1e-9:
        raise BaselineError("distributions must sum to 1")
    m = 0.5 * (p + q)

    def kl(a):
        nz = a > 0
        return float(np.sum(a[nz] * np.log2(a[nz] / m[nz])))

    return float(min(max(0.5 * kl(p) + 0.5 * kl(q), 0.0), 1.0))


def clustering_drift(x, y, k: int = 5, seed: int = 42, eps: float = JS_EPS) -> float:
    """JS divergence between the two windows' k-means cluster-occupancy distributions.

    The pooled sample is put into lexicographic row order before clustering so
    the result does not depend on which window is passed first.
    """
    x, y = _pair(x, y)
    pooled = np.vstack([x, y])
    origin = np.concatenate([np.zeros(len(x), dtype=bool), np.ones(len(y), dtype=bool)])
    order = np.lexsort(pooled.T[::-1])
    _, labels, _ = kmeans(pooled[order], k, seed)
    origin = origin[order]
    p = np.bincount(labels[~origin], minlength=k) / len(x)
    q = np.bincount(labels[origin], minlength=k) / len(y)
    p = (p + eps) / (1.0 + k * eps)
    q = (q + eps) / (1.0 + k * eps)
    return js_divergence(p, q)


def score_windows(
    reference: Sequence[PredictionRecord],
    candidate: Sequence[PredictionRecord],
    methods: Sequence[str] = ALL_METHODS,
    psi_bins: int = 10,
    kmeans_k: int = 5,
    seed: int = 42,
) -> tuple[list[BaselineScore], dict[str, str]]:
    """Run the selected baselines on two windows of records.

    Records lacking the field a method needs (text, embedding) are skipped and
    counted in that method's details. Methods that cannot run at all are
    returned in the second mapping with the reason.
    """
    unknown = [m for m in methods if m not in ALL_METHODS]
    if unknown:
        raise BaselineError(f"unknown baseline methods {unknown}")
    scores: list[BaselineScore] = []
    skipped: dict[str, str] = {}
    conf_ref = [r.confidence for r in reference]
    conf_cand = [r.confidence for r in candidate]
    for method in methods:
        try:
            if method == "ks":
                scores.append(BaselineScore("ks", ks_statistic(conf_ref, conf_cand), {"feature": "confidence"}))
            elif method == "psi":
                edges = quantile_edges(conf_ref, psi_bins)
                scores.append(
                    BaselineScore(
                        "psi",
                        psi(conf_ref, conf_cand, psi_bins),
                        {
                            "feature": "confidence",
                            "n_bins": psi_bins,
                            "effective_bins": int(edges.size + 1),
                            "epsilon": PSI_EPS,
                            "bin_edges": [float(e) for e in edges],
                        },
                    )
                )
            elif method == "wasserstein":
                scores.append(
                    BaselineScore("wasserstein", wasserstein_1d(conf_ref, conf_cand), {"feature": "confidence"})
                )
            elif method == "tfidf_centroid":
                ref_txt = [r.text for r in reference if r.text is not None]
                cand_txt = [r.text for r in candidate if r.text is not None]
                missing = len(reference) + len(candidate) - len(ref_txt) - len(cand_txt)
                if not ref_txt or not cand_txt:
                    skipped[method] = "no text in one of the windows"
                    continue
                vecs = tfidf_vectorize(ref_txt + cand_txt)
                score = centroid_drift(vecs[: len(ref_txt)], vecs[len(ref_txt) :])
                vocab = {t for v in vecs for t in v}
                scores.append(
                    BaselineScore(
                        method,
                        score,
                        {"vocabulary_size": len(vocab), "skipped_records": missing, "idf": "ln((1+N)/(1+df))+1"},
                    )
                )
            elif method in ("mmd", "clustering_js"):
                ref_emb = [r.embedding for r in reference if r.embedding is not None]
                cand_emb = [r.embedding for r in candidate if r.embedding is not None]
                missing = len(reference) + len(candidate) - len(ref_emb) - len(cand_emb)
                if not ref_emb or not cand_emb:
                    skipped[method] = "no embeddings in one of the windows"
                    continue
                if method == "mmd":
                    x, y = _pair(ref_emb, cand_emb)
                    sigma2 = median_sq_distance(np.vstack([x, y]))
                    scores.append(
                        BaselineScore(
                            method,
                            mmd_rbf(x, y, sigma2),
                            {"estimator": "biased_v_statistic", "sigma2": sigma2, "skipped_records": missing},
                        )
                    )
                else:
                    if len(ref_emb) + len(cand_emb) < kmeans_k:
                        skipped[method] = f"fewer than k={kmeans_k} embedded records"
                        continue
                    scores.append(
                        BaselineScore(
                            method,
                            clustering_drift(ref_emb, cand_emb, kmeans_k, seed),
                            {
                                "k": kmeans_k,
                                "seed": seed,
                                "max_iter": 100,
                                "tol": 1e-6,
                                "epsilon": JS_EPS,
                                "skipped_records": missing,
                            },
                        )
                    )
        except BaselineError as exc:
            skipped[method] = str(exc)
    return scores, skipped
