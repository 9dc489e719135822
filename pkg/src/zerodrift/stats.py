"""Statistical validation: bootstrap CIs, effect sizes, FDR control, ANOVA,
permutation p-values and correlation.

All resampling draws come from :mod:`zerodrift.rng`, addressed by
``(seed, replicate index)``, so results are reproducible bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .model import DriftError
from .rng import CounterRNG

DEFAULT_ITERATIONS = 1000
DEFAULT_SEED = 42
DEFAULT_LEVEL = 0.95
DEFAULT_ALPHA = 0.05
DEFAULT_PERMUTATIONS = 10000

# Upper-exclusive bands on |d|: negligible < 0.2 <= small < 0.5 <= medium < 0.8 <= large
EFFECT_BANDS = ((0.2, "negligible"), (0.5, "small"), (0.8, "medium"))

_CHUNK_CELLS = 2_000_000


class DegenerateGroupsError(DriftError, ValueError):
    pass


@dataclass(frozen=True)
class BootstrapCI:
    statistic_name: str
    point_estimate: float
    lower: float
    upper: float
    level: float
    iterations: int
    seed: int
    method: str = "percentile"
    contains_point: bool = True


@dataclass(frozen=True)
class EffectSizeReport:
    cohens_d: float
    glass_delta: Optional[float]
    hedges_g: float
    cliffs_delta: float
    classification: dict
    n_a: int
    n_b: int


def _array(values, name: str, min_size: int = 1) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size < min_size:
        raise ValueError(f"{name} needs at least {min_size} values, got {arr.size}")
    return arr


def _row_chunks(rows: int, cols: int):
    step = max(1, _CHUNK_CELLS // max(cols, 1))
    for start in range(0, rows, step):
        yield start, min(rows, start + step)


def bootstrap_ci(
    samples: Sequence[float],
    statistic: Union[str, Callable[[np.ndarray], np.ndarray]] = "mean",
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = DEFAULT_SEED,
    level: float = DEFAULT_LEVEL,
    reference: Optional[float] = None,
) -> BootstrapCI:
    """Percentile bootstrap confidence interval.

    Replicate ``i`` resamples ``n`` indices with replacement using counters
    ``[i*n, (i+1)*n)`` of the seeded stream. The interval ends are the
    ``(1-level)/2`` and ``1-(1-level)/2`` quantiles of the replicates with
    linear interpolation.

    Args:
        statistic: ``"mean"``; ``"drop_points"``, meaning
            ``(reference - mean) * 100``, which requires ``reference``; or a
            callable mapping a ``(replicates, n)`` array to ``(replicates,)``.
    """
    x = _array(samples, "samples", 2)
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    shift = float(x[0])

    def mean(m):
        # averaging deviations from a sample value keeps constant data exact
        return shift + (m - shift).mean(axis=1)

    if statistic == "mean":
        name, fn = "mean", mean
    elif statistic == "drop_points":
        if reference is None:
            raise ValueError("drop_points needs a reference value")
        name, fn = "drop_points", lambda m: (reference - mean(m)) * 100.0
    elif callable(statistic):
        name, fn = getattr(statistic, "__name__", "custom"), statistic
    else:
        raise ValueError(f"unknown statistic {statistic!r}")

    n = x.size
    rng = CounterRNG(seed)
    reps = np.empty(iterations)
    for lo, hi in _row_chunks(iterations, n):
        idx = rng.integers(n, (hi - lo, n))
        reps[lo:hi] = fn(x[idx])
    point = float(fn(x[None, :])[0])
    tail = (1.0 - level) / 2.0
    lower, upper = np.quantile(reps, [tail, 1.0 - tail])
    return BootstrapCI(
        statistic_name=name,
        point_estimate=point,
        lower=float(lower),
        upper=float(upper),
        level=level,
        iterations=iterations,
        seed=seed,
        contains_point=bool(lower <= point <= upper),
    )


def classify_effect_size(d: float) -> str:
    magnitude = abs(d)
    for bound, name in EFFECT_BANDS:
        if magnitude < bound:
            return name
    return "large"


def cliffs_delta(a, b) -> float:
    a = _array(a, "group_a")
    b = np.sort(_array(b, "group_b"))
    less = np.searchsorted(b, a, side="left")  # b values below each a
    greater = b.size - np.searchsorted(b, a, side="right")
    return float((less.sum() - greater.sum()) / (a.size * b.size))


def effect_sizes(group_a, group_b) -> EffectSizeReport:
    """Cohen's d, Glass's delta, Hedges' g and Cliff's delta of ``a`` relative to ``b``.

    ``group_b`` is the control: Glass's delta divides by its standard
    deviation. Variances use the n-1 divisor; ``g = d * (1 - 3 / (4(n_a+n_b) - 9))``.
    Glass's delta is None when the control has zero spread.

    Raises:
        DegenerateGroupsError: the pooled variance is zero.
    """
    a = _array(group_a, "group_a", 2)
    b = _array(group_b, "group_b", 2)
    na, nb = a.size, b.size
    diff = a.mean() - b.mean()
    va, vb = a.var(ddof=1), b.var(ddof=1)
    pooled = math.sqrt(((na - 1) * va + (nb - 1) * vb) / (na + nb - 2))
    if pooled == 0:
        raise DegenerateGroupsError("degenerate groups")
    d = float(diff / pooled)
    correction = 1.0 - 3.0 / (4.0 * (na + nb) - 9.0)
    g = d * correction
    sb = math.sqrt(vb)
    glass = float(diff / sb) if sb > 0 else None
    cliff = cliffs_delta(a, b)
    classes = {
        "cohens_d": classify_effect_size(d),
        "hedges_g": classify_effect_size(g),
        "cliffs_delta": classify_effect_size(cliff),
    }
    if glass is not None:
        classes["glass_delta"] = classify_effect_size(glass)
    return EffectSizeReport(
        cohens_d=d,
        glass_delta=glass,
        hedges_g=g,
        cliffs_delta=cliff,
        classification=classes,
        n_a=int(na),
        n_b=int(nb),
    )


def bh_fdr(p_values: Sequence[float], alpha: float = DEFAULT_ALPHA) -> tuple[list[bool], list[float]]:
    """Benjamini-Hochberg step-up procedure.

    Returns rejection flags and adjusted p-values, both in input order.
    """
    p = np.asarray(p_values, dtype=np.float64).ravel()
    if p.size == 0:
        return [], []
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    ranked = p[order]
    ranks = np.arange(1, m + 1)
    passing = np.nonzero(ranked <= ranks * alpha / m)[0]
    k = passing[-1] + 1 if passing.size else 0
    reject = np.zeros(m, dtype=bool)
    reject[order[:k]] = True
    adjusted_sorted = np.minimum.accumulate((m * ranked / ranks)[::-1])[::-1]
    adjusted = np.empty(m)
    adjusted[order] = np.minimum(adjusted_sorted, 1.0)
    return reject.tolist(), adjusted.tolist()


def anova_f(groups: Sequence[Sequence[float]]) -> float:
    """One-way ANOVA F = MS_between / MS_within."""
    arrays = [_array(g, "group", 2) for g in groups]
    if len(arrays) < 2:
        raise ValueError("anova needs at least 2 groups")
    pooled = np.concatenate(arrays)
    grand = pooled.mean()
    ssb = math.fsum(g.size * (g.mean() - grand) ** 2 for g in arrays)
    ssw = math.fsum(float(np.sum((g - g.mean()) ** 2)) for g in arrays)
    if ssw == 0:
        raise DegenerateGroupsError("degenerate groups")
    df_b = len(arrays) - 1
    df_w = pooled.size - len(arrays)
    return (ssb / df_b) / (ssw / df_w)


def permutation_test(
    group_a,
    group_b,
    statistic: Callable[[np.ndarray, np.ndarray], np.ndarray],
    iterations: int = DEFAULT_PERMUTATIONS,
    seed: int = DEFAULT_SEED,
) -> tuple[float, float]:
    """Generic two-sample permutation test with a vectorised statistic.

    ``statistic(a_rows, b_rows)`` receives 2-D arrays whose rows are one
    relabelling each and returns one value per row; larger values are more
    extreme. Returns ``(observed, p)`` with ``p = (1 + #{perm >= obs}) / (1 + iterations)``.
    """
    a = _array(group_a, "group_a")
    b = _array(group_b, "group_b")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    pooled = np.concatenate([a, b])
    n, na = pooled.size, a.size
    observed = float(statistic(a[None, :], b[None, :])[0])
    rng = CounterRNG(seed)
    exceed = 0
    # relative slack so rounding in the permuted sums cannot hide ties with the observed value
    threshold = observed - 1e-12 * max(1.0, abs(observed))
    for lo, hi in _row_chunks(iterations, n):
        perm = pooled[rng.permutation_keys((hi - lo, n))]
        values = statistic(perm[:, :na], perm[:, na:])
        exceed += int(np.sum(values >= threshold))
    return observed, (1 + exceed) / (1 + iterations)


def _abs_mean_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.abs(a.mean(axis=1) - b.mean(axis=1))


def permutation_p(
    group_a,
    group_b,
    iterations: int = DEFAULT_PERMUTATIONS,
    seed: int = DEFAULT_SEED,
) -> float:
    """Two-sided permutation p-value for a difference in means."""
    return permutation_test(group_a, group_b, _abs_mean_diff, iterations, seed)[1]


def pearson_r(x, y) -> float:
    x = _array(x, "x", 3)
    y = _array(y, "y", 3)
    if x.size != y.size:
        raise ValueError("x and y must have equal length")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(np.dot(dx, dx)), float(np.dot(dy, dy))
    if sxx == 0 or syy == 0:
        raise DegenerateGroupsError("zero variance")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def correlation_permutation_p(
    x, y, iterations: int = DEFAULT_PERMUTATIONS, seed: int = DEFAULT_SEED
) -> tuple[float, float]:
    """Pearson r with a two-sided permutation p-value (y shuffled against x)."""
    r = pearson_r(x, y)
    x = _array(x, "x")
    y = _array(y, "y")
    dx = x - x.mean()
    dy = y - y.mean()
    scale = math.sqrt(float(np.dot(dx, dx)) * float(np.dot(dy, dy)))
    rng = CounterRNG(seed)
    threshold = abs(r) - 1e-12
    exceed = 0
    for lo, hi in _row_chunks(iterations, y.size):
        shuffled = dy[rng.permutation_keys((hi - lo, y.size))]
        values = np.abs(shuffled @ dx) / scale
        exceed += int(np.sum(values >= threshold))
    return r, (1 + exceed) / (1 + iterations)
