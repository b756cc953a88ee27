"""Small statistical helpers: chi-square fits and two-sample block tests."""

from __future__ import annotations

import numpy as np
from scipy import stats as sps

__all__ = [
    "chi2_gof",
    "poisson_gof",
    "two_sample_counts_test",
    "mc_sigma",
]


def _pool_tail(observed: np.ndarray, expected: np.ndarray, min_expected: float):
    """Merge low-expectation cells (ascending by expectation) into one bucket."""
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected, dtype=float)
    order = np.argsort(expected)
    small = []
    keep_obs, keep_exp = [], []
    pooled_o = pooled_e = 0.0
    for i in order:
        if expected[i] < min_expected or (pooled_e and pooled_e < min_expected):
            pooled_o += observed[i]
            pooled_e += expected[i]
        else:
            keep_obs.append(observed[i])
            keep_exp.append(expected[i])
    if pooled_e > 0:
        keep_obs.append(pooled_o)
        keep_exp.append(pooled_e)
    return np.array(keep_obs), np.array(keep_exp)


def chi2_gof(observed, expected, min_expected: float = 5.0) -> tuple[float, int, float]:
    """Chi-square goodness of fit with tail pooling.

    ``expected`` must carry the same total mass as ``observed``.  Returns
    (statistic, dof, p_value).
    """
    obs, exp = _pool_tail(np.asarray(observed, float), np.asarray(expected, float), min_expected)
    if len(obs) < 2:
        return 0.0, 0, 1.0
    if abs(obs.sum() - exp.sum()) > 1e-6 * max(1.0, obs.sum()):
        raise ValueError(f"totals differ: observed {obs.sum()}, expected {exp.sum()}")
    stat = float(((obs - exp) ** 2 / exp).sum())
    dof = len(obs) - 1
    return stat, dof, float(sps.chi2.sf(stat, dof))


def poisson_gof(values: np.ndarray, lam: float, min_expected: float = 5.0):
    """Chi-square fit of integer draws against Poisson(lam)."""
    values = np.asarray(values)
    n = len(values)
    top = int(values.max()) if n else 0
    observed = np.bincount(values, minlength=top + 2).astype(float)
    kk = np.arange(len(observed))
    pmf = sps.poisson.pmf(kk, lam)
    pmf[-1] = sps.poisson.sf(len(observed) - 2, lam)  # lump the tail into the last cell
    return chi2_gof(observed, pmf * n, min_expected)


def two_sample_counts_test(counts_a: dict, counts_b: dict, min_expected: float = 5.0):
    """Chi-square homogeneity test for two samples of discrete outcomes.

    ``counts_a`` and ``counts_b`` map outcomes to frequencies; outcomes whose
    pooled expectation is small are merged.  Returns (statistic, dof, p_value).
    """
    keys = sorted(set(counts_a) | set(counts_b))
    a = np.array([counts_a.get(x, 0) for x in keys], dtype=float)
    b = np.array([counts_b.get(x, 0) for x in keys], dtype=float)
    na, nb = a.sum(), b.sum()
    if na == 0 or nb == 0:
        raise ValueError("both samples must be nonempty")
    pooled = (a + b) / (na + nb)
    # merge cells until each has min_expected in the smaller sample
    scale = min(na, nb)
    order = np.argsort(pooled * scale)
    groups = []
    cur = []
    acc = 0.0
    for i in order:
        cur.append(i)
        acc += pooled[i] * scale
        if acc >= min_expected:
            groups.append(cur)
            cur, acc = [], 0.0
    if cur:
        if groups:
            groups[-1].extend(cur)
        else:
            groups.append(cur)
    if len(groups) < 2:
        return 0.0, 0, 1.0
    ga = np.array([a[g].sum() for g in groups])
    gb = np.array([b[g].sum() for g in groups])
    stat = 0.0
    for obs, n in ((ga, na), (gb, nb)):
        exp = (ga + gb) * n / (na + nb)
        stat += (((obs - exp) ** 2) / exp).sum()
    dof = len(groups) - 1
    return float(stat), dof, float(sps.chi2.sf(stat, dof))


def mc_sigma(p: float, n: int) -> float:
    """Standard error of a frequency estimate from n Bernoulli(p) trials."""
    return float(np.sqrt(max(p * (1.0 - p), 1e-300) / n))
