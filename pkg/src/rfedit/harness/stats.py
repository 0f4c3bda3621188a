"""Paired-seed summary statistics used for ordering and trend checks."""

from typing import NamedTuple

import numpy as np
from scipy import stats


def paired_z(diff):
    """Mean of per-seed differences over its standard error (inf if the SE is 0)."""
    diff = np.asarray(diff, dtype=np.float64)
    if diff.size < 2:
        raise ValueError("need at least two paired samples")
    se = diff.std(ddof=1) / np.sqrt(diff.size)
    m = diff.mean()
    if se == 0.0:
        return 0.0 if m == 0.0 else float(np.copysign(np.inf, m))
    return float(m / se)


def gap_exceeds(worse, better, n_se=2.0):
    """True when ``mean(worse - better)`` is more than ``n_se`` paired SEs above 0."""
    return paired_z(np.asarray(worse) - np.asarray(better)) > n_se


class TrendResult(NamedTuple):
    etas: tuple
    means: tuple
    rho: float
    p_value: float
    max_reverse_z: float
    passed: bool


def eta_trend(values, etas, alpha=0.05, tie_se=2.0):
    """Check that a metric does not increase as eta decreases.

    ``values`` is (n_seeds, n_etas). The metric is centred per seed, then a
    one-sided Spearman test for positive association with eta is run on the
    pooled points. Every adjacent pair of etas must also not move the wrong
    way by more than ``tie_se`` paired standard errors (ties within noise
    are allowed).
    """
    v = np.asarray(values, dtype=np.float64)
    etas = np.asarray(etas, dtype=np.float64)
    if v.ndim != 2 or v.shape[1] != etas.size:
        raise ValueError(f"values shape {v.shape} does not match {etas.size} etas")
    means = tuple(float(m) for m in v.mean(axis=0))
    if etas.size < 2 or v.shape[0] < 2:
        return TrendResult(tuple(etas), means, float("nan"), float("nan"), float("nan"), True)
    order = np.argsort(-etas, kind="stable")
    v, etas = v[:, order], etas[order]
    centred = v - v.mean(axis=1, keepdims=True)
    e = np.broadcast_to(etas, centred.shape)
    res = stats.spearmanr(e.ravel(), centred.ravel(), alternative="greater")
    rev = max(paired_z(v[:, i + 1] - v[:, i]) for i in range(etas.size - 1))
    passed = bool(res.pvalue < alpha and rev <= tie_se)
    return TrendResult(tuple(float(x) for x in etas), tuple(float(m) for m in v.mean(axis=0)),
                       float(res.statistic), float(res.pvalue), float(rev), passed)
