"""Small statistical helpers shared by the Monte Carlo checks."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats


def mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(x.mean()) if x.size else float("nan"), float("nan")
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def two_sample_chi2(x, y, min_expected: float = 5.0) -> tuple[float, float, int]:
    """Chi-square homogeneity test for two samples of non-negative integers.

    Values are pooled from the top down until every pooled cell has an
    expected count of at least ``min_expected`` in both rows.  Returns
    ``(statistic, p_value, dof)``; with a single cell the samples cannot be
    told apart and ``(0, 1, 0)`` is returned.
    """
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    hi = int(max(x.max(initial=0), y.max(initial=0)))
    cx = np.bincount(x, minlength=hi + 1).astype(float)
    cy = np.bincount(y, minlength=hi + 1).astype(float)
    frac_x = x.size / (x.size + y.size)
    frac_y = 1.0 - frac_x
    cells_x, cells_y = [], []
    acc_x = acc_y = 0.0
    for v in range(hi, -1, -1):
        acc_x += cx[v]
        acc_y += cy[v]
        tot = acc_x + acc_y
        if tot * min(frac_x, frac_y) >= min_expected:
            cells_x.append(acc_x)
            cells_y.append(acc_y)
            acc_x = acc_y = 0.0
    if acc_x + acc_y > 0:
        if cells_x:
            cells_x[-1] += acc_x
            cells_y[-1] += acc_y
        else:
            cells_x.append(acc_x)
            cells_y.append(acc_y)
    if len(cells_x) < 2:
        return 0.0, 1.0, 0
    table = np.array([cells_x, cells_y])
    stat, p, dof, _ = stats.chi2_contingency(table, correction=False)
    return float(stat), float(p), int(dof)
