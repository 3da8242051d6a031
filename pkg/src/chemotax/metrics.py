"""Discrepancy metrics between ensemble-mean lattice fields and PDE fields.

All metrics are symmetric in their two arguments and nonnegative;
normalisation is by the larger of the two sup norms so swapping arguments
cannot change the value.

``rel_linf`` is the sup error over the sup scale; ``rel_l2`` is the
root-mean-square error over the same sup scale (equivalently the L2(Omega)
error divided by sup * sqrt(|Omega|)), so rel_l2 <= rel_linf always holds.
For sharply peaked patterns rel_l2 reads as "RMS deviation as a fraction of
the peak height", which is the quantity the eye compares in an overlay plot.
``rel_l2_fieldnorm`` (reported alongside, never thresholded) normalises by
the field L2 norms instead and is much harsher on one-site peak jitter.
"""

from __future__ import annotations

import numpy as np


def _sup_scale(a: np.ndarray, b: np.ndarray) -> float:
    return max(float(np.abs(a).max()), float(np.abs(b).max()))


def rel_linf(a, b) -> float:
    """max|a-b| / max(max|a|, max|b|); 0 when both fields vanish."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = _sup_scale(a, b)
    if scale == 0.0:
        return 0.0
    return float(np.abs(a - b).max()) / scale


def rel_l2(a, b) -> float:
    """RMS|a-b| / max(max|a|, max|b|); 0 when both fields vanish."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    scale = _sup_scale(a, b)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(a - b)) / np.sqrt(a.size) / scale


def rel_l2_fieldnorm(a, b) -> float:
    """||a-b||_2 / max(||a||_2, ||b||_2); 0 when both fields vanish."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    scale = max(float(np.linalg.norm(a)), float(np.linalg.norm(b)))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(a - b)) / scale


def l2_distance(a, b, dx: float, dim: int) -> float:
    """Unnormalised discrete L2 distance sqrt(sum (a-b)^2 * dx^dim)."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    return float(np.linalg.norm(a - b)) * dx ** (dim / 2.0)


def ensemble_spread(fields) -> float:
    """Max pairwise rel_l2 between per-realization fields; 0 for < 2 fields."""
    fields = list(fields)
    worst = 0.0
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            worst = max(worst, rel_l2(fields[i], fields[j]))
    return worst
