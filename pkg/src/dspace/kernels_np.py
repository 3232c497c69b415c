"""Pure-numpy fallbacks for the hot kernels.

Same contracts as the numba implementations in ``kernels.py``; used when
numba is unavailable or disabled via ``DSPACE_NO_NUMBA=1``.
"""
from __future__ import annotations

import math

import numpy as np


def intersect_positions(cs_list: list[np.ndarray]) -> tuple[np.ndarray, list[np.ndarray]]:
    """Intersect strictly-ascending uint64 id arrays.

    Returns the common ids (ascending) and, per input array, the positions
    of those ids within it.
    """
    common = cs_list[0]
    for cs in cs_list[1:]:
        if common.size == 0 or cs.size == 0:
            common = common[:0]
            break
        idx = np.searchsorted(cs, common)
        valid = idx < cs.size
        safe = np.where(valid, idx, 0)
        common = common[valid & (cs[safe] == common)]
    positions = [np.searchsorted(cs, common).astype(np.int64) for cs in cs_list]
    return common.astype(np.uint64, copy=False), positions


def minkowski_agg(comp: np.ndarray, weights: np.ndarray, order: float) -> np.ndarray:
    """Aggregate nonnegative component matrix (n, d) into distances (n,).

    comp holds the per-dimension base distances (|x-y| or 0/1); weights are
    the per-dimension factors; order is k >= 1 or inf.
    """
    wc = comp * weights
    if math.isinf(order):
        return wc.max(axis=1)
    if order == 1.0:
        return wc.sum(axis=1)
    if order == 2.0:
        return np.sqrt(np.einsum("ij,ij->i", wc, wc))
    return np.power(np.power(wc, order).sum(axis=1), 1.0 / order)
