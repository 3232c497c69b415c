"""Hot numeric kernels: k-way galloping merge and Minkowski aggregation.

Numba-compiled when available; ``DSPACE_NO_NUMBA=1`` forces the pure-numpy
fallbacks from ``kernels_np``. ``backend()`` reports which path is active.
"""
from __future__ import annotations

import math
import os

import numpy as np

from . import kernels_np

_DISABLED = os.environ.get("DSPACE_NO_NUMBA", "").lower() in {"1", "true", "yes"}

try:
    from numba import njit

    _NUMBA_OK = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _NUMBA_OK = False

USE_NUMBA = _NUMBA_OK and not _DISABLED


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


if _NUMBA_OK:

    @njit(cache=True)
    def _kway_intersect(flat, offsets):
        ncols = offsets.shape[0] - 1
        cap = offsets[1] - offsets[0]
        for i in range(1, ncols):
            n = offsets[i + 1] - offsets[i]
            if n < cap:
                cap = n
        out_c = np.empty(cap, np.uint64)
        out_pos = np.empty((ncols, cap), np.int64)
        if cap == 0:
            return out_c[:0], out_pos[:, :0]
        idx = offsets[:-1].copy()
        n_out = 0
        target = flat[idx[0]]
        agree = 1
        col = 1
        while True:
            # gallop column `col` forward to the first element >= target
            j = idx[col]
            hi = offsets[col + 1]
            if flat[j] < target:
                step = 1
                while j + step < hi and flat[j + step] < target:
                    step <<= 1
                lo = j + (step >> 1)
                rhi = j + step
                if rhi > hi:
                    rhi = hi
                while lo < rhi:
                    mid = (lo + rhi) >> 1
                    if flat[mid] < target:
                        lo = mid + 1
                    else:
                        rhi = mid
                j = lo
            if j == hi:
                break
            idx[col] = j
            v = flat[j]
            if v == target:
                agree += 1
                if agree == ncols:
                    out_c[n_out] = target
                    for i in range(ncols):
                        out_pos[i, n_out] = idx[i] - offsets[i]
                    n_out += 1
                    idx[0] += 1
                    if idx[0] == offsets[1]:
                        break
                    target = flat[idx[0]]
                    agree = 1
                    col = 0
            else:
                target = v
                agree = 1
            col += 1
            if col == ncols:
                col = 0
        return out_c[:n_out], out_pos[:, :n_out]

    @njit(cache=True)
    def _minkowski_agg(comp, weights, order):
        n, d = comp.shape
        out = np.empty(n, np.float64)
        if order == np.inf:
            for i in range(n):
                m = 0.0
                for j in range(d):
                    v = comp[i, j] * weights[j]
                    if v > m:
                        m = v
                out[i] = m
        elif order == 1.0:
            for i in range(n):
                s = 0.0
                for j in range(d):
                    s += comp[i, j] * weights[j]
                out[i] = s
        elif order == 2.0:
            for i in range(n):
                s = 0.0
                for j in range(d):
                    v = comp[i, j] * weights[j]
                    s += v * v
                out[i] = math.sqrt(s)
        else:
            for i in range(n):
                s = 0.0
                for j in range(d):
                    s += (comp[i, j] * weights[j]) ** order
                out[i] = s ** (1.0 / order)
        return out


def intersect_positions(
    cs_list: list[np.ndarray], force: str | None = None
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Intersect strictly-ascending uint64 id arrays, returning common ids
    plus per-array positions. Single-array input passes through."""
    if len(cs_list) == 1:
        cs = cs_list[0]
        return cs, [np.arange(cs.size, dtype=np.int64)]
    use = USE_NUMBA if force is None else force == "numba"
    if not use:
        return kernels_np.intersect_positions(cs_list)
    offsets = np.zeros(len(cs_list) + 1, dtype=np.int64)
    for i, cs in enumerate(cs_list):
        offsets[i + 1] = offsets[i] + cs.size
    flat = np.concatenate(cs_list) if offsets[-1] else np.empty(0, np.uint64)
    common, pos = _kway_intersect(flat, offsets)
    return common, [pos[i] for i in range(len(cs_list))]


def minkowski_agg(
    comp: np.ndarray, weights: np.ndarray, order: float, force: str | None = None
) -> np.ndarray:
    """Weighted Minkowski aggregation of a nonnegative component matrix."""
    if comp.shape[0] == 0:
        return np.zeros(0, dtype=np.float64)
    use = USE_NUMBA if force is None else force == "numba"
    if not use:
        return kernels_np.minkowski_agg(comp, weights, order)
    return _minkowski_agg(
        np.ascontiguousarray(comp, dtype=np.float64),
        np.ascontiguousarray(weights, dtype=np.float64),
        float(order),
    )
