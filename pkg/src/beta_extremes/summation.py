"""Deterministic compensated summation.

Sums are reduced in fixed-size blocks: each block is accumulated with
Neumaier's compensated update, then the block results are combined in
index order.  The block size is fixed, so the result never depends on how
many threads evaluated the blocks.
"""

import math
import os

import numba as nb
import numpy as np

if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
    # prefer OpenMP over an outdated TBB runtime
    nb.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]

BLOCK = 1 << 16
PLAIN_FLOOR = 1e-250
_LOG_PLAIN_FLOOR = math.log(PLAIN_FLOOR)


@nb.njit(cache=True)
def _neumaier(values, start, stop):
    s = 0.0
    c = 0.0
    for i in range(start, stop):
        v = values[i]
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s, c


@nb.njit(parallel=True, cache=True)
def _block_partials(values, block):
    nblocks = (values.shape[0] + block - 1) // block
    sums = np.empty(nblocks)
    comps = np.empty(nblocks)
    for b in nb.prange(nblocks):
        lo = b * block
        hi = min(lo + block, values.shape[0])
        s, c = _neumaier(values, lo, hi)
        sums[b] = s
        comps[b] = c
    return sums, comps


@nb.njit(cache=True)
def _reduce_partials(sums, comps):
    s = 0.0
    c = 0.0
    for b in range(sums.shape[0]):
        for v in (sums[b], comps[b]):
            t = s + v
            if abs(s) >= abs(v):
                c += (s - t) + v
            else:
                c += (v - t) + s
            s = t
    return s + c


@nb.njit(parallel=True, cache=True)
def _block_lse(log_values, block):
    nblocks = (log_values.shape[0] + block - 1) // block
    maxima = np.empty(nblocks)
    scaled = np.empty(nblocks)
    for b in nb.prange(nblocks):
        lo = b * block
        hi = min(lo + block, log_values.shape[0])
        m = -np.inf
        for i in range(lo, hi):
            if log_values[i] > m:
                m = log_values[i]
        s = 0.0
        c = 0.0
        if m > -np.inf:
            for i in range(lo, hi):
                v = math.exp(log_values[i] - m)
                t = s + v
                if s >= v:
                    c += (s - t) + v
                else:
                    c += (v - t) + s
                s = t
        maxima[b] = m
        scaled[b] = s + c
    return maxima, scaled


def compensated_sum(values, block=BLOCK):
    """Compensated sum of a 1-d float array, reduced in fixed-order blocks."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    if values.size == 0:
        return 0.0
    sums, comps = _block_partials(values, block)
    return float(_reduce_partials(sums, comps))


def log_sum_exp(log_values, block=BLOCK):
    """``log(sum(exp(log_values)))`` with per-block rescaling."""
    log_values = np.ascontiguousarray(log_values, dtype=np.float64)
    if log_values.size == 0:
        return -math.inf
    maxima, scaled = _block_lse(log_values, block)
    top = maxima.max()
    if top == -math.inf:
        return -math.inf
    weights = scaled * np.exp(maxima - top)
    sums, comps = _block_partials(weights, block)
    return top + math.log(_reduce_partials(sums, comps))


def sum_log_terms(log_terms, block=BLOCK):
    """Sum positive terms supplied as logs; returns ``(value, log_value)``.

    Terms are exponentiated and summed directly when all of them exceed
    ``PLAIN_FLOOR``; otherwise the log-sum-exp path keeps the result finite.
    """
    log_terms = np.ascontiguousarray(log_terms, dtype=np.float64)
    if log_terms.size == 0:
        return 0.0, -math.inf
    if log_terms.min() >= _LOG_PLAIN_FLOOR:
        value = compensated_sum(np.exp(log_terms), block)
        return value, math.log(value)
    log_value = log_sum_exp(log_terms, block)
    return math.exp(log_value), log_value
