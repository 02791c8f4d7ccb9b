"""Vectorized statistic evaluation across many streams or steps.

Two consumers: threshold calibration advances thousands of pseudo-null
streams in lockstep (one ring-buffer column per step), and the Monte Carlo
harness evaluates one stream's sliding windows a chunk of steps at a time.
Both paths compute statistics with the same floating-point expressions as
the per-step engines in :mod:`seqshift.statistics`, so a vectorized run
and a stepped run of the same stream agree bitwise.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .statistics import (
    DEFAULT_REFRESH_EVERY,
    KS,
    MEAN_DIFF,
    MMD,
    Kernel,
    ReferenceSet,
)


def ks_stats_from_count_rows(
    left_rows: np.ndarray, right_rows: np.ndarray, n: int, w: int
) -> np.ndarray:
    """KS distance per row from unordered per-element reference CDF counts.

    The reference counts are non-decreasing functions of the value, so
    sorting a window's counts as integers recovers them in value order (a
    sort of the values themselves is never needed); the per-element
    expressions mirror the scalar path in ``statistics._ks_from_counts``
    bitwise.
    """
    left_sorted = np.sort(left_rows, axis=1)
    right_sorted = np.sort(right_rows, axis=1)
    ranks = np.arange(1, w + 1, dtype=np.float64)
    d_plus = np.max(ranks / w - right_sorted / n, axis=1)
    d_minus = np.max(left_sorted / n - (ranks - 1.0) / w, axis=1)
    return np.maximum(d_plus, d_minus)


def sliding_ks_stats(buf: np.ndarray, reference: ReferenceSet, w: int) -> np.ndarray:
    """KS statistics for every size-w sliding window over ``buf``.

    ``buf`` holds w - 1 carried values followed by the chunk's new values;
    the result has one statistic per new value.
    """
    ref_sorted = reference.sorted_values
    left = np.searchsorted(ref_sorted, buf, side="left").astype(np.int32)
    right = np.searchsorted(ref_sorted, buf, side="right").astype(np.int32)
    left_rows = np.lib.stride_tricks.sliding_window_view(left, w)
    right_rows = np.lib.stride_tricks.sliding_window_view(right, w)
    return ks_stats_from_count_rows(left_rows, right_rows, reference.n, w)


def sliding_mean_diff_stats(
    buf: np.ndarray, reference: ReferenceSet, w: int
) -> np.ndarray:
    """Mean-difference statistics for every size-w sliding window over ``buf``."""
    windows = np.lib.stride_tricks.sliding_window_view(buf, w)
    return reference.scalar_mean - np.sum(windows, axis=1) / w


class BatchKsEngine:
    """Lockstep sliding windows for many streams, KS statistic.

    Stores each element's reference CDF counts rather than its value: one
    binary search per arriving element, integer sorts per statistic.
    """

    def __init__(self, reference: ReferenceSet, w: int, n_streams: int):
        if reference.dim != 1:
            raise ValueError("the KS distance requires scalar summaries")
        self.reference = reference
        self.w = w
        self._left = np.zeros((n_streams, w), dtype=np.int32)
        self._right = np.zeros((n_streams, w), dtype=np.int32)
        self._size = 0
        self._head = 0

    def push_column(self, col: np.ndarray, active: Optional[np.ndarray]) -> None:
        col = np.asarray(col, dtype=np.float64).reshape(-1)
        ref_sorted = self.reference.sorted_values
        left = np.searchsorted(ref_sorted, col, side="left").astype(np.int32)
        right = np.searchsorted(ref_sorted, col, side="right").astype(np.int32)
        if self._size < self.w:
            slot = self._size
            self._size += 1
        else:
            # dead rows receive garbage harmlessly; they are never read again
            slot = self._head
            self._head = (self._head + 1) % self.w
        self._left[:, slot] = left
        self._right[:, slot] = right

    def statistics(self, active: np.ndarray) -> np.ndarray:
        if self._size < self.w:
            raise RuntimeError("windows not yet full")
        return ks_stats_from_count_rows(
            self._left[active], self._right[active], self.reference.n, self.w
        )


class BatchMeanDiffEngine:
    """Lockstep sliding windows for many streams, mean-difference statistic."""

    def __init__(self, reference: ReferenceSet, w: int, n_streams: int):
        if reference.dim != 1:
            raise ValueError("the mean difference requires scalar summaries")
        self.reference = reference
        self.w = w
        self._buffer = np.zeros((n_streams, w), dtype=np.float64)
        self._size = 0
        self._head = 0

    def push_column(self, col: np.ndarray, active: Optional[np.ndarray]) -> None:
        col = np.asarray(col, dtype=np.float64).reshape(-1)
        if self._size < self.w:
            self._buffer[:, self._size] = col
            self._size += 1
        else:
            self._buffer[:, self._head] = col
            self._head = (self._head + 1) % self.w

    def statistics(self, active: np.ndarray) -> np.ndarray:
        if self._size < self.w:
            raise RuntimeError("windows not yet full")
        sums = np.sum(self._buffer[active], axis=1)
        return self.reference.scalar_mean - sums / self.w


class BatchMmdEngine:
    """Lockstep sliding windows for many streams, unbiased squared MMD.

    Maintains each stream's window self-sum and reference cross-sum
    incrementally (O(n + w) kernel evaluations per stream per step); the
    reference self-sum is shared by all streams.  Sums are rebuilt from
    the buffers every ``refresh_every`` pushes to bound float drift.
    """

    _CROSS_CHUNK = 1024

    def __init__(
        self,
        reference: ReferenceSet,
        w: int,
        n_streams: int,
        kernel: Kernel,
        refresh_every: int = DEFAULT_REFRESH_EVERY,
    ):
        if w < 2:
            raise ValueError("the MMD statistic needs window size >= 2")
        self.reference = reference
        self.w = w
        self.kernel = kernel
        self.refresh_every = refresh_every
        self._buffer = np.zeros((n_streams, w, reference.dim), dtype=np.float64)
        self._b_sums = np.zeros(n_streams, dtype=np.float64)
        self._c_sums = np.zeros(n_streams, dtype=np.float64)
        self._size = 0
        self._head = 0
        self._pushes_since_refresh = 0
        self._a_sum = reference.kernel_self_sum(kernel)

    def _rowwise_kernel(self, points: np.ndarray, windows: np.ndarray) -> np.ndarray:
        """k(points[i], windows[i, j]) for each row i -> (rows, window_len)."""
        if self.kernel.kind == "rbf":
            sq = np.sum((windows - points[:, None, :]) ** 2, axis=-1)
            return np.exp(sq / (-2.0 * self.kernel.bandwidth**2))
        if self.kernel.kind == "linear":
            return np.einsum("rd,rwd->rw", points, windows)
        return np.ones(windows.shape[:2], dtype=np.float64)

    def _cross_sums(self, points: np.ndarray) -> np.ndarray:
        """sum_i k(x_i, p) over the reference for each point p -> (rows,)."""
        out = np.empty(points.shape[0], dtype=np.float64)
        for lo in range(0, points.shape[0], self._CROSS_CHUNK):
            block = points[lo : lo + self._CROSS_CHUNK]
            out[lo : lo + self._CROSS_CHUNK] = self.kernel.matrix(
                self.reference.values, block
            ).sum(axis=0)
        return out

    def push_column(self, col: np.ndarray, active: Optional[np.ndarray]) -> None:
        col = np.asarray(col, dtype=np.float64)
        if col.ndim == 1:
            col = col[:, None]
        rows = slice(None) if active is None else active
        if self._size < self.w:
            if self._size > 0:
                others = self._buffer[rows, : self._size]
                k_new = self._rowwise_kernel(col[rows], others)
                self._b_sums[rows] += 2.0 * k_new.sum(axis=1)
            self._c_sums[rows] += self._cross_sums(col[rows])
            self._buffer[:, self._size] = col
            self._size += 1
        else:
            mask = np.ones(self.w, dtype=bool)
            mask[self._head] = False
            old = self._buffer[rows, self._head]
            others = self._buffer[rows][:, mask]
            k_old = self._rowwise_kernel(old, others)
            self._b_sums[rows] -= 2.0 * k_old.sum(axis=1)
            self._c_sums[rows] -= self._cross_sums(old)
            k_new = self._rowwise_kernel(col[rows], others)
            self._b_sums[rows] += 2.0 * k_new.sum(axis=1)
            self._c_sums[rows] += self._cross_sums(col[rows])
            self._buffer[:, self._head] = col
            self._head = (self._head + 1) % self.w
        self._pushes_since_refresh += 1
        if self._pushes_since_refresh >= self.refresh_every:
            self.refresh_sums(np.arange(self._buffer.shape[0]) if active is None else active)

    def refresh_sums(self, active: np.ndarray) -> None:
        for i in np.asarray(active).reshape(-1):
            vals = self._buffer[i, : self._size]
            K = self.kernel.matrix(vals, vals)
            self._b_sums[i] = float(K.sum() - np.trace(K))
            self._c_sums[i] = float(self.kernel.matrix(self.reference.values, vals).sum())
        self._pushes_since_refresh = 0

    def statistics(self, active: np.ndarray) -> np.ndarray:
        if self._size < self.w:
            raise RuntimeError("windows not yet full")
        n = self.reference.n
        w = self.w
        return (
            self._a_sum / (n * (n - 1))
            + self._b_sums[active] / (w * (w - 1))
            - 2.0 * self._c_sums[active] / (n * w)
        )


def make_batch_engine(
    statistic: str,
    reference: ReferenceSet,
    w: int,
    n_streams: int,
    kernel: Optional[Kernel] = None,
):
    if statistic == KS:
        return BatchKsEngine(reference, w, n_streams)
    if statistic == MEAN_DIFF:
        return BatchMeanDiffEngine(reference, w, n_streams)
    if statistic == MMD:
        if kernel is None:
            raise ValueError("the MMD statistic requires a kernel")
        return BatchMmdEngine(reference, w, n_streams, kernel)
    raise ValueError(f"unknown statistic {statistic!r}")
