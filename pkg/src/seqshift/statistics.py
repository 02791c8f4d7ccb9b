"""Two-sample test statistics between a reference set and a sliding window.

Three statistics are provided: the Kolmogorov-Smirnov distance and the
mean difference for scalar summaries, and the unbiased squared-MMD
U-statistic for any dimension.  Each has an exact definition plus a
sequential update path cheap enough to run once per stream step; cached
state is refreshed by full recomputation every ``refresh_every`` pushes to
bound floating-point drift (agreement contract: 1e-9 relative).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist, pdist

KS = "ks"
MMD = "mmd"
MEAN_DIFF = "mean_diff"
STATISTIC_KINDS = (KS, MMD, MEAN_DIFF)

DEFAULT_REFRESH_EVERY = 10_000

# Exact median of every pairwise distance needs n(n-1)/2 floats in memory.
_MEDIAN_HEURISTIC_MAX_PAIRS = 120_000_000


@dataclass(frozen=True)
class Kernel:
    """Positive-definite kernel: ``rbf``, ``linear``, or ``constant`` (k=1).

    RBF uses k(x, y) = exp(-||x - y||^2 / (2 * bandwidth^2)).
    """

    kind: str
    bandwidth: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("rbf", "linear", "constant"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf":
            if self.bandwidth is None or not self.bandwidth > 0.0:
                raise ValueError("rbf kernel requires bandwidth > 0")
        elif self.bandwidth is not None:
            raise ValueError(f"{self.kind} kernel takes no bandwidth")

    def matrix(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Kernel matrix of shape (len(X), len(Y))."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
        if self.kind == "rbf":
            sq = cdist(X, Y, metric="sqeuclidean")
            return np.exp(sq / (-2.0 * self.bandwidth**2))
        if self.kind == "linear":
            return X @ Y.T
        return np.ones((X.shape[0], Y.shape[0]), dtype=np.float64)

    def diag_sum(self, X: np.ndarray) -> float:
        """sum_i k(x_i, x_i) without building a matrix."""
        if self.kind == "linear":
            return float(np.einsum("ij,ij->", X, X))
        return float(X.shape[0])


def median_heuristic(reference: "ReferenceSet") -> float:
    """Bandwidth set to the median of all pairwise Euclidean distances.

    Raises if the median is zero (too many identical points) or if the
    reference is too large to hold the condensed distance vector; both
    cases call for an explicit bandwidth.
    """
    n = reference.n
    n_pairs = n * (n - 1) // 2
    if n_pairs > _MEDIAN_HEURISTIC_MAX_PAIRS:
        raise ValueError(
            f"reference of size {n} too large for the exact median heuristic; "
            "pass an explicit bandwidth"
        )
    sigma = float(np.median(pdist(reference.values)))
    if sigma == 0.0:
        raise ValueError(
            "median pairwise distance is zero (too many identical reference "
            "points); pass an explicit bandwidth"
        )
    return sigma


class ReferenceSet:
    """Immutable pre-change summaries with cached sort and kernel structure.

    Shareable across detector runs; every cache is derived once from the
    stored values.
    """

    def __init__(self, values):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 2:
            raise ValueError("reference needs at least 2 summaries of fixed dimension")
        if not np.all(np.isfinite(values)):
            raise ValueError("reference summaries must be finite")
        self.values = values
        self.values.setflags(write=False)
        self.n, self.dim = values.shape
        if self.dim == 1:
            self.sorted_values = np.sort(values[:, 0])
            self.scalar_mean = float(np.sum(self.sorted_values) / self.n)
        else:
            self.sorted_values = None
            self.scalar_mean = None
        self._kernel_self_sums: dict[Kernel, float] = {}

    def kernel_self_sum(self, kernel: Kernel) -> float:
        """Sum of k(x_i, x_j) over all i != j, cached per kernel."""
        cached = self._kernel_self_sums.get(kernel)
        if cached is None:
            total = 0.0
            block = 1024  # row blocks bound peak memory for large references
            for lo in range(0, self.n, block):
                rows = self.values[lo : lo + block]
                total += float(kernel.matrix(rows, self.values).sum())
            cached = total - kernel.diag_sum(self.values)
            self._kernel_self_sums[kernel] = cached
        return cached


class SlidingWindow:
    """Ring buffer of the most recent summaries with incremental caches.

    Bind ``ks_reference`` to maintain the sorted view and per-value
    reference-CDF counts the KS distance needs, and/or ``kernel`` plus
    ``kernel_reference`` to maintain the window and cross kernel sums the
    MMD statistic needs.  Single-owner mutable state: one window per
    detector run.
    """

    def __init__(
        self,
        capacity: int,
        dim: int = 1,
        ks_reference: Optional[ReferenceSet] = None,
        kernel: Optional[Kernel] = None,
        kernel_reference: Optional[ReferenceSet] = None,
        refresh_every: int = DEFAULT_REFRESH_EVERY,
    ):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        if refresh_every < 1:
            raise ValueError("refresh_every must be >= 1")
        if ks_reference is not None and dim != 1:
            raise ValueError("the KS distance is univariate; dim must be 1")
        if (kernel is None) != (kernel_reference is None):
            raise ValueError("kernel and kernel_reference must be given together")
        self.capacity = capacity
        self.dim = dim
        self._buffer = np.zeros((capacity, dim), dtype=np.float64)
        self._head = 0
        self._size = 0
        self.refresh_every = refresh_every
        self._pushes_since_refresh = 0

        self.ks_reference = ks_reference
        if ks_reference is not None:
            self._sorted = np.empty(0, dtype=np.float64)
            self._left_counts = np.empty(0, dtype=np.int64)
            self._right_counts = np.empty(0, dtype=np.int64)

        self.kernel = kernel
        self.kernel_reference = kernel_reference
        self.window_kernel_sum = 0.0  # sum over ordered pairs i != j in the window
        self.cross_kernel_sum = 0.0  # sum over (reference, window) pairs

    def __len__(self) -> int:
        return self._size

    @property
    def is_full(self) -> bool:
        return self._size == self.capacity

    def values(self) -> np.ndarray:
        """Window contents in arrival order, shape (size, dim)."""
        if self._size < self.capacity:
            return self._buffer[: self._size].copy()
        if self._head == 0:
            return self._buffer.copy()
        return np.concatenate((self._buffer[self._head :], self._buffer[: self._head]))

    def scalar_values(self) -> np.ndarray:
        if self.dim != 1:
            raise ValueError("window is not scalar")
        return self.values()[:, 0]

    def push(self, summary) -> None:
        """Append a summary, evicting the oldest when at capacity."""
        s = np.atleast_1d(np.asarray(summary, dtype=np.float64))
        if s.shape != (self.dim,):
            raise ValueError(f"summary has shape {s.shape}, window holds dimension {self.dim}")
        if not np.all(np.isfinite(s)):
            raise ValueError("summary must be finite")

        if self._size == self.capacity:
            old = self._buffer[self._head].copy()
            if self.kernel is not None:
                others = self._values_excluding(self._head)
                self._kernel_remove(old, others)
            if self.ks_reference is not None:
                self._ks_remove(old[0])
            self._buffer[self._head] = s
            self._head = (self._head + 1) % self.capacity
            if self.kernel is not None:
                self._kernel_add(s, others)
        else:
            if self.kernel is not None:
                others = self._buffer[: self._size].copy()
                self._kernel_add(s, others)
            self._buffer[(self._head + self._size) % self.capacity] = s
            self._size += 1
        if self.ks_reference is not None:
            self._ks_insert(s[0])

        if self.kernel is not None:
            self._pushes_since_refresh += 1
            if self._pushes_since_refresh >= self.refresh_every:
                self.refresh_kernel_sums()

    def _values_excluding(self, index: int) -> np.ndarray:
        mask = np.ones(self._size, dtype=bool)
        # ring positions 0.._size-1 are all live when full
        mask[index] = False
        return self._buffer[: self._size][mask]

    # -- scalar sort / reference-count maintenance ------------------------

    def _ks_insert(self, v: float) -> None:
        ref = self.ks_reference
        pos = int(np.searchsorted(self._sorted, v))
        self._sorted = np.insert(self._sorted, pos, v)
        self._left_counts = np.insert(
            self._left_counts, pos, np.searchsorted(ref.sorted_values, v, side="left")
        )
        self._right_counts = np.insert(
            self._right_counts, pos, np.searchsorted(ref.sorted_values, v, side="right")
        )

    def _ks_remove(self, v: float) -> None:
        pos = int(np.searchsorted(self._sorted, v, side="left"))
        if pos >= self._sorted.shape[0] or self._sorted[pos] != v:
            raise RuntimeError("sorted view out of sync with window buffer")
        self._sorted = np.delete(self._sorted, pos)
        self._left_counts = np.delete(self._left_counts, pos)
        self._right_counts = np.delete(self._right_counts, pos)

    # -- kernel sum maintenance -------------------------------------------

    def _kernel_remove(self, old: np.ndarray, others: np.ndarray) -> None:
        if others.shape[0]:
            self.window_kernel_sum -= 2.0 * float(
                self.kernel.matrix(old[None, :], others).sum()
            )
        self.cross_kernel_sum -= float(
            self.kernel.matrix(self.kernel_reference.values, old[None, :]).sum()
        )

    def _kernel_add(self, new: np.ndarray, others: np.ndarray) -> None:
        if others.shape[0]:
            self.window_kernel_sum += 2.0 * float(
                self.kernel.matrix(new[None, :], others).sum()
            )
        self.cross_kernel_sum += float(
            self.kernel.matrix(self.kernel_reference.values, new[None, :]).sum()
        )

    def refresh_kernel_sums(self) -> None:
        """Recompute the kernel sums from the buffer contents."""
        vals = self.values()
        K = self.kernel.matrix(vals, vals)
        self.window_kernel_sum = float(K.sum() - np.trace(K))
        self.cross_kernel_sum = float(
            self.kernel.matrix(self.kernel_reference.values, vals).sum()
        )
        self._pushes_since_refresh = 0


def _ks_from_counts(
    left_counts: np.ndarray, right_counts: np.ndarray, n: int, m: int
) -> float:
    """Exact sup |F - G| from per-window-point reference CDF counts.

    With the window sorted ascending, G jumps to (i+1)/m at point i while F
    sits at right_counts[i]/n there and reaches left_counts[i]/n just
    below; the supremum over all real u is attained among these values.
    """
    ranks = np.arange(1, m + 1, dtype=np.float64)
    d_plus = np.max(ranks / m - right_counts / n)
    d_minus = np.max(left_counts / n - (ranks - 1.0) / m)
    return float(max(d_plus, d_minus))


def ks_distance(reference: ReferenceSet, window: SlidingWindow) -> float:
    """Kolmogorov-Smirnov distance between reference and window ECDFs.

    Exact supremum over all evaluation points; always in [0, 1].
    """
    if reference.dim != 1 or window.dim != 1:
        raise ValueError("the KS distance is defined for scalar summaries only")
    m = len(window)
    if m == 0:
        raise ValueError("window is empty")
    if window.ks_reference is reference:
        return _ks_from_counts(
            window._left_counts, window._right_counts, reference.n, m
        )
    wsort = np.sort(window.scalar_values())
    left = np.searchsorted(reference.sorted_values, wsort, side="left")
    right = np.searchsorted(reference.sorted_values, wsort, side="right")
    return _ks_from_counts(left, right, reference.n, m)


def mean_difference(reference: ReferenceSet, window: SlidingWindow) -> float:
    """Reference mean minus window mean (scalar summaries)."""
    if reference.dim != 1 or window.dim != 1:
        raise ValueError("the mean difference is defined for scalar summaries only")
    m = len(window)
    if m == 0:
        raise ValueError("window is empty")
    return float(reference.scalar_mean - np.sum(window.scalar_values()) / m)


def mmd2_u(reference: ReferenceSet, window: SlidingWindow, kernel: Kernel) -> float:
    """Unbiased estimate of the squared maximum mean discrepancy.

    1/(n(n-1)) sum_{i!=j} k(x_i, x_j) + 1/(m(m-1)) sum_{i!=j} k(y_i, y_j)
    - 2/(nm) sum_{i,j} k(x_i, y_j); zero-mean under equality of the two
    distributions, so negative values are normal.
    """
    n = reference.n
    m = len(window)
    if n < 2 or m < 2:
        raise ValueError("mmd2_u needs at least 2 points on each side")
    if window.kernel is kernel and window.kernel_reference is reference:
        b = window.window_kernel_sum
        c = window.cross_kernel_sum
    else:
        vals = window.values()
        K = kernel.matrix(vals, vals)
        b = float(K.sum() - np.trace(K))
        c = float(kernel.matrix(reference.values, vals).sum())
    a = reference.kernel_self_sum(kernel)
    return a / (n * (n - 1)) + b / (m * (m - 1)) - 2.0 * c / (n * m)
