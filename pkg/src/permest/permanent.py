"""Exact permanents: permutation expansion and Ryser's formula.

``permanent_ryser`` uses the Nijenhuis-Wilf form of Ryser's inclusion-exclusion,
which centres each row sum by half the row total and so only visits the
``2**(n-1)`` subsets of the first ``n - 1`` columns. Subsets are walked in
Gray-code order (one column added or removed per step, O(n) work), split into a
fixed number of contiguous blocks. Each block keeps a Neumaier-compensated sum
and the block results are combined with ``math.fsum``. The block count depends
only on ``n``, so the result is identical for any number of worker threads.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass

import numba
import numpy as np

from .errors import SizeError
from .linalg import LogSignedValue
from .matrix import as_square_array

NAIVE_LIMIT = 10
RYSER_LIMIT = 30
EXACT_SMALL_LIMIT = 12
RYSER_BLOCKS = 256
_NAIVE_CHUNK = 1 << 16

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the TBB layer shipped in some images is too old and warns on first use
    numba.config.THREADING_LAYER = "workqueue"


@dataclass(frozen=True)
class PermanentValue:
    value: LogSignedValue
    exact_small: float | None = None

    @property
    def log_abs(self):
        return self.value.log_abs

    @property
    def sign(self):
        return self.value.sign


def _finish(total, arr):
    n = arr.shape[0]
    if total < 0 and np.all(arr >= 0):
        # rounding residue of a true zero; nonnegative matrices have per >= 0
        total = 0.0
    return PermanentValue(
        LogSignedValue.from_float(total),
        float(total) if n <= EXACT_SMALL_LIMIT else None,
    )


def permanent_naive(A) -> PermanentValue:
    """Sum over all ``n!`` permutations of ``prod_i A[i, perm[i]]``."""
    arr = as_square_array(A)
    n = arr.shape[0]
    if n > NAIVE_LIMIT:
        raise SizeError(f"permanent_naive supports n <= {NAIVE_LIMIT}; use permanent_ryser for n={n}")
    rows = np.arange(n)
    perms = itertools.permutations(range(n))
    partials = []
    while True:
        chunk = np.array(list(itertools.islice(perms, _NAIVE_CHUNK)), dtype=np.intp)
        if chunk.size == 0:
            break
        partials.extend(np.prod(arr[rows, chunk], axis=1).tolist())
        if len(partials) > _NAIVE_CHUNK:
            partials = [math.fsum(partials)]
    return _finish(math.fsum(partials), arr)


@numba.njit(cache=True)
def _ryser_block(a, centre, start, stop):
    n = a.shape[0]
    row_sums = centre.copy()
    gray = start ^ (start >> 1)
    parity = 0
    for j in range(n - 1):
        if (gray >> j) & 1:
            parity += 1
            for i in range(n):
                row_sums[i] += a[i, j]
    sign = 1.0 if parity % 2 == 0 else -1.0
    s = 0.0
    comp = 0.0
    k = start
    while True:
        p = sign
        for i in range(n):
            p *= row_sums[i]
        t = s + p
        if abs(s) >= abs(p):
            comp += (s - t) + p
        else:
            comp += (p - t) + s
        s = t
        k += 1
        if k >= stop:
            break
        # gray(k-1) -> gray(k) flips the bit at the trailing-zero count of k
        j = 0
        kk = k
        while (kk & 1) == 0:
            kk >>= 1
            j += 1
        if ((k ^ (k >> 1)) >> j) & 1:
            for i in range(n):
                row_sums[i] += a[i, j]
        else:
            for i in range(n):
                row_sums[i] -= a[i, j]
        sign = -sign
    return s, comp


@numba.njit(parallel=True, cache=True)
def _ryser_blocks(a, centre, edges):
    nblocks = edges.shape[0] - 1
    out = np.empty((nblocks, 2))
    for b in numba.prange(nblocks):
        s, comp = _ryser_block(a, centre, edges[b], edges[b + 1])
        out[b, 0] = s
        out[b, 1] = comp
    return out


def permanent_ryser(A, blocks=RYSER_BLOCKS) -> PermanentValue:
    """Exact permanent by Ryser's formula for ``n <= RYSER_LIMIT``."""
    arr = np.ascontiguousarray(as_square_array(A), dtype=np.float64)
    n = arr.shape[0]
    if n > RYSER_LIMIT:
        raise SizeError(f"permanent_ryser supports n <= {RYSER_LIMIT}, got n={n}")
    centre = arr[:, n - 1] - 0.5 * arr.sum(axis=1)
    total_subsets = 1 << (n - 1)
    nblocks = min(blocks, total_subsets)
    edges = np.array([total_subsets * b // nblocks for b in range(nblocks + 1)], dtype=np.int64)
    parts = _ryser_blocks(arr, centre, edges)
    total = math.fsum(parts.ravel().tolist())
    total *= 2.0 if n % 2 == 1 else -2.0
    return _finish(total, arr)


def permanent(A) -> PermanentValue:
    """Exact permanent, choosing the naive expansion for tiny matrices."""
    n = as_square_array(A).shape[0]
    return permanent_naive(A) if n <= 6 else permanent_ryser(A)


def log_factorial(n):
    return math.lgamma(n + 1)

