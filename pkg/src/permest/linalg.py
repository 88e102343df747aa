"""Log-domain determinants, row distances and singular values.

Two independent routes to ``log|det A|`` are provided: pivoted LU
(:func:`log_det_lu`) and the product of row-to-span distances
(:func:`log_det_distances`), computed by classical Gram-Schmidt with one full
re-orthogonalization pass (CGS2). A third route is the sum of log singular values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import ConfigurationError, DegenerateInputError
from .matrix import as_array, as_square_array

# Distances or pivots below RANK_RTOL * max|a_ij| * n count as exact zeros.
RANK_RTOL = 1e-12
LOG_ABS_LIMIT = 1e9


@dataclass(frozen=True)
class LogSignedValue:
    """A real number stored as ``sign * exp(log_abs)``.

    Zero is canonically ``LogSignedValue(0, -inf)``.
    """

    sign: int
    log_abs: float

    def __post_init__(self):
        sign = int(self.sign)
        log_abs = float(self.log_abs)
        if sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign!r}")
        if math.isnan(log_abs) or log_abs == math.inf:
            raise ValueError(f"log_abs must be finite or -inf, got {log_abs}")
        if sign == 0 or log_abs == -math.inf:
            sign, log_abs = 0, -math.inf
        elif abs(log_abs) > LOG_ABS_LIMIT:
            raise OverflowError(f"|log_abs| = {abs(log_abs):g} exceeds {LOG_ABS_LIMIT:g}")
        object.__setattr__(self, "sign", sign)
        object.__setattr__(self, "log_abs", log_abs)

    @classmethod
    def from_float(cls, x):
        x = float(x)
        if x == 0.0:
            return ZERO
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    def to_float(self):
        if self.sign == 0:
            return 0.0
        try:
            return self.sign * math.exp(self.log_abs)
        except OverflowError:
            return self.sign * math.inf

    @property
    def is_zero(self):
        return self.sign == 0

    def __mul__(self, other):
        if not isinstance(other, LogSignedValue):
            return NotImplemented
        if self.sign == 0 or other.sign == 0:
            return ZERO
        return LogSignedValue(self.sign * other.sign, self.log_abs + other.log_abs)

    def __truediv__(self, other):
        if not isinstance(other, LogSignedValue):
            return NotImplemented
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero LogSignedValue")
        if self.sign == 0:
            return ZERO
        return LogSignedValue(self.sign * other.sign, self.log_abs - other.log_abs)

    def __pow__(self, k):
        k = int(k)
        if self.sign == 0:
            return ONE if k == 0 else ZERO
        return LogSignedValue(self.sign**k, k * self.log_abs)

    def __abs__(self):
        return LogSignedValue(abs(self.sign), self.log_abs)


ZERO = LogSignedValue(0, -math.inf)
ONE = LogSignedValue(1, 0.0)


@dataclass(frozen=True, eq=False)
class RowDistances:
    """``d[i]`` is the distance from row ``i`` to the span of rows ``0..i-1``."""

    d: np.ndarray

    @property
    def log_abs_det(self):
        if np.any(self.d == 0):
            return -math.inf
        return float(np.sum(np.log(self.d)))


@dataclass(frozen=True, eq=False)
class SingularValues:
    """Singular values sorted ascending: ``sigma[0]`` is the smallest."""

    sigma: np.ndarray

    @property
    def sigma_min(self):
        return float(self.sigma[0])

    @property
    def sigma_max(self):
        return float(self.sigma[-1])

    @property
    def log_abs_det(self):
        if self.sigma[0] == 0:
            return -math.inf
        return float(np.sum(np.log(self.sigma)))

    def __len__(self):
        return len(self.sigma)


def rank_tolerance(arr):
    return RANK_RTOL * float(np.max(np.abs(arr), initial=0.0)) * max(arr.shape)


def log_det_lu(A) -> LogSignedValue:
    """Sign and ``log|det A|`` from a row-pivoted LU factorization."""
    arr = as_square_array(A)
    n = arr.shape[0]
    lu, piv, info = lapack.dgetrf(arr)
    if info < 0:
        raise RuntimeError(f"dgetrf: illegal argument {-info}")
    diag = np.diagonal(lu)
    if np.any(np.abs(diag) <= rank_tolerance(arr)):
        return ZERO
    swaps = int(np.count_nonzero(piv != np.arange(n)))
    sign = -1 if (swaps + int(np.count_nonzero(diag < 0))) % 2 else 1
    return LogSignedValue(sign, float(np.sum(np.log(np.abs(diag)))))


def row_distances(A) -> RowDistances:
    """Row-to-span distances of a (possibly rectangular) matrix, in row order.

    Rows whose distance falls below the rank tolerance get ``d = 0`` and do not
    extend the basis.
    """
    arr = as_array(A)
    m, width = arr.shape
    tol = rank_tolerance(arr)
    basis = np.zeros((min(m, width), width))
    k = 0
    d = np.zeros(m)
    for i in range(m):
        v = arr[i].copy()
        if k:
            q = basis[:k]
            v -= q.T @ (q @ v)
            v -= q.T @ (q @ v)  # second pass restores orthogonality lost to cancellation
        dist = float(np.linalg.norm(v))
        if dist <= tol or k == width:
            continue
        d[i] = dist
        basis[k] = v / dist
        k += 1
    d.flags.writeable = False
    return RowDistances(d)


def log_det_distances(A):
    """``(LogSignedValue, RowDistances)`` with ``log|det A| = sum(log d_i)``.

    The sign is taken from :func:`log_det_lu`; distances carry no sign.
    """
    arr = as_square_array(A)
    dists = row_distances(arr)
    log_abs = dists.log_abs_det
    sign = log_det_lu(arr).sign
    if sign == 0 or log_abs == -math.inf:
        return ZERO, dists
    return LogSignedValue(sign, log_abs), dists


def singular_values(A) -> SingularValues:
    arr = as_array(A)
    sigma = np.linalg.svd(arr, compute_uv=False)[::-1].copy()
    sigma.flags.writeable = False
    return SingularValues(sigma)


def distances_to_rest(A) -> np.ndarray:
    """Distance from each row to the span of all the other rows."""
    arr = as_array(A)
    m = arr.shape[0]
    out = np.empty(m)
    for i in range(m):
        order = [k for k in range(m) if k != i] + [i]
        out[i] = row_distances(arr[order]).d[-1]
    return out


def distance_identity_check(A, m=None):
    """``(sum d_i^-2, sum sigma_i^-2)`` for an ``m x n`` matrix with ``m <= n``.

    ``d_i`` is the distance from row ``i`` to the span of the remaining rows
    (equivalently ``d_i^-2`` is the ``i``-th diagonal entry of ``(A A^T)^-1``),
    which makes the two sums equal for full-row-rank input. Rank deficiency
    raises :class:`DegenerateInputError`.
    """
    arr = as_array(A)
    rows, cols = arr.shape
    if m is not None and m != rows:
        raise ConfigurationError(f"m={m} does not match the {rows} rows of A")
    if rows > cols:
        raise ConfigurationError("distance identity needs m <= n (at most as many rows as columns)")
    sigma = singular_values(arr).sigma
    if sigma[0] <= rank_tolerance(arr):
        raise DegenerateInputError("matrix is not of full row rank")
    d = distances_to_rest(arr)
    if np.any(d == 0):
        raise DegenerateInputError("matrix is not of full row rank")
    return float(np.sum(d**-2.0)), float(np.sum(sigma**-2.0))
