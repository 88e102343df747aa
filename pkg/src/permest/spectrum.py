"""Truncated/small split of ``|det A|`` and small-singular-value surveys.

With singular values ``sigma`` (ascending) and a threshold ``eps``::

    log det_trunc = sum_i max(log eps, log sigma_i)
    log det_small = sum_i min(log sigma_i - log eps, 0)

so the two logs add up to ``log|det A|``. The truncated part equals one half of
``sum log^eps(sigma_i^2)`` with ``log^eps(x) = max(2 log eps, log x)`` and
``log^eps(0) = 2 log eps``.

Index convention: singular values are stored ascending, so the smallest one is
``sigma[0]`` (``sigma_min``) and "the k-th smallest" is ``sigma[k - 1]``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .linalg import SingularValues, rank_tolerance, singular_values
from .matrix import EntryModel, SeededSource, as_array, as_square_array, draw


def paper_epsilon(n):
    """Default threshold ``n^(1/6)``."""
    return float(n) ** (1.0 / 6.0)


@dataclass(frozen=True, eq=False)
class SpectrumSummary:
    sigma: SingularValues
    epsilon: float
    log_det_trunc: float
    log_det_small: float
    s_eps: int
    sigma_min: float

    @property
    def log_abs_det(self):
        return self.log_det_trunc + self.log_det_small

    def to_dict(self):
        return {
            "epsilon": self.epsilon,
            "sigma": self.sigma.sigma.tolist(),
            "log_det_trunc": self.log_det_trunc,
            "log_det_small": None if self.log_det_small == -math.inf else self.log_det_small,
            "s_eps": self.s_eps,
            "sigma_min": self.sigma_min,
        }


def _check_epsilon(epsilon):
    if not epsilon > 0 or not math.isfinite(epsilon):
        raise DomainError(f"epsilon must be a positive finite number, got {epsilon!r}")


def _log_sigma(sigma):
    with np.errstate(divide="ignore"):
        return np.log(sigma)


def truncated_log(x, epsilon):
    """``max(2 log eps, log x)`` elementwise; ``x = 0`` maps to ``2 log eps``."""
    _check_epsilon(epsilon)
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.maximum(2.0 * math.log(epsilon), np.log(x))


def _split(sv: SingularValues, epsilon, tol=0.0):
    # sigma_min within the rank tolerance counts as an exact zero, matching log_det_lu
    log_eps = math.log(epsilon)
    logs = _log_sigma(sv.sigma)
    trunc = float(np.sum(np.maximum(logs, log_eps)))
    if sv.sigma[0] <= tol:
        small = -math.inf
    else:
        small = float(np.sum(np.minimum(logs - log_eps, 0.0)))
    return trunc, small


def spectrum_split(A, epsilon) -> SpectrumSummary:
    _check_epsilon(epsilon)
    arr = as_square_array(A)
    sv = singular_values(arr)
    trunc, small = _split(sv, epsilon, rank_tolerance(arr))
    return SpectrumSummary(
        sigma=sv,
        epsilon=float(epsilon),
        log_det_trunc=trunc,
        log_det_small=small,
        s_eps=int(np.count_nonzero(sv.sigma <= epsilon)),
        sigma_min=sv.sigma_min,
    )


def truncated_log_statistic(A, epsilon):
    """``log det_trunc A = 1/2 sum over eigenvalues x of A A^T of log^eps(x)``."""
    _check_epsilon(epsilon)
    sv = singular_values(as_square_array(A))
    return 0.5 * float(np.sum(truncated_log(sv.sigma**2, epsilon)))


def detsmall_bound_check(A, epsilon):
    """``(log det_small, s_eps * min(0, log(sigma_min / eps)))``; expect ``0 >= lhs >= rhs``."""
    summary = spectrum_split(A, epsilon)
    if summary.s_eps == 0:
        return summary.log_det_small, 0.0
    if summary.log_det_small == -math.inf:
        return summary.log_det_small, -math.inf
    rhs = summary.s_eps * min(0.0, math.log(summary.sigma_min / epsilon))
    return summary.log_det_small, rhs


def _sample_fn(model, n):
    """Sampler ``source -> ndarray`` for an EntryModel or a fixed matrix."""
    if isinstance(model, EntryModel):
        return lambda source: draw(model, n, source.generator())
    fixed = as_square_array(model)
    if fixed.shape[0] != n:
        raise DomainError(f"fixed matrix is {fixed.shape[0]}x{fixed.shape[0]}, expected n={n}")
    return lambda source: fixed


def _survey(model, n, trials, source, stat, threads):
    sample = _sample_fn(model, n)

    def one(t):
        return stat(singular_values(sample(source.substream(t))).sigma)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return np.array(list(pool.map(one, range(trials))))
    return np.array([one(t) for t in range(trials)])


def sigma_min_survey(model, n, trials, floor_exponent, source: SeededSource, threads=1):
    """Smallest observed ``sigma_min`` and the number of trials below ``n^-floor_exponent``.

    ``model`` may also be a fixed matrix (every trial then sees the same draw).
    """
    if trials < 1:
        raise DomainError("trials must be positive")
    mins = _survey(model, n, trials, source, lambda s: s[0], threads)
    floor = float(n) ** (-float(floor_exponent))
    return float(mins.min()), int(np.count_nonzero(mins < floor))


def small_sv_threshold(n, r, c_bound):
    return r * c_bound**2 / (2.0 * math.sqrt(n - r))


def small_sv_count_survey(model, n, r, trials, c_bound, source: SeededSource, threads=1):
    """Number of trials where the ``2r``-th smallest singular value is at most
    ``r c^2 / (2 sqrt(n - r))``."""
    if r < 1 or 2 * r > n:
        raise DomainError(f"need 1 <= 2r <= n, got r={r}, n={n}")
    threshold = small_sv_threshold(n, r, c_bound)
    values = _survey(model, n, trials, source, lambda s: s[2 * r - 1], threads)
    return int(np.count_nonzero(values <= threshold))


def s_eps_count(A, epsilon):
    _check_epsilon(epsilon)
    return int(np.count_nonzero(singular_values(as_array(A)).sigma <= epsilon))
