"""Godsil-Gutman and Barvinok determinant estimators for the permanent.

For a nonnegative matrix ``M`` the lifted matrix ``A_ij = sqrt(M_ij) u_ij``
with iid mean-zero, variance-one ``u_ij`` satisfies ``E[det(A)^2] = per(M)``.
Random signs give the Godsil-Gutman estimator, standard normals give Barvinok's.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError, SizeError
from .linalg import ZERO, LogSignedValue, log_det_lu
from .matrix import (
    STREAM_STRIDE,
    DenseMatrix,
    EntryModel,
    SeededSource,
    as_square_array,
    barvinok_lift,
    draw,
    godsil_gutman_lift,
)
from .permanent import RYSER_LIMIT, PermanentValue, permanent_naive, permanent_ryser

EXHAUSTIVE_LIMIT = 4
SWEEP_QUANTILES = (0.5, 0.9, 0.99)


class EstimatorKind(str, enum.Enum):
    GODSIL_GUTMAN = "gg"
    BARVINOK = "barvinok"


class Aggregation(str, enum.Enum):
    MEAN = "mean"
    MEDIAN = "median"
    SINGLE = "single"


@dataclass(frozen=True)
class EstimatorConfig:
    kind: EstimatorKind = EstimatorKind.GODSIL_GUTMAN
    trials: int = 1
    aggregation: Aggregation = Aggregation.MEAN
    seed: SeededSource = field(default_factory=SeededSource)

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", EstimatorKind(self.kind))
            object.__setattr__(self, "aggregation", Aggregation(self.aggregation))
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
        if not isinstance(self.trials, (int, np.integer)) or self.trials < 1:
            raise ConfigurationError("trials must be a positive integer")
        if self.aggregation is Aggregation.SINGLE and self.trials != 1:
            raise ConfigurationError("single aggregation requires trials = 1")


@dataclass(frozen=True, eq=False)
class EstimateReport:
    estimate: LogSignedValue
    per_trial: tuple
    exact: PermanentValue | None
    log_ratio: float | None
    trials_zero: int
    seed_provenance: tuple
    kind: EstimatorKind
    aggregation: Aggregation

    @property
    def estimate_only(self):
        return self.exact is None

    def to_dict(self, verbose=False):
        seed, first, last = self.seed_provenance
        d = {
            "kind": self.kind.value,
            "aggregation": self.aggregation.value,
            "trials": len(self.per_trial),
            "estimate_log": self.estimate.log_abs,
            "estimate_sign": self.estimate.sign,
            "exact_log": None if self.exact is None else self.exact.log_abs,
            "log_ratio": self.log_ratio,
            "trials_zero": self.trials_zero,
            "seed": seed,
            "streams": [first, last],
            "estimate_only": self.estimate_only,
        }
        if verbose:
            d["per_trial_log"] = [v.log_abs for v in self.per_trial]
        return d


def log_mean_exp(logs) -> LogSignedValue:
    """Linear-domain mean of ``exp(logs)`` as a LogSignedValue (``-inf`` = 0)."""
    logs = np.asarray(logs, dtype=np.float64)
    finite = logs[np.isfinite(logs)]
    if finite.size == 0:
        return ZERO
    top = finite.max()
    return LogSignedValue(1, top + math.log(math.fsum(np.exp(finite - top))) - math.log(logs.size))


def log_median_exp(logs) -> LogSignedValue:
    """Linear-domain median (mean of the middle pair for even counts)."""
    s = np.sort(np.asarray(logs, dtype=np.float64))
    k = s.size
    if k % 2:
        mid = s[k // 2]
    else:
        mid = np.logaddexp(s[k // 2 - 1], s[k // 2]) - math.log(2.0)
    return LogSignedValue(1, mid) if np.isfinite(mid) else ZERO


def aggregate(logs, aggregation) -> LogSignedValue:
    aggregation = Aggregation(aggregation)
    if aggregation is Aggregation.MEAN:
        return log_mean_exp(logs)
    if aggregation is Aggregation.MEDIAN:
        return log_median_exp(logs)
    if len(logs) != 1:
        raise ConfigurationError("single aggregation requires exactly one trial")
    return LogSignedValue(1, logs[0]) if np.isfinite(logs[0]) else ZERO


def _lift(kind):
    return godsil_gutman_lift if kind is EstimatorKind.GODSIL_GUTMAN else barvinok_lift


def log_det_squared(A):
    """``log(det(A)^2)``, ``-inf`` for singular ``A``."""
    v = log_det_lu(A)
    return -math.inf if v.sign == 0 else 2.0 * v.log_abs


def trial_log_values(M, kind, source: SeededSource, trials, threads=1):
    """``log det(A_t)^2`` for trials ``t = 0..trials-1`` on streams ``source.stream + t``."""
    arr = as_square_array(M)
    if np.any(arr < 0):
        raise DomainError("estimators require a matrix with nonnegative entries")
    lift = _lift(EstimatorKind(kind))

    def one(t):
        return log_det_squared(lift(arr, source.substream(t)))

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, range(trials)))
    else:
        values = [one(t) for t in range(trials)]
    return np.array(values)


def estimate_permanent(M, cfg: EstimatorConfig, exact="auto", threads=1) -> EstimateReport:
    """Run ``cfg.trials`` lifted-determinant trials and aggregate ``det^2``.

    ``exact`` is ``"auto"`` (Ryser oracle when ``n <= 30``), ``None`` (skip), or a
    precomputed :class:`PermanentValue`.
    """
    arr = as_square_array(M)
    n = arr.shape[0]
    logs = trial_log_values(arr, cfg.kind, cfg.seed, cfg.trials, threads)
    estimate = aggregate(logs, cfg.aggregation)

    if isinstance(exact, str):
        if exact != "auto":
            raise ConfigurationError(f"exact must be 'auto', None or a PermanentValue, got {exact!r}")
        exact = permanent_ryser(arr) if n <= RYSER_LIMIT else None
    log_ratio = None
    if exact is not None and exact.sign != 0 and estimate.sign != 0:
        log_ratio = estimate.log_abs - exact.log_abs

    return EstimateReport(
        estimate=estimate,
        per_trial=tuple(LogSignedValue(1, x) if np.isfinite(x) else ZERO for x in logs),
        exact=exact,
        log_ratio=log_ratio,
        trials_zero=int(np.count_nonzero(~np.isfinite(logs))),
        seed_provenance=(cfg.seed.seed, cfg.seed.stream, cfg.seed.stream + cfg.trials - 1),
        kind=cfg.kind,
        aggregation=cfg.aggregation,
    )


def all_sign_matrices(n):
    """All ``2**(n*n)`` matrices with entries in {-1, +1}, shape ``(2**(n*n), n, n)``."""
    k = n * n
    codes = np.arange(1 << k, dtype=np.int64)[:, None]
    bits = (codes >> np.arange(k, dtype=np.int64)) & 1
    return (1.0 - 2.0 * bits).reshape(-1, n, n)


def unbiasedness_exhaustive(M):
    """``(mean of det(A)^2 over every sign lift, per(M))`` for ``n <= 4``."""
    arr = as_square_array(M)
    n = arr.shape[0]
    if n > EXHAUSTIVE_LIMIT:
        raise SizeError(f"exhaustive enumeration supports n <= {EXHAUSTIVE_LIMIT}, got n={n}")
    if np.any(arr < 0):
        raise DomainError("estimators require a matrix with nonnegative entries")
    lifted = np.sqrt(arr) * all_sign_matrices(n)
    dets = np.linalg.det(lifted)
    mean = math.fsum((dets * dets).tolist()) / len(dets)
    per = permanent_naive(arr)
    return mean, per.exact_small


def uniform_family(low=1.0, high=2.0):
    """Matrix family with iid entries uniform on ``[low, high]``."""

    def family(n, source):
        return DenseMatrix._wrap(source.generator().uniform(low, high, size=(n, n)))

    return family


def _family_matrix(family, n, source):
    if isinstance(family, EntryModel):
        arr = draw(family, n, source.generator())
    elif callable(family):
        arr = as_square_array(family(n, source))
    else:
        arr = as_square_array(family)
    if arr.shape[0] != n:
        raise ConfigurationError(f"family produced a {arr.shape[0]}x{arr.shape[0]} matrix, expected n={n}")
    if np.any(arr < 0):
        raise DomainError("estimators require a matrix with nonnegative entries")
    return arr


def empirical_quantiles(values, qs=SWEEP_QUANTILES):
    """Inverse-CDF quantiles (no interpolation, so infinite atoms stay meaningful)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return {q: math.nan for q in qs}
    return {q: float(np.quantile(values, q, method="inverted_cdf")) for q in qs}


def ratio_envelope(n):
    """``n^(2/3) log n``."""
    return n ** (2.0 / 3.0) * math.log(n)


@dataclass(frozen=True)
class SweepRow:
    n: int
    quantiles: dict
    finite_quantiles: dict
    trials: int
    trials_zero: int
    exact_log: float
    envelope: float

    def to_dict(self):
        return {
            "n": self.n,
            "trials": self.trials,
            "trials_zero": self.trials_zero,
            "exact_log": self.exact_log,
            "envelope": self.envelope,
            "quantiles": {f"q{round(q * 100)}": v for q, v in self.quantiles.items()},
            "finite_quantiles": {f"q{round(q * 100)}": v for q, v in self.finite_quantiles.items()},
        }


def ratio_row(M, trials, kind, source, exact=None, threads=1) -> SweepRow:
    """|log(det^2 / per)| quantiles for one fixed matrix."""
    arr = as_square_array(M)
    n = arr.shape[0]
    if n > RYSER_LIMIT:
        raise SizeError(f"ratio diagnostics need the exact oracle (n <= {RYSER_LIMIT}), got n={n}")
    if exact is None:
        exact = permanent_ryser(arr)
    logs = trial_log_values(arr, kind, source, trials, threads)
    if exact.sign == 0:
        raise DomainError("permanent is zero; approximation ratio undefined")
    abs_ratio = np.abs(logs - exact.log_abs)
    finite = abs_ratio[np.isfinite(abs_ratio)]
    return SweepRow(
        n=n,
        quantiles=empirical_quantiles(abs_ratio),
        finite_quantiles=empirical_quantiles(finite),
        trials=trials,
        trials_zero=int(abs_ratio.size - finite.size),
        exact_log=exact.log_abs,
        envelope=ratio_envelope(n) if n > 1 else 0.0,
    )


def approximation_ratio_sweep(family, sizes, trials_per_size, cfg: EstimatorConfig, threads=1):
    """Per size: draw one matrix from ``family``, then quantiles of |log(det^2/per)|.

    ``family`` is an :class:`EntryModel`, a callable ``(n, source) -> matrix`` or a
    fixed matrix. Size ``k`` (0-based) draws its matrix from stream
    ``cfg.seed.stream + k * STREAM_STRIDE`` and its trials from the following streams.
    """
    sizes = list(sizes)
    for n in sizes:
        if n > RYSER_LIMIT:
            raise SizeError(f"ratio sweep needs the exact oracle (n <= {RYSER_LIMIT}), got n={n}")
    rows = []
    for k, n in enumerate(sizes):
        base = cfg.seed.substream(k * STREAM_STRIDE)
        arr = _family_matrix(family, n, base)
        rows.append(ratio_row(arr, trials_per_size, cfg.kind, base.substream(1), threads=threads))
    return rows
