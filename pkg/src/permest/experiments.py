"""Seeded Monte Carlo experiments on random determinants and the estimators.

Each experiment is a pure function of its parameters and a :class:`SeededSource`:
trial ``t`` always uses ``source.substream(t)``.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import digamma, kolmogorov, ndtr, polygamma

from . import __version__
from .errors import ConfigurationError
from .estimators import (
    EstimatorKind,
    log_det_squared,
    ratio_envelope,
    ratio_row,
    uniform_family,
)
from .linalg import LogSignedValue, log_det_lu
from .matrix import STREAM_STRIDE, EntryModel, SeededSource, draw, standard_normal
from .permanent import PermanentValue, log_factorial
from .report import dumps, write_csv, write_text
from .spectrum import (
    paper_epsilon,
    sigma_min_survey,
    small_sv_count_survey,
    truncated_log_statistic,
)

MIN_CLT_TRIALS = 100
MIN_CONCENTRATION_TRIALS = 100
MIN_SPEC_TRIALS = 30


def _map(fn, count, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return np.array(list(pool.map(fn, range(count))))
    return np.array([fn(t) for t in range(count)])


# --- Kolmogorov-Smirnov -----------------------------------------------------


def ks_statistic(sample, cdf=ndtr):
    """Sup distance between the empirical CDF of ``sample`` and ``cdf``."""
    x = np.sort(np.asarray(sample, dtype=np.float64))
    m = x.size
    f = cdf(x)
    upper = np.arange(1, m + 1) / m - f
    lower = f - np.arange(m) / m
    return float(max(upper.max(), lower.max()))


def ks_pvalue(distance, effective_size):
    """Asymptotic Kolmogorov tail probability ``P(K > sqrt(m) D)``."""
    return float(kolmogorov(math.sqrt(effective_size) * distance))


def ks_two_sample(x, y):
    """``(distance, asymptotic p-value)`` between two empirical distributions."""
    x = np.sort(np.asarray(x, dtype=np.float64))
    y = np.sort(np.asarray(y, dtype=np.float64))
    grid = np.concatenate((x, y))
    fx = np.searchsorted(x, grid, side="right") / x.size
    fy = np.searchsorted(y, grid, side="right") / y.size
    d = float(np.max(np.abs(fx - fy)))
    return d, ks_pvalue(d, x.size * y.size / (x.size + y.size))


# --- log-normal law of |det| for Gaussian matrices ---------------------------


class CltRoute(str, enum.Enum):
    DIRECT = "direct"
    CHI = "chi"


@dataclass(frozen=True)
class CltSample:
    n: int
    statistic: float
    route: CltRoute


def clt_statistic(log_abs_det, n):
    """``(log|det A| - 1/2 log((n-1)!)) / sqrt(1/2 log n)``."""
    return (log_abs_det - 0.5 * math.lgamma(n)) / math.sqrt(0.5 * math.log(n))


def chi_square(gen, dof):
    """Chi-square variate with integer ``dof`` as a sum of squared normals."""
    z = standard_normal(gen, (dof,))
    return float(np.dot(z, z))


def chi_log_abs_det(n, source: SeededSource):
    """``log|det|`` of an n x n Gaussian matrix built from independent distances.

    Row ``i`` (1-based) is at squared distance ``chi^2(n - i + 1)`` from the span
    of the previous rows.
    """
    gen = source.generator()
    d2 = np.array([chi_square(gen, n - i + 1) for i in range(1, n + 1)])
    return 0.5 * float(np.sum(np.log(d2)))


def direct_log_abs_det(n, source: SeededSource):
    value = log_det_lu(draw(EntryModel.gaussian(), n, source.generator()))
    return value.log_abs


def clt_sample(n, route, source: SeededSource) -> CltSample:
    route = CltRoute(route)
    fn = direct_log_abs_det if route is CltRoute.DIRECT else chi_log_abs_det
    return CltSample(n, clt_statistic(fn(n, source), n), route)


def clt_statistics(n, trials, route, source: SeededSource, threads=1):
    route = CltRoute(route)
    fn = direct_log_abs_det if route is CltRoute.DIRECT else chi_log_abs_det
    logs = _map(lambda t: fn(n, source.substream(t)), trials, threads)
    return (logs - 0.5 * math.lgamma(n)) / math.sqrt(0.5 * math.log(n))


@dataclass(frozen=True, eq=False)
class CltResult:
    samples: list
    ks_distance: float
    ks_pvalue: float

    @property
    def statistics(self):
        return np.array([s.statistic for s in self.samples])


def clt_experiment(n, trials, route, source: SeededSource, threads=1) -> CltResult:
    """Sample the normalized statistic and compare it with N(0, 1) by KS."""
    if n < 10:
        raise ConfigurationError("clt_experiment needs n >= 10")
    if trials < MIN_CLT_TRIALS:
        raise ConfigurationError(f"clt_experiment needs at least {MIN_CLT_TRIALS} trials")
    route = CltRoute(route)
    stats = clt_statistics(n, trials, route, source, threads)
    d = ks_statistic(stats)
    return CltResult([CltSample(n, float(s), route) for s in stats], d, ks_pvalue(d, trials))


def clt_finite_n_moments(n):
    """Exact mean and standard deviation of the normalized statistic at size ``n``.

    Uses ``E log chi^2_k = log 2 + digamma(k/2)`` and
    ``Var log chi^2_k = trigamma(k/2)``.
    """
    k = np.arange(1, n + 1) / 2.0
    mean_log = 0.5 * float(np.sum(math.log(2.0) + digamma(k))) - 0.5 * math.lgamma(n)
    var_log = 0.25 * float(np.sum(polygamma(1, k)))
    scale = math.sqrt(0.5 * math.log(n))
    return mean_log / scale, math.sqrt(var_log) / scale


# --- typical value of det^2 ---------------------------------------------------


@dataclass(frozen=True)
class TypicalValueResult:
    sizes: tuple
    log_median_ratios: tuple  # log(median(det^2) / n!) per size
    slope: float | None

    @property
    def median_ratios(self):
        return tuple(math.exp(v) for v in self.log_median_ratios)


def log_median_ratio(n, trials, source: SeededSource, threads=1):
    """``log(median(det(A)^2) / n!)`` over iid standard Gaussian ``n x n`` matrices."""
    model = EntryModel.gaussian()
    logs = _map(lambda t: log_det_squared(draw(model, n, source.substream(t).generator())), trials, threads)
    return float(np.median(logs)) - log_factorial(n)


def typical_value_experiment(sizes, trials, source: SeededSource, threads=1) -> TypicalValueResult:
    """Median of ``det^2 / n!`` per size and the least-squares slope against ``log n``."""
    if isinstance(sizes, int):
        sizes = [sizes]
    sizes = tuple(sizes)
    ratios = tuple(
        log_median_ratio(n, trials, source.substream(k * STREAM_STRIDE), threads)
        for k, n in enumerate(sizes)
    )
    slope = None
    if len(sizes) >= 2:
        slope = float(np.polyfit(np.log(sizes), ratios, 1)[0])
    return TypicalValueResult(sizes, ratios, slope)


# --- concentration of the truncated log-determinant ---------------------------


def trunc_concentration_experiment(model, n, trials, epsilon, source: SeededSource, threads=1):
    """``(std of log det_trunc over trials, sqrt(n) log n / epsilon)``."""
    if trials < MIN_CONCENTRATION_TRIALS:
        raise ConfigurationError(f"needs at least {MIN_CONCENTRATION_TRIALS} trials")
    values = _map(
        lambda t: truncated_log_statistic(draw(model, n, source.substream(t).generator()), epsilon),
        trials,
        threads,
    )
    return float(np.std(values, ddof=1)), math.sqrt(n) * math.log(n) / epsilon


# --- approximation ratio versus n^(2/3) log n ----------------------------------


def ratio_scaling_experiment(sizes, trials, source: SeededSource, threads=1):
    """Godsil-Gutman |log(det^2/per)| quantiles on all-ones and uniform[1, 2] matrices.

    Returns a list of dicts, one per size, with a row for each matrix family.
    """
    uniform = uniform_family(1.0, 2.0)
    out = []
    for k, n in enumerate(sizes):
        base = source.substream(k * STREAM_STRIDE)
        ones_exact = PermanentValue(LogSignedValue(1, log_factorial(n)))
        ones = ratio_row(np.ones((n, n)), trials, EstimatorKind.GODSIL_GUTMAN, base.substream(1), exact=ones_exact, threads=threads)
        mat = uniform(n, base)
        uni = ratio_row(mat, trials, EstimatorKind.GODSIL_GUTMAN, base.substream(1 + trials), threads=threads)
        out.append({"n": n, "envelope": ratio_envelope(n) if n > 1 else 0.0, "all_ones": ones, "uniform_1_2": uni})
    return out


# --- experiment specs and reports -----------------------------------------------


class ExperimentKind(str, enum.Enum):
    CLT = "clt"
    TYPICAL_VALUE = "typical_value"
    TRUNC_CONCENTRATION = "trunc_concentration"
    RATIO_SCALING = "ratio_scaling"
    SIGMA_MIN = "sigma_min"
    SMALL_SV = "small_sv"


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    name: str
    kind: ExperimentKind
    sizes: tuple
    trials: int
    model: EntryModel = field(default_factory=EntryModel.rademacher)
    epsilon: float | str = "paper"
    seed: SeededSource = field(default_factory=SeededSource)
    outputs: str | None = None
    csv: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", ExperimentKind(self.kind))
        except ValueError:
            raise ConfigurationError(f"unknown experiment kind {self.kind!r}") from None
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        if not self.sizes:
            raise ConfigurationError("sizes must be nonempty")
        if any(n < 1 for n in self.sizes):
            raise ConfigurationError("sizes must be positive")
        if self.trials < MIN_SPEC_TRIALS:
            raise ConfigurationError(f"experiments need at least {MIN_SPEC_TRIALS} trials")
        if self.epsilon != "paper" and not (isinstance(self.epsilon, (int, float)) and self.epsilon > 0):
            raise ConfigurationError("epsilon must be 'paper' or a positive number")

    def epsilon_for(self, n):
        return paper_epsilon(n) if self.epsilon == "paper" else float(self.epsilon)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        known = {"name", "kind", "sizes", "trials", "model", "epsilon", "seed", "stream", "outputs", "csv", "params"}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown experiment spec fields: {sorted(unknown)}")
        for key in ("name", "kind", "sizes", "trials"):
            if key not in d:
                raise ConfigurationError(f"experiment spec needs {key!r}")
        model = EntryModel.from_dict(d["model"]) if "model" in d else EntryModel.rademacher()
        seed = SeededSource(int(d.get("seed", SeededSource().seed)), int(d.get("stream", 0)))
        return cls(
            name=str(d["name"]),
            kind=d["kind"],
            sizes=d["sizes"],
            trials=int(d["trials"]),
            model=model,
            epsilon=d.get("epsilon", "paper"),
            seed=seed,
            outputs=d.get("outputs"),
            csv=bool(d.get("csv", False)),
            params=dict(d.get("params", {})),
        )

    def to_dict(self):
        return {
            "name": self.name,
            "kind": self.kind.value,
            "sizes": list(self.sizes),
            "trials": self.trials,
            "model": self.model.to_dict(),
            "epsilon": self.epsilon,
            "seed": self.seed.seed,
            "stream": self.seed.stream,
            "outputs": self.outputs,
            "csv": self.csv,
            "params": self.params,
        }


def _run_size(spec: ExperimentSpec, n, source, threads):
    """One size of an experiment: ``(result dict, raw per-trial values or None)``."""
    p = spec.params
    if spec.kind is ExperimentKind.CLT:
        route = p.get("route", "direct")
        routes = ["direct", "chi"] if route == "both" else [route]
        result, raw = {"n": n}, {}
        for idx, r in enumerate(routes):
            res = clt_experiment(n, spec.trials, r, source.substream(idx * STREAM_STRIDE // 2), threads)
            result[r] = {"ks_distance": res.ks_distance, "ks_pvalue": res.ks_pvalue}
            raw[r] = res.statistics
        finite_mean, finite_std = clt_finite_n_moments(n)
        result["finite_n_mean"] = finite_mean
        result["finite_n_std"] = finite_std
        if len(routes) == 2:
            d, pval = ks_two_sample(raw["direct"], raw["chi"])
            result["two_route_ks_distance"] = d
            result["two_route_ks_pvalue"] = pval
        return result, raw
    if spec.kind is ExperimentKind.TYPICAL_VALUE:
        value = log_median_ratio(n, spec.trials, source, threads)
        return {"n": n, "log_median_ratio": value, "median_ratio": math.exp(value)}, None
    if spec.kind is ExperimentKind.TRUNC_CONCENTRATION:
        eps = spec.epsilon_for(n)
        std, bound = trunc_concentration_experiment(spec.model, n, spec.trials, eps, source, threads)
        return {"n": n, "epsilon": eps, "std": std, "bound": bound}, None
    if spec.kind is ExperimentKind.RATIO_SCALING:
        row = ratio_scaling_experiment([n], spec.trials, source, threads)[0]
        return {
            "n": n,
            "envelope": row["envelope"],
            "all_ones": row["all_ones"].to_dict(),
            "uniform_1_2": row["uniform_1_2"].to_dict(),
        }, None
    if spec.kind is ExperimentKind.SIGMA_MIN:
        exponent = float(p.get("floor_exponent", 5.0))
        smallest, below = sigma_min_survey(spec.model, n, spec.trials, exponent, source, threads)
        return {"n": n, "floor_exponent": exponent, "min_sigma_min": smallest, "count_below_floor": below}, None
    if spec.kind is ExperimentKind.SMALL_SV:
        r = int(p.get("r", max(1, n // 10)))
        c_bound = float(p.get("c_bound", float(np.min(spec.model.scale))))
        count = small_sv_count_survey(spec.model, n, r, spec.trials, c_bound, source, threads)
        return {"n": n, "r": r, "c_bound": c_bound, "violations": count}, None
    raise ConfigurationError(f"unhandled experiment kind {spec.kind}")


def run_experiment(spec: ExperimentSpec, threads=1):
    """Run every size of ``spec``; return ``(report dict, raw values per size)``."""
    results, raws = [], []
    for k, n in enumerate(spec.sizes):
        result, raw = _run_size(spec, n, spec.seed.substream(k * STREAM_STRIDE), threads)
        results.append(result)
        raws.append(raw)
    report = {
        "name": spec.name,
        "version": __version__,
        "spec": spec.to_dict(),
        "seed": {"seed": spec.seed.seed, "stream": spec.seed.stream},
        "per_size_results": results,
    }
    if spec.kind is ExperimentKind.TYPICAL_VALUE and len(spec.sizes) >= 2:
        ys = [r["log_median_ratio"] for r in results]
        report["slope"] = float(np.polyfit(np.log(spec.sizes), ys, 1)[0])
    return report, raws


def write_experiment(spec: ExperimentSpec, report, raws, outputs=None):
    """Write ``<outputs>/<name>.json`` (and ``<name>.csv`` of raw CLT statistics)."""
    out = Path(outputs or spec.outputs or ".")
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / f"{spec.name}.json"
    write_text(dumps(report), json_path)
    paths = [json_path]
    if spec.csv and any(raw for raw in raws):
        rows = []
        for n, raw in zip(spec.sizes, raws):
            for route, values in (raw or {}).items():
                rows.extend((n, route, t, float(v)) for t, v in enumerate(values))
        csv_path = out / f"{spec.name}.csv"
        write_csv(csv_path, ["n", "route", "trial", "statistic"], rows)
        paths.append(csv_path)
    return paths

