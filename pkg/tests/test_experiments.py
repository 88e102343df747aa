import json
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from permest import ConfigurationError, EntryModel, SeededSource
from permest.experiments import (
    ExperimentSpec,
    chi_log_abs_det,
    clt_experiment,
    clt_finite_n_moments,
    clt_sample,
    clt_statistic,
    ks_pvalue,
    ks_statistic,
    ks_two_sample,
    log_median_ratio,
    ratio_scaling_experiment,
    run_experiment,
    trunc_concentration_experiment,
    typical_value_experiment,
    write_experiment,
)
from permest.spectrum import paper_epsilon


def chi1_median():
    # P(chi^2_1 <= x) = erf(sqrt(x / 2)); bisect for 1/2
    lo, hi = 0.0, 4.0
    for _ in range(200):
        mid = (lo + hi) / 2
        if math.erf(math.sqrt(mid / 2)) < 0.5:
            lo = mid
        else:
            hi = mid
    return lo


@settings(max_examples=30, deadline=None)
@given(st.integers(5, 300), st.integers(0, 2**32))
def test_ks_statistic_matches_scipy(m, seed):
    x = np.random.default_rng(seed).normal(0.2, 1.1, m)
    ref = stats.kstest(x, "norm", method="asymp")
    assert ks_statistic(x) == pytest.approx(ref.statistic, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(5, 200), st.integers(5, 200), st.integers(0, 2**32))
def test_two_sample_distance_matches_scipy(m, k, seed):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=m), rng.normal(0.3, 1, size=k)
    assert ks_two_sample(x, y)[0] == pytest.approx(stats.ks_2samp(x, y).statistic, abs=1e-14)


def test_ks_pvalue_asymptotic():
    assert ks_pvalue(0.0, 100) == 1.0
    # 1.3581 is the classical 5% critical value of the Kolmogorov distribution
    assert ks_pvalue(1.3581 / 10, 100) == pytest.approx(0.05, abs=1e-4)


def test_chi1_median_oracle():
    assert chi1_median() == pytest.approx(stats.chi2.median(1), rel=1e-12)
    assert chi1_median() == pytest.approx(0.4549, abs=1e-4)


def test_typical_value_n1_is_chi1_median():
    ratio = math.exp(log_median_ratio(1, 20001, SeededSource(11)))
    assert ratio == pytest.approx(chi1_median(), abs=0.03)


def test_typical_value_determinism():
    a = typical_value_experiment([5, 10], 200, SeededSource(2))
    b = typical_value_experiment([5, 10], 200, SeededSource(2))
    assert a == b
    assert a.slope is not None
    assert typical_value_experiment(4, 50, SeededSource()).slope is None


def test_clt_statistic_definition():
    assert clt_statistic(0.5 * math.lgamma(10), 10) == 0.0
    assert clt_statistic(0.5 * math.lgamma(10) + math.sqrt(0.5 * math.log(10)), 10) == pytest.approx(1.0)


def test_clt_single_sample_reproducible():
    a = clt_sample(10, "direct", SeededSource(7))
    b = clt_sample(10, "direct", SeededSource(7))
    assert math.isfinite(a.statistic)
    assert a.statistic == b.statistic


def test_clt_preconditions():
    with pytest.raises(ConfigurationError):
        clt_experiment(9, 100, "direct", SeededSource())
    with pytest.raises(ConfigurationError):
        clt_experiment(10, 99, "direct", SeededSource())


def test_chi_route_one_row():
    # n = 1: |det| = |z| with z standard normal, so 2 log|det| is log chi^2_1
    logs = [2 * chi_log_abs_det(1, SeededSource(3, t)) for t in range(4000)]
    assert np.median(np.exp(logs)) == pytest.approx(chi1_median(), abs=0.05)


def test_finite_n_moments_match_chi_route():
    n, trials = 30, 4000
    mean, std = clt_finite_n_moments(n)
    res = clt_experiment(n, trials, "chi", SeededSource(5))
    x = res.statistics
    assert abs(x.mean() - mean) < 5 * std / math.sqrt(trials)
    assert x.std(ddof=1) == pytest.approx(std, rel=0.08)


def test_finite_n_moments_approach_standard_normal():
    m10, s10 = clt_finite_n_moments(10)
    m1e6, s1e6 = clt_finite_n_moments(10**6)
    assert abs(m1e6) < abs(m10)
    assert abs(s1e6 - 1) < abs(s10 - 1)


def test_trunc_concentration_n100():
    eps = paper_epsilon(100)
    std, bound = trunc_concentration_experiment(EntryModel.rademacher(), 100, 500, eps, SeededSource(4))
    assert bound == pytest.approx(math.sqrt(100) * math.log(100) / eps)
    assert bound == pytest.approx(21.3, abs=0.1)
    assert std <= bound
    again = trunc_concentration_experiment(EntryModel.rademacher(), 100, 500, eps, SeededSource(4))
    assert again == (std, bound)


def test_trunc_concentration_needs_trials():
    with pytest.raises(ConfigurationError):
        trunc_concentration_experiment(EntryModel.rademacher(), 10, 50, 1.0, SeededSource())


def test_ratio_scaling_small_sizes():
    rows = ratio_scaling_experiment([1, 3], 400, SeededSource(1))
    assert rows[0]["all_ones"].quantiles[0.99] == 0.0
    assert rows[0]["uniform_1_2"].quantiles[0.99] <= 1e-15
    ones3 = rows[1]["all_ones"]
    assert ones3.exact_log == pytest.approx(math.log(6))
    # nonzero draws are det^2 = 16 exactly, so every finite |log ratio| is log(16/6)
    assert ones3.finite_quantiles[0.99] == pytest.approx(math.log(16 / 6))
    assert ones3.trials_zero > 0


def test_ratio_scaling_three_by_three_frequencies():
    rows = ratio_scaling_experiment([3], 2000, SeededSource(2))
    zero_share = rows[0]["all_ones"].trials_zero / 2000
    # exhaustive frequency of singular 3x3 sign matrices is 320/512
    assert zero_share == pytest.approx(320 / 512, abs=0.04)


def spec_dict(**kw):
    d = {"name": "t", "kind": "typical_value", "sizes": [4, 6], "trials": 40, "seed": 3}
    d.update(kw)
    return d


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        ExperimentSpec.from_dict(spec_dict(trials=10))
    with pytest.raises(ConfigurationError):
        ExperimentSpec.from_dict(spec_dict(sizes=[]))
    with pytest.raises(ConfigurationError):
        ExperimentSpec.from_dict(spec_dict(kind="nope"))
    with pytest.raises(ConfigurationError):
        ExperimentSpec.from_dict(spec_dict(bogus=1))
    with pytest.raises(ConfigurationError):
        ExperimentSpec.from_dict(spec_dict(epsilon=-1))


def test_spec_round_trip():
    spec = ExperimentSpec.from_dict(spec_dict(epsilon=2.5, params={"r": 2}))
    again = ExperimentSpec.from_dict(spec.to_dict())
    assert again.to_dict() == spec.to_dict()
    assert spec.epsilon_for(64) == 2.5
    assert ExperimentSpec.from_dict(spec_dict()).epsilon_for(64) == pytest.approx(2.0)


@pytest.mark.parametrize("kind,params", [
    ("typical_value", {}),
    ("trunc_concentration", {}),
    ("sigma_min", {"floor_exponent": 3}),
    ("small_sv", {"r": 2, "c_bound": 1.0}),
    ("ratio_scaling", {}),
])
def test_run_experiment_byte_identical(tmp_path, kind, params):
    trials = 100 if kind == "trunc_concentration" else 40
    spec = ExperimentSpec.from_dict(spec_dict(kind=kind, trials=trials, params=params))
    a = write_experiment(spec, *run_experiment(spec), outputs=tmp_path / "a")
    b = write_experiment(spec, *run_experiment(spec, threads=3), outputs=tmp_path / "b")
    assert [p.read_bytes() for p in a] == [p.read_bytes() for p in b]
    report = json.loads(a[0].read_text())
    assert set(report) >= {"name", "spec", "per_size_results", "seed"}
    assert [r["n"] for r in report["per_size_results"]] == [4, 6]


def test_clt_experiment_both_routes_with_csv(tmp_path):
    spec = ExperimentSpec.from_dict(
        {"name": "clt", "kind": "clt", "sizes": [12], "trials": 100, "csv": True, "params": {"route": "both"}}
    )
    paths = write_experiment(spec, *run_experiment(spec), outputs=tmp_path)
    report = json.loads(paths[0].read_text())
    row = report["per_size_results"][0]
    assert {"direct", "chi", "two_route_ks_distance", "finite_n_mean", "finite_n_std"} <= set(row)
    lines = paths[1].read_text().splitlines()
    assert lines[0] == "n,route,trial,statistic"
    assert Counter(line.split(",")[1] for line in lines[1:]) == {"direct": 100, "chi": 100}
