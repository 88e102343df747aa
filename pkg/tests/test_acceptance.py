"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test records one ``PASS``/``FAIL`` line, printed in the pytest terminal
summary (or on stdout when this file is run as a script).
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from permest import (
    EntryModel,
    EstimatorConfig,
    SeededSource,
    approximation_ratio_sweep,
    detsmall_bound_check,
    distance_identity_check,
    log_det_distances,
    log_det_lu,
    permanent_naive,
    permanent_ryser,
    sample_matrix,
    sigma_min_survey,
    singular_values,
    spectrum_split,
    unbiasedness_exhaustive,
)
from permest.cli import main
from permest.estimators import ratio_envelope, trial_log_values, uniform_family
from permest.experiments import clt_experiment, clt_finite_n_moments, ks_two_sample, typical_value_experiment
from permest.matrix import random_signs
from permest.spectrum import paper_epsilon

FIXTURES = json.loads((Path(__file__).parent / "fixtures" / "acceptance.json").read_text())


def record(number, title, ok, detail, elapsed, budget):
    within = elapsed < budget
    passed = ok and within
    ACCEPTANCE_LINES.append(
        f"{'PASS' if passed else 'FAIL'} AC-{number:02d} {title}: {detail} [{elapsed:.1f}s / {budget}s]"
    )
    assert ok, detail
    assert within, f"runtime {elapsed:.1f}s exceeds {budget}s"


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


@pytest.fixture(scope="module", autouse=True)
def warm_kernels():
    # keep JIT compilation out of the timed sections
    permanent_ryser(np.ones((3, 3)))


def test_ac01_unbiasedness():
    cfg = FIXTURES["unbiasedness"]
    with Timer() as t:
        gaps = []
        for M in (np.ones((3, 3)), [[1, 2, 1], [3, 4, 1], [1, 1, 2]]):
            avg, _ = unbiasedness_exhaustive(M)
            per = permanent_naive(M).exact_small
            gaps.append(abs(avg - per) / per)
    record(1, "exhaustive unbiasedness", max(gaps) <= cfg["rel_tol"], f"max rel gap {max(gaps):.2e}",
           t.elapsed, cfg["runtime_s"])


def test_ac02_oracle_agreement():
    cfg = FIXTURES["oracle_agreement"]
    gen = SeededSource(cfg["seed"]).generator()
    with Timer() as t:
        worst = 0.0
        for _ in range(cfg["count"]):
            A = gen.random((cfg["n"], cfg["n"]))
            a, b = permanent_ryser(A).exact_small, permanent_naive(A).exact_small
            worst = max(worst, abs(a - b) / b)
    record(2, "ryser vs naive", worst <= cfg["rel_tol"], f"max rel gap {worst:.2e}", t.elapsed, cfg["runtime_s"])


def test_ac03_determinant_routes():
    cfg = FIXTURES["determinant_routes"]
    model = EntryModel.gaussian()
    with Timer() as t:
        worst = 0.0
        for k in range(cfg["count"]):
            A = sample_matrix(model, cfg["n"], SeededSource(cfg["seed"], k))
            lu = log_det_lu(A).log_abs
            dist = log_det_distances(A)[0].log_abs
            svd = singular_values(A).log_abs_det
            worst = max(worst, abs(lu - dist), abs(svd - lu), abs(svd - dist))
    record(3, "lu / distances / svd", worst <= cfg["abs_tol"], f"max log gap {worst:.2e}",
           t.elapsed, cfg["runtime_s"])


def test_ac04_distance_identity():
    cfg = FIXTURES["distance_identity"]
    with Timer() as t:
        worst, used = 0.0, 0
        for k in range(cfg["count"]):
            A = random_signs(SeededSource(cfg["seed"], k).generator(), (cfg["rows"], cfg["cols"]))
            assert np.linalg.matrix_rank(A) == cfg["rows"]
            lhs, rhs = distance_identity_check(A)
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
            used += 1
    record(4, "sum d^-2 = sum sigma^-2", worst <= cfg["rel_tol"] and used == cfg["count"],
           f"max rel gap {worst:.2e} over {used}", t.elapsed, cfg["runtime_s"])


def test_ac05_turan():
    cfg = FIXTURES["turan"]
    n = cfg["n"]
    with Timer() as t:
        logs = trial_log_values(np.ones((n, n)), "gg", SeededSource(cfg["seed"]), cfg["trials"])
        vals = np.exp(logs)
        mean = vals.mean()
        se = vals.std(ddof=1) / math.sqrt(vals.size)
    z = (mean - math.factorial(n)) / se
    record(5, "E det^2 = n!", abs(z) <= cfg["standard_errors"], f"mean {mean:.6g}, {z:+.2f} standard errors",
           t.elapsed, cfg["runtime_s"])


def test_ac06_clt():
    cfg = FIXTURES["clt"]
    with Timer() as t:
        direct = clt_experiment(cfg["direct_n"], cfg["trials"], "direct", SeededSource(cfg["seed"]))
        a = clt_experiment(cfg["two_route_n"], cfg["trials"], "direct", SeededSource(cfg["seed"], 1 << 40))
        b = clt_experiment(cfg["two_route_n"], cfg["trials"], "chi", SeededSource(cfg["seed"], 2 << 40))
        two_route, _ = ks_two_sample(a.statistics, b.statistics)
    mean, std = clt_finite_n_moments(cfg["direct_n"])
    ok_direct = direct.ks_pvalue > cfg["min_pvalue"]
    ok_routes = two_route < cfg["max_two_route_distance"]
    detail = (
        f"direct n={cfg['direct_n']} KS p={direct.ks_pvalue:.3g} (D={direct.ks_distance:.3f}; exact finite-n "
        f"mean {mean:+.3f}, std {std:.3f}); two-route D={two_route:.4f}"
    )
    record(6, "log-normal law", ok_direct and ok_routes, detail, t.elapsed, cfg["runtime_s"])


def test_ac07_typical_value():
    cfg = FIXTURES["typical_value"]
    lo, hi = cfg["slope_range"]
    with Timer() as t:
        res = typical_value_experiment(cfg["sizes"], cfg["trials"], SeededSource(cfg["seed"]))
    record(7, "median det^2 / n! slope", lo <= res.slope <= hi, f"slope {res.slope:.3f}",
           t.elapsed, cfg["runtime_s"])


def test_ac08_spectrum_split():
    cfg = FIXTURES["spectrum_split"]
    n = cfg["n"]
    eps = paper_epsilon(n)
    with Timer() as t:
        worst, bound_ok = 0.0, True
        for k in range(cfg["count"]):
            A = sample_matrix(EntryModel.rademacher(), n, SeededSource(cfg["seed"], k))
            s = spectrum_split(A, eps)
            worst = max(worst, abs(s.log_abs_det - log_det_lu(A).log_abs))
            lhs, rhs = detsmall_bound_check(A, eps)
            bound_ok &= 0 >= lhs >= rhs
    record(8, "trunc + small = log|det|", worst <= cfg["abs_tol"] and bound_ok,
           f"max gap {worst:.2e}, detsmall bound {'held' if bound_ok else 'violated'}", t.elapsed, cfg["runtime_s"])


def test_ac09_approximation_ratio():
    cfg = FIXTURES["approximation_ratio"]
    q = cfg["quantile"]
    with Timer() as t:
        rows = approximation_ratio_sweep(
            uniform_family(1.0, 2.0), cfg["sizes"], cfg["trials"], EstimatorConfig(seed=SeededSource(cfg["seed"]))
        )
    ok = all(r.quantiles[q] <= ratio_envelope(r.n) for r in rows)
    detail = ", ".join(f"n={r.n} q99={r.quantiles[q]:.2f} vs {ratio_envelope(r.n):.2f}" for r in rows)
    record(9, "|log(det^2/per)| envelope", ok, detail, t.elapsed, cfg["runtime_s"])


def test_ac10_sigma_min_floor():
    cfg = FIXTURES["sigma_min_floor"]
    with Timer() as t:
        smallest, below = sigma_min_survey(
            EntryModel.rademacher(), cfg["n"], cfg["trials"], cfg["floor_exponent"], SeededSource(cfg["seed"])
        )
    record(10, "sigma_min floor", below == 0, f"{below} below floor, smallest {smallest:.3g}",
           t.elapsed, cfg["runtime_s"])


def test_ac11_cli_determinism(tmp_path, capsys):
    cfg = FIXTURES["determinism"]
    seed = str(cfg["seed"])
    M = np.random.default_rng(cfg["seed"]).uniform(1, 2, (9, 9))
    matrix = tmp_path / "m.csv"
    matrix.write_text("\n".join(",".join(repr(float(x)) for x in row) for row in M) + "\n")
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({
        "name": "det", "kind": "clt", "sizes": [12], "trials": 100, "seed": cfg["seed"],
        "csv": True, "params": {"route": "both"},
    }))
    commands = {
        "estimate": ["estimate", "--input", str(matrix), "--trials", "64", "--seed", seed, "--verbose"],
        "estimate-barvinok": ["estimate", "--input", str(matrix), "--kind", "barvinok", "--trials", "64",
                              "--aggregation", "median", "--seed", seed],
        "exact": ["exact", "--input", str(matrix)],
        "spectrum": ["spectrum", "--input", str(matrix)],
        "selftest": ["selftest"],
    }
    mismatched = []
    with Timer() as t:
        for name, argv in commands.items():
            outputs = set()
            for threads in cfg["threads"]:
                for rep in range(2):
                    target = tmp_path / f"{name}-{threads}-{rep}.out"
                    assert main([*argv, "--threads", str(threads), "--output", str(target)]) == 0
                    outputs.add(target.read_bytes())
            if len(outputs) != 1:
                mismatched.append(name)
        outputs = set()
        for threads in cfg["threads"]:
            for rep in range(2):
                out = tmp_path / f"exp-{threads}-{rep}"
                assert main(["experiment", "--input", str(spec), "--output", str(out), "--threads", str(threads)]) == 0
                outputs.add(((out / "det.json").read_bytes(), (out / "det.csv").read_bytes()))
        if len(outputs) != 1:
            mismatched.append("experiment")
    capsys.readouterr()
    record(11, "CLI byte-identical reruns", not mismatched,
           f"{len(commands) + 1} commands x threads {cfg['threads']} x 2 runs, mismatched: {mismatched or 'none'}",
           t.elapsed, cfg["runtime_s"])


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
