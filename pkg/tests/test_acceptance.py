"""Acceptance criteria 1-10, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py`` or ``python tests/test_acceptance.py``;
either way one PASS/FAIL line per criterion is printed at the end.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats

from acceptance_log import criterion
from oracles import exp_integral
from vrjp.campaign import analyse_records, load_spec, run_record
from vrjp.checks import star_comparison
from vrjp.engine import RunConfig, run, two_vertex_samples
from vrjp.gw import good_offspring_counts, survival_probability
from vrjp.numerics import compute_constants, good_probability, offspring_p, tail_bound_l
from vrjp.utils import derive_seed

ALPHA_STATED = 0.3809
BETA_STATED = 0.8545
GOOD_STATED = 0.36133


def _campaign(b, runs, max_level, seed):
    spec = load_spec(None, b=b, runs=runs, max_level=max_level, seed=seed)
    records = [run_record(spec, i) for i in range(runs)]
    header = {"spec": spec.hashed_fields()}
    return header, records


@pytest.fixture(scope="module")
def return_campaign():
    """10^4 runs to level 200, shared by criteria 5 and 9."""
    start = time.perf_counter()
    header, records = _campaign(3, 10_000, 200, 505)
    return analyse_records(header, records), records, time.perf_counter() - start


@pytest.fixture(scope="module")
def speed_campaign():
    """200 runs to level 2000, shared by criteria 7 and 8."""
    start = time.perf_counter()
    header, records = _campaign(3, 200, 2000, 707)
    return analyse_records(header, records), time.perf_counter() - start


def test_criterion_01_constants_table():
    with criterion(1, "constants table b=3") as d:
        start = time.perf_counter()
        c = compute_constants(3)
        elapsed = time.perf_counter() - start
        d.update(alpha_lower=c.alpha_lower, beta_b=c.beta_b, good_prob=c.good_prob, seconds=elapsed)
        assert abs(c.beta_b - BETA_STATED) <= 5e-4
        assert abs(c.good_prob - GOOD_STATED) <= 1e-5
        assert elapsed < 1.0
        assert abs(c.alpha_lower - ALPHA_STATED) <= 5e-4


def test_criterion_02_offspring_law():
    with criterion(2, "offspring law b=3..8") as d:
        g = good_probability()
        worst_sum = worst_mean = 0.0
        for b in range(3, 9):
            p = offspring_p(b)
            worst_sum = max(worst_sum, abs(math.fsum(p.probs) - 1.0))
            worst_mean = max(worst_mean, abs(p.mean() - b * g))
        d.update(max_sum_error=worst_sum, max_mean_error=worst_mean)
        assert worst_sum <= 1e-10
        assert worst_mean <= 1e-8


def test_criterion_03_simulated_offspring():
    with criterion(3, "simulated good-cluster offspring") as d:
        h = good_offspring_counts(3, 2, 100_000, 303)
        res = stats.chisquare(h, offspring_p(3).as_array() * h.sum())
        d.update(chi2_p=float(res.pvalue))
        assert res.pvalue > 0.01


def test_criterion_04_gw_survival():
    with criterion(4, "GW survival cross-check") as d:
        c = compute_constants(3)
        est = survival_probability(offspring_p(3), 200, 100_000, 404)
        tol = max(3 * est.stderr, est.bias_bound)
        d.update(extinction=1 - est.estimate, beta_b=c.beta_b, tolerance=tol)
        assert abs((1 - est.estimate) - c.beta_b) <= tol


def test_criterion_05_return_probability(return_campaign):
    with criterion(5, "return probability") as d:
        report, _, secs = return_campaign
        rp = report["return_probability"]
        two_jump_oracle = exp_integral(lambda z: (1 + z) / (4 + z) * 3, rate=3.0)
        d.update(
            estimate=rp["estimate"], stderr=rp["stderr"], two_jump=rp["two_jump"],
            two_jump_oracle=two_jump_oracle, seconds=secs,
        )
        assert ALPHA_STATED - 3 * rp["stderr"] <= rp["estimate"] <= BETA_STATED + 3 * rp["stderr"]
        assert abs(rp["two_jump"] - two_jump_oracle) <= 3 * rp["two_jump_stderr"]
        assert secs < 600


def test_criterion_06_two_vertex_moments():
    with criterion(6, "two-vertex moments c=1 t=2") as d:
        x = two_vertex_samples(1.0, 2.0, 100_000, 606)
        zs = []
        for k, target in zip((1, 2, 3), (2.0, 7.0, 44.0)):
            xk = x**k
            se = xk.std(ddof=1) / math.sqrt(x.size)
            zs.append((xk.mean() - target) / se)
            d[f"m{k}"] = float(xk.mean())
        d["max_abs_z"] = float(max(abs(z) for z in zs))
        assert all(abs(z) <= 3 for z in zs)


def test_criterion_07_slln_concordance(speed_campaign):
    with criterion(7, "SLLN concordance") as d:
        report, secs = speed_campaign
        sp, nv, conc = report["speed"], report["naive"], report["concordance"]
        d.update(k_hat1=sp["k_hat1"], se=sp["se_speed"], naive=nv["speed"], naive_se=nv["se"],
                 n_blocks=sp["n_blocks"], seconds=secs)
        assert sp["k_hat1"] > 0
        assert abs(sp["k_hat1"] - nv["speed"]) <= 3 * math.hypot(sp["se_speed"], nv["se"])
        assert conc["passed"]
        assert secs < 1800


def test_criterion_08_clt_diagnostics(speed_campaign):
    with criterion(8, "CLT diagnostics") as d:
        clt = speed_campaign[0]["clt"]
        d.update(degenerate=clt["degenerate"], ad=clt["ad_statistic"], ad_critical=clt["ad_critical"],
                 lag2=clt["lag2_autocorr"], lag2_band=clt["lag2_band"])
        if clt["degenerate"]:
            assert speed_campaign[0]["speed"]["k_hat2"] == 0
        else:
            assert clt["ad_statistic"] < clt["ad_critical"]
        assert abs(clt["lag2_autocorr"]) <= clt["lag2_band"]


def test_criterion_09_tail_bound_domination(return_campaign):
    with criterion(9, "tail-bound domination") as d:
        report, records, _ = return_campaign
        c = compute_constants(3)
        points = {int(p[0]): p for p in report["l1_tail"]}
        assert sorted(points) == [2 * c.zeta, 4 * c.zeta, 8 * c.zeta]
        done = [r for r in records if r["stop_reason"] == "max-level"]
        for n, (_, bound, emp, se) in points.items():
            assert bound == pytest.approx(tail_bound_l(n, 1.0 / n, c))
            recount = np.mean([r["first_cut_level"] is None or r["first_cut_level"] >= n for r in done])
            assert emp == pytest.approx(recount)
            d[f"n{n}"] = f"{emp:.4f}<={bound:.4f}"
            assert emp <= bound + 3 * se


def test_criterion_10_engine_validation():
    with criterion(10, "engine validation") as d:
        worst = 0.0
        for r in range(300):
            cfg = RunConfig(b=3, seed=derive_seed(1010, r), max_level=60)
            tr = run(cfg)
            worst = max(worst, abs(tr.occupation_residual()) / max(tr.end_time, 1e-300))
            if r < 50:
                assert run(cfg) == tr
        star = star_comparison(10_000, 1011)
        d.update(max_rel_occupation=worst, chi2_p=star["chi2_p"], min_ks_p=min(star["ks_p"]))
        assert worst <= 1e-9
        assert star["chi2_p"] > 0.01
        assert min(star["ks_p"]) > 0.01


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
