import math

import numpy as np
import pytest
from scipy.special import exp1

from oracles import bisect_fixed_point, exp_integral, offspring_closed_form, phi_oracle, ratio_integral, simpson, zeta_oracle
from vrjp.exceptions import CancellationError, ConvergenceError, SubcriticalError
from vrjp.numerics import (
    Compose,
    Iterate,
    Leaf,
    OffspringDistribution,
    compute_constants,
    entropy,
    good_probability,
    integrate_exp,
    offspring_p,
    offspring_q,
    pgf_eval,
    pgf_mean,
    phi_b,
    ray_moment_factor,
    smallest_fixed_point,
    tail_bound_horizon,
    tail_bound_l,
    two_vertex_moment,
    two_vertex_sup_ratio,
    zeta_for_mean,
)


# integrate_exp ---------------------------------------------------------------

def test_integrate_constant_is_normalised():
    assert integrate_exp(lambda z: 1.0) == pytest.approx(1.0, abs=1e-13)


def test_integrate_good_probability_value():
    value = integrate_exp(lambda z: 1.0 / (2.0 + z))
    assert value == pytest.approx(0.36133, abs=5e-6)
    assert value == pytest.approx(math.exp(2) * exp1(2), abs=1e-12)


def test_integrate_lower_return_integral_against_simpson():
    f = lambda z: (1 + z) / (4 + z) * 3
    value = integrate_exp(f, rate=3.0)
    assert value == pytest.approx(exp_integral(f, rate=3.0), abs=1e-10)
    assert value == pytest.approx(0.30406, abs=5e-5)


def test_integrate_lower_return_integral_stated_value():
    # Stated as 0.3809, which is the rate-1 integral p_0; see the ledger.
    assert integrate_exp(lambda z: (1 + z) / (4 + z) * 3, rate=3.0) == pytest.approx(0.3809, abs=5e-4)


@pytest.mark.parametrize("rate", [0.5, 1.0, 2.0, 7.0])
def test_integrate_matches_simpson_for_rational_integrands(rate):
    f = lambda z: (1 + z) / (3.5 + z) ** 2
    assert integrate_exp(f, rate) == pytest.approx(exp_integral(f, rate), abs=1e-11)


def test_integrate_non_convergence_carries_estimates():
    with pytest.raises(ConvergenceError) as info:
        integrate_exp(lambda z: np.sign(np.sin(40 * z)))
    assert len(info.value.estimates) == 2


def test_integrate_rejects_bad_rate():
    with pytest.raises(ValueError):
        integrate_exp(lambda z: 1.0, rate=0.0)


# offspring laws -------------------------------------------------------------

@pytest.mark.parametrize("b", range(1, 9))
def test_offspring_p_matches_closed_form(b):
    assert offspring_p(b).probs == pytest.approx(offspring_closed_form(b), abs=1e-10)


def test_offspring_p3_sum_and_mean():
    p = offspring_p(3)
    assert math.fsum(p.probs) == pytest.approx(1.0, abs=1e-10)
    assert p.mean() == pytest.approx(3 * 0.36133, abs=1e-4)


def test_offspring_p0_against_simpson_oracle():
    oracle = exp_integral(lambda z: (1 + z) / (4 + z))
    assert offspring_p(3).probs[0] == pytest.approx(oracle, abs=1e-8)


def test_good_probability_closed_form():
    assert good_probability() == pytest.approx(math.exp(2) * exp1(2), abs=1e-13)


def test_offspring_q_shift():
    q = offspring_q(OffspringDistribution((0.2, 0.3, 0.5)))
    assert q.probs == pytest.approx((0.5, 0.5))
    assert offspring_q(OffspringDistribution((1.0,))).probs == (1.0,)


def test_offspring_q_mean_identity():
    p = offspring_p(3)
    direct = sum(k * qk for k, qk in enumerate(offspring_q(p).probs))
    assert direct == pytest.approx(p.mean() - 1 + p.probs[0], abs=1e-10)
    assert offspring_q(p).mean() == pytest.approx(direct, abs=1e-12)


def test_offspring_distribution_validation():
    with pytest.raises(ValueError):
        OffspringDistribution((0.5, 0.6))
    with pytest.raises(ValueError):
        OffspringDistribution((1.1, -0.1))


def test_cancellation_is_detected(monkeypatch):
    import vrjp.numerics.offspring as off

    off.offspring_p.cache_clear()
    monkeypatch.setattr(off, "_shifted_ratio_integral", lambda a: 1.0 + 0.1 * a)
    with pytest.raises(CancellationError):
        off.offspring_p(4)
    off.offspring_p.cache_clear()


# PGFs -------------------------------------------------------------------------

def test_pgf_normalisation_and_zero():
    leaf = Leaf(OffspringDistribution((0.25, 0.25, 0.5)))
    assert pgf_eval(leaf, 1.0) == pytest.approx(1.0)
    assert pgf_eval(leaf, 0.0) == 0.25
    expr = Compose(Iterate(Leaf(offspring_p(3)), 4), Leaf(offspring_q(offspring_p(3))))
    assert pgf_eval(expr, 1.0) == pytest.approx(1.0, abs=1e-10)


def test_iterate_two_generations_brute_force():
    p = offspring_p(3).probs
    oracle = sum(pk * p[0] ** k for k, pk in enumerate(p))
    assert pgf_eval(Iterate(Leaf(offspring_p(3)), 2), 0.0) == pytest.approx(oracle, abs=1e-15)


def test_pgf_eval_domain():
    with pytest.raises(ValueError):
        pgf_eval(Leaf(offspring_p(3)), 1.5)


@pytest.mark.parametrize("j", range(1, 6))
def test_iterated_mean_by_central_difference(j):
    p = offspring_p(3)
    expr = Iterate(Leaf(p), j)
    h = 1e-6
    numeric = (expr(1 + h) - expr(1 - h)) / (2 * h)
    assert numeric == pytest.approx(p.mean() ** j, rel=1e-5)
    assert pgf_mean(expr) == pytest.approx(p.mean() ** j, rel=1e-8)


@pytest.mark.parametrize("j", range(1, 6))
def test_composed_mean(j):
    p = offspring_p(3)
    q = offspring_q(p)
    expr = Compose(Iterate(Leaf(p), j - 1), Leaf(q))
    mean_q = sum(k * v for k, v in enumerate(q.probs))
    assert pgf_mean(expr) == pytest.approx(p.mean() ** (j - 1) * mean_q, rel=1e-10)


def test_fixed_point_quadratic():
    leaf = Leaf(OffspringDistribution((0.25, 0.25, 0.5)))
    r = smallest_fixed_point(leaf)
    assert r == pytest.approx(0.5, abs=1e-10)
    assert r == pytest.approx(bisect_fixed_point(leaf), abs=1e-10)


def test_fixed_point_no_zero_offspring():
    assert smallest_fixed_point(Leaf(OffspringDistribution((0.0, 0.3, 0.7)))) == 0.0


def test_fixed_point_beta3():
    leaf = Leaf(offspring_p(3))
    beta = smallest_fixed_point(leaf)
    assert beta == pytest.approx(0.8545, abs=5e-4)
    assert beta == pytest.approx(bisect_fixed_point(leaf), abs=1e-9)
    assert abs(beta - leaf(beta)) < 1e-10


def test_fixed_point_subcritical_is_one():
    assert smallest_fixed_point(Leaf(OffspringDistribution((0.5, 0.3, 0.2)))) == 1.0


def test_fixed_point_failure_reports_interval():
    with pytest.raises(ConvergenceError) as info:
        smallest_fixed_point(Leaf(OffspringDistribution((0.25, 0.5, 0.25))), max_iter=50)
    lo, hi = info.value.estimates
    assert lo <= hi


# constants --------------------------------------------------------------------

def test_constants_b3_beta_and_good_prob():
    c = compute_constants(3)
    assert c.beta_b == pytest.approx(0.8545, abs=5e-4)
    assert c.good_prob == pytest.approx(0.36133, abs=1e-5)
    assert c.m == pytest.approx(3 * c.good_prob, rel=1e-12)


def test_constants_alpha_lower_reproduces_integral():
    c = compute_constants(3)
    assert c.alpha_lower == pytest.approx(exp_integral(lambda z: (1 + z) / (4 + z) * 3, 3.0), abs=1e-10)


def test_constants_b3_alpha_lower_stated_value():
    # Stated value 0.3809; the defining integral is 0.30406 (see the ledger).
    assert compute_constants(3).alpha_lower == pytest.approx(0.3809, abs=5e-4)


def test_constants_zeta_oracle():
    fixture = {3: 32, 4: 4, 5: 2}
    for b, z in fixture.items():
        m = exp_integral(lambda t: 1 / (2 + t)) * b
        assert zeta_oracle(m) == z
        assert compute_constants(b).zeta == z


@pytest.mark.parametrize("b", range(3, 9))
def test_constants_phi(b):
    assert compute_constants(b).phi_b == pytest.approx(phi_oracle(b), abs=1e-12)
    assert phi_b(b) == pytest.approx(phi_oracle(b), abs=1e-12)


@pytest.mark.parametrize("b", range(3, 9))
def test_alpha_below_beta(b):
    c = compute_constants(b)
    assert 0 <= c.alpha_lower <= c.beta_b <= 1
    assert 0 <= c.gamma_b <= 1 and c.zeta >= 2


def test_subcritical_refused():
    with pytest.raises(SubcriticalError, match="subcritical good cluster"):
        compute_constants(2)
    with pytest.raises(SubcriticalError):
        zeta_for_mean(0.9)
    assert math.fsum(offspring_p(2).probs) == pytest.approx(1.0, abs=1e-10)


# entropy and tail bounds -----------------------------------------------------

def test_entropy_values():
    assert entropy(0.5, 0.5) == 0.0
    assert entropy(0.1, 0.5) == pytest.approx(0.1 * math.log(0.2) + 0.9 * math.log(1.8), abs=1e-15)
    assert entropy(0.0, 0.3) == pytest.approx(math.log(1 / 0.7))
    assert entropy(1.0, 0.3) == pytest.approx(math.log(1 / 0.3))


def test_entropy_limit_at_one_over_n():
    # Literal tolerance: |H(1/n | p) - ln(1/(1-p))| < 1e-5 at n = 10^6, with
    # p the cut success probability of b = 3.
    p = compute_constants(3).cut_success
    assert abs(entropy(1e-6, p) - math.log(1 / (1 - p))) < 1e-5


def test_entropy_limit_converges():
    p = compute_constants(3).cut_success
    gaps = [abs(entropy(1.0 / n, p) - math.log(1 / (1 - p))) for n in (1e4, 1e6, 1e8, 1e10)]
    assert gaps == sorted(gaps, reverse=True)
    assert gaps[-1] < 1e-8


def test_entropy_decreasing_below_p():
    p = 0.3
    grid = np.linspace(0.001, p, 300)
    vals = np.array([entropy(x, p) for x in grid])
    assert np.all(np.diff(vals) <= 0) and np.all(vals >= 0)


def test_tail_bound_trivial_cases():
    c = compute_constants(3)
    assert tail_bound_l(10 * c.zeta, c.cut_success, c) == 1.0
    assert tail_bound_l(c.zeta - 1, 0.001, c) == 1.0


def test_tail_bound_against_arithmetic():
    c = compute_constants(3)
    n = 10 * c.zeta
    p = (1 - c.gamma_b) * c.phi_b
    x = 1 / n
    h = x * math.log(x / p) + (1 - x) * math.log((1 - x) / (1 - p))
    assert tail_bound_l(n, 1 / n, c) == pytest.approx(math.exp(-10 * h), abs=1e-12)


def test_tail_bound_horizon():
    c = compute_constants(3)
    n = tail_bound_horizon(c, 1e-6)
    assert tail_bound_l(n, 1 / n, c) < 1e-6 <= tail_bound_l(n - 1, 1 / (n - 1), c)


# two-vertex moments -----------------------------------------------------------

@pytest.mark.parametrize("k", [1, 2, 3])
def test_two_vertex_initial_condition(k):
    assert two_vertex_moment(1.0, 1.0, k) == 1.0


def test_two_vertex_values():
    assert two_vertex_moment(1.0, 2.0, 1) == 2.0
    assert two_vertex_moment(1.0, 2.0, 2) == 7.0
    assert two_vertex_moment(1.0, 2.0, 3) == 44.0
    with pytest.raises(NotImplementedError):
        two_vertex_moment(1.0, 2.0, 4)


@pytest.mark.parametrize("c", [0.5, 1.0, 2.5])
@pytest.mark.parametrize("t", [1.1, 1.7, 4.0])
def test_two_vertex_odes(c, t):
    h = 1e-5
    d = lambda k: (two_vertex_moment(c, t + h, k) - two_vertex_moment(c, t - h, k)) / (2 * h)
    m = lambda k: two_vertex_moment(c, t, k)
    assert d(1) == pytest.approx(m(1) / t, rel=1e-3)
    assert d(2) == pytest.approx(2 * m(2) / t + 2 * c / t, rel=1e-3)
    assert d(3) == pytest.approx(3 * m(3) / t + 6 * (c * c + c), rel=1e-3)


@pytest.mark.parametrize("c", [0.5, 1.0, 3.0])
def test_two_vertex_sup_ratio(c):
    assert two_vertex_moment(c, 1e6, 3) / 1e18 == pytest.approx(two_vertex_sup_ratio(c), abs=1e-9 * max(1, c**3))


def test_ray_factor_27_vs_37():
    assert ray_moment_factor("bound") == pytest.approx(37.0, abs=1e-10)
    assert ray_moment_factor("displayed") == pytest.approx(27.0, abs=1e-10)
