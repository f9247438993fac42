import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omp_rip.harness import make_rng
from omp_rip.objective import QuadraticObjective
from omp_rip.rsc import (
    BoundViolationError,
    BudgetExceeded,
    RscProfile,
    build_profile,
    colex_supports,
    epsilon_from_gradient,
    proposition1_check,
    rho_exact,
    rho_general_sampled,
    rho_sampled,
)

from oracles import best_sparse_fit, probe_epsilon, rayleigh_extremes_s2, sparse_extremes


def test_identity_and_diagonal():
    assert rho_exact(np.eye(6), 3) == (1.0, 1.0)
    assert rho_exact(np.diag([2.0, 3.0]), 1) == (4.0, 9.0)
    assert rho_sampled(np.eye(6), 2, trials=50, seed=0) == (1.0, 1.0)


def test_rho_exact_matches_rayleigh_grid():
    A = make_rng(21).standard_normal((8, 10))
    lo, hi = rho_exact(A, 2)
    rlo, rhi = rayleigh_extremes_s2(A)
    assert abs(lo - rlo) <= 1e-6 and abs(hi - rhi) <= 1e-6


def test_rho_exact_matches_bisection_oracle():
    A = make_rng(22).standard_normal((6, 8))
    for s in (1, 2, 3, 6):
        lo, hi = rho_exact(A, s)
        olo, ohi = sparse_extremes(A, s)
        assert abs(lo - olo) <= 1e-9 * (1 + ohi) and abs(hi - ohi) <= 1e-9 * (1 + ohi)
    # beyond the row count the lower constant is zero
    assert rho_exact(A, 7)[0] <= 1e-12


def test_colex_order():
    assert list(colex_supports(4, 2)) == [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)]
    assert sorted(colex_supports(6, 3)) == list(itertools.combinations(range(6), 3))


def test_budget():
    A = make_rng(0).standard_normal((5, 30))
    with pytest.raises(BudgetExceeded):
        rho_exact(A, 10, budget=1000)


def test_budget_from_environment(monkeypatch):
    monkeypatch.setenv("OMP_RIP_BUDGET", "10")
    with pytest.raises(BudgetExceeded):
        rho_exact(make_rng(0).standard_normal((5, 8)), 2)


def test_s_beyond_d_clamps():
    A = make_rng(1).standard_normal((6, 4))
    assert rho_exact(A, 9) == rho_exact(A, 4)


def test_sampled_exhaustion_equals_exact():
    A = make_rng(5).standard_normal((7, 9))
    total = math.comb(9, 3)
    assert rho_sampled(A, 3, trials=total, seed=1, distinct=True) == rho_exact(A, 3)


def test_sampled_brackets_exact():
    A = make_rng(2).standard_normal((20, 64))
    lo, hi = rho_exact(A, 3)
    slo, shi = rho_sampled(A, 3, trials=5000, seed=2)
    assert lo <= slo <= shi <= hi


def test_jobs_do_not_change_result():
    A = make_rng(8).standard_normal((8, 14))
    assert rho_exact(A, 4, jobs=1) == rho_exact(A, 4, jobs=3)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_monotone_in_s(seed):
    A = make_rng(seed).standard_normal((6, 8))
    prof = build_profile(A, 8, "exact")
    lows = [prof(s)[0] for s in range(1, 9)]
    highs = [prof(s)[1] for s in range(1, 9)]
    assert all(a >= b for a, b in zip(lows, lows[1:]))
    assert all(a <= b for a, b in zip(highs, highs[1:]))
    assert all(lv["delta"] == max(lv["rho_plus"] - 1, 1 - lv["rho_minus"]) for lv in prof.to_list())


def test_sampled_profile_is_monotone_and_labeled():
    A = make_rng(3).standard_normal((10, 30))
    prof = build_profile(A, 5, "sampled", trials=200, seed=4)
    lows = [prof(s)[0] for s in range(1, 6)]
    assert all(a >= b for a, b in zip(lows, lows[1:]))
    assert not prof.is_exact(2)
    assert prof.level(3).sample_count == 200
    with pytest.raises(ValueError):
        build_profile(A, 2, "sampled")


def test_profile_lookup():
    prof = RscProfile.constant(0.5, 2.0, 4)
    assert prof(2) == (0.5, 2.0)
    assert prof(40) == (0.5, 2.0)
    sparse = build_profile(np.eye(5), 0, "exact", levels=[2])
    with pytest.raises(KeyError):
        sparse(3)


def test_general_sampled_on_quadratic_is_inside_exact():
    rng = make_rng(6)
    A = rng.standard_normal((8, 10))
    obj = QuadraticObjective.from_arrays(A, rng.standard_normal(8))
    lo, hi = rho_general_sampled(obj, np.zeros(10), 2, radius=1.0, trials=300, seed=1)
    elo, ehi = rho_exact(A, 2)
    assert elo - 1e-9 <= lo <= hi <= ehi + 1e-9


def test_epsilon_trivial():
    assert epsilon_from_gradient(np.zeros(5), 2) == 0.0
    assert epsilon_from_gradient([3.0, -4.0, 0.0], 2) == 5.0
    assert epsilon_from_gradient([1.0, 1.0, 1.0, 1.0], 4) == 2.0


def test_epsilon_dominates_probes():
    rng = make_rng(4)
    g = rng.standard_normal(12)
    eps = epsilon_from_gradient(g, 3)
    probe = probe_epsilon(g, 3, 100_000, rng)
    assert probe <= eps + 1e-12
    assert eps - probe <= 1e-3 * eps


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=15), st.integers(1, 15))
def test_epsilon_bounds(vals, s):
    g = np.array(vals)
    eps = epsilon_from_gradient(g, s)
    assert eps <= math.sqrt(s) * np.max(np.abs(g)) * (1 + 1e-12) + 1e-300
    assert eps <= np.linalg.norm(g) * (1 + 1e-12) + 1e-300


def test_proposition1_flat_gradient_tight():
    # Q = ||x - y||^2 with gradient (1, 1, 1, 1) at xbar = 0
    obj = QuadraticObjective.from_arrays(np.eye(4), -0.5 * np.ones(4))
    rep = proposition1_check(obj, np.zeros(4), 4)
    assert rep.epsilon_s == rep.bound_sqrt_s_inf == rep.bound_l2 == 2.0


def test_proposition1_best_sparse_approximant():
    A = make_rng(21).standard_normal((8, 10))
    y = make_rng(21, 1).standard_normal(8)
    (_, S, z), _ = best_sparse_fit(A, y, 2)
    obj = QuadraticObjective.from_arrays(A, y)
    # epsbar relative to the best (2 + s)-sparse fit, found exhaustively
    best4, _ = best_sparse_fit(A, y, 4)
    epsbar = obj.value(z) - best4[0]
    rep = proposition1_check(obj, z, 2, rho_exact(A, 2)[1], epsbar)
    assert rep.epsilon_s <= rep.bound_suboptimality + 1e-9
    # with epsbar = 0 the bound is zero and must fail unless the gradient vanishes
    assert rep.epsilon_s > 0
    with pytest.raises(BoundViolationError):
        proposition1_check(obj, z, 2, rho_exact(A, 2)[1], 0.0)
