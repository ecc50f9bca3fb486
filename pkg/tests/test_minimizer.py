import numpy as np
import pytest

from neumann_dual import (
    DomainKind,
    DualPair,
    MinimizeOptions,
    PreconditionError,
    UnsupportedError,
    make_exponents,
    make_grid,
    minimize,
    minimize_sublinear,
    minimize_superlinear,
    phi,
    star_polish,
)
from neumann_dual.dual_energy import nehari_residual
from neumann_dual.minimizer import initial_profile
from neumann_dual.verify_suite import check_monotonicity, random_smooth_function

from conftest import solved


@pytest.mark.parametrize(
    "kwargs",
    [{"backtrack": 1.0}, {"backtrack": 0.0}, {"tol": 0.0}, {"max_iterations": 0}, {"noise": -1.0}, {"step_init": -1}],
)
def test_bad_options(kwargs):
    with pytest.raises(PreconditionError):
        MinimizeOptions(**kwargs)


def test_regime_mismatch():
    grid = make_grid(DomainKind.ball(3), 64)
    with pytest.raises(UnsupportedError):
        minimize_sublinear(grid, make_exponents(3.0, 3.0, 3))
    with pytest.raises(UnsupportedError):
        minimize_superlinear(grid, make_exponents(0.5, 0.5, 3))
    with pytest.raises(PreconditionError):
        minimize(grid, make_exponents(3.0, 3.0, 2))


def test_initial_profile_zero_average():
    grid = make_grid(DomainKind.annulus(2, 0.3), 129)
    h = initial_profile(grid, 3, 1e-2)
    assert abs(np.dot(grid.cell_measures, h)) <= 1e-14 * np.max(np.abs(h))


def test_sublinear_interval(interval_sublinear):
    res = interval_sublinear
    d = res.solution.diagnostics
    assert res.converged
    assert d.residual <= 1e-6
    assert d.phi < 0
    assert abs(d.phi - d.I) <= 1e-6 * abs(d.phi)
    assert check_monotonicity(res.solution).passed


def test_history_non_increasing(interval_sublinear, ball3_superlinear):
    for res in (interval_sublinear, ball3_superlinear):
        h = np.asarray(res.history)
        assert h.size >= 2
        assert np.all(np.diff(h) <= 1e-10 * (1 + np.abs(h[:-1])))


def test_superlinear_ball3(ball3_superlinear):
    res = ball3_superlinear
    sol = res.solution
    assert res.converged
    assert nehari_residual(res.pair) <= 1e-8
    assert res.phi_value > 0
    assert np.max(np.abs(sol.u.values - sol.v.values)) <= 1e-6 * sol.u.sup_norm()


def test_sublinear_ball_unequal_exponents():
    res = solved("ball", 3, 0.0, 0.4, 0.8, 1025)
    d = res.solution.diagnostics
    assert res.converged and d.phi < 0 and d.residual <= 1e-6
    assert check_monotonicity(res.solution).passed


@pytest.mark.parametrize(
    "case",
    [("ball", 2, 0.0, 3.0, 3.0), ("annulus", 2, 0.3, 2.0, 5.0)],
    ids=["ball2", "annulus2"],
)
def test_energy_stable_under_refinement(case):
    coarse = solved(*case, 1024).phi_value
    fine = solved(*case, 2048).phi_value
    assert abs(coarse - fine) <= 1e-4 * abs(fine)


def test_same_level_from_different_seeds():
    levels = [solved("ball", 3, 0.0, 3.0, 3.0, 513, seed).phi_value for seed in (0, 1, 2)]
    assert max(levels) - min(levels) <= 1e-8 * abs(levels[0])


def test_runs_are_reproducible():
    grid = make_grid(DomainKind.interval(), 257)
    e = make_exponents(0.5, 0.5)
    a = minimize(grid, e, MinimizeOptions(seed=7))
    b = minimize(grid, e, MinimizeOptions(seed=7))
    assert np.array_equal(a.pair.f.values, b.pair.f.values)
    assert a.report_json() == b.report_json()


def test_star_polish_does_not_increase_energy(rng):
    grid = make_grid(DomainKind.ball(3), 257)
    e = make_exponents(0.5, 0.5, 3)
    pair = DualPair(random_smooth_function(grid, rng), random_smooth_function(grid, rng), e)
    polished = star_polish(pair)
    assert phi(polished) <= phi(pair) + 1e-8 * (1 + abs(phi(pair)))
    assert polished.f.lp_norm(e.alpha) == pytest.approx(pair.f.lp_norm(e.alpha), rel=1e-12)


def test_star_polish_keeps_zero_pair():
    grid = make_grid(DomainKind.ball(3), 64)
    e = make_exponents(3.0, 3.0, 3)
    z = DualPair.zero(grid, e)
    assert np.all(star_polish(z).f.values == 0)


def test_report_fields(ball2_superlinear):
    rep = ball2_superlinear.report()
    for key in ("converged", "iterations", "phi", "residuals", "I", "seed"):
        assert key in rep
