import json

import numpy as np
import pytest

from neumann_dual import (
    DomainKind,
    DualPair,
    MinResult,
    PreconditionError,
    RadialFunction,
    UnsupportedError,
    make_exponents,
    make_grid,
    recover_solution,
)
from neumann_dual import verify_suite as vs


def as_result(pair, converged=True):
    sol = recover_solution(pair)
    return MinResult(pair, sol, sol.diagnostics.phi, 0, converged, [])


def test_counterexample_report():
    rep = vs.run_counterexample()
    assert rep.passed
    assert rep.values["A"] > rep.values["B"]
    assert rep.values["A"] == pytest.approx(vs.COUNTEREXAMPLE_A, rel=1e-3)
    assert rep.values["B"] == pytest.approx(vs.COUNTEREXAMPLE_B, rel=1e-3)
    assert abs(rep.values["integral"]) <= 1e-10
    assert rep.values["seconds"] < 1.0


def test_counterexample_quad_oracle():
    # reference values from adaptive quadrature of the inner integrals
    cv = vs.counterexample_values(40000)
    assert cv["A"] == pytest.approx(5.227260261773298, rel=1e-7)
    assert cv["B"] == pytest.approx(2.244477670950532, rel=1e-7)


def test_counterexample_converges_monotonically():
    ref_a, ref_b = 5.227260261773298, 2.244477670950532
    errs = [
        (abs(cv["A"] - ref_a), abs(cv["B"] - ref_b))
        for cv in (vs.counterexample_values(n) for n in (2500, 5000, 10000, 20000))
    ]
    for (a0, b0), (a1, b1) in zip(errs, errs[1:]):
        assert a1 < a0 and b1 < b0


def test_counterexample_profile_increasing():
    cv = vs.counterexample_values(10000)
    assert cv["increasing"]
    assert np.all(np.diff(cv["fstar"].values) < 0)


def test_star_invariants_trivial_and_rejected():
    grid = make_grid(DomainKind.ball(3), 64)
    assert vs.check_star_invariants(RadialFunction(grid, np.zeros(63), "cell")).passed
    with pytest.raises(PreconditionError):
        vs.check_star_invariants(RadialFunction(grid, np.ones(63), "cell"))


def test_star_invariants_random(rng):
    grid = make_grid(DomainKind.ball(3), 257)
    for _ in range(5):
        assert vs.check_star_invariants(vs.random_smooth_function(grid, rng)).passed


def test_energy_decrease_on_random_pair(rng):
    grid = make_grid(DomainKind.annulus(2, 0.3), 257)
    e = make_exponents(2.0, 5.0, 2)
    pair = DualPair(vs.random_smooth_function(grid, rng), vs.random_smooth_function(grid, rng), e)
    rep = vs.check_energy_decrease(pair)
    assert rep.passed
    assert rep.values["phi_profile"] == pytest.approx(rep.values["phi"], rel=1e-12)


def test_monotonicity_negative_control(rng):
    grid = make_grid(DomainKind.ball(3), 257)
    e = make_exponents(3.0, 3.0, 3)
    f = vs.random_smooth_function(grid, rng, modes=12)
    sol = recover_solution(DualPair(f, f.with_values(-f.values), e))
    assert not vs.check_monotonicity(sol).passed


def test_monotonicity_interval(interval_sublinear):
    rep = vs.check_monotonicity(interval_sublinear.solution)
    assert rep.passed and rep.values["min_ur_vr"] > 0


def test_zero_simplicity_flat_tangency_fails():
    r = np.linspace(0, 1, 401)
    u = (r - 0.5) ** 3
    out = vs.zero_simplicity_values(r, u, 3 * (r - 0.5) ** 2)
    assert out["count"] == 1
    assert not out["passed"]


def test_zero_simplicity_single_zero_detected():
    r = np.linspace(0, 1, 401)
    out = vs.zero_simplicity_values(r, r - 0.3, np.ones_like(r))
    assert out["count"] == 1
    assert out["zeros"][0] == pytest.approx(0.3, abs=1e-12)
    assert out["passed"]


def test_zero_simplicity_without_sign_change_fails():
    r = np.linspace(0, 1, 101)
    assert not vs.zero_simplicity_values(r, r + 1, np.ones_like(r))["passed"]


def test_zero_simplicity_trivial_rejected():
    grid = make_grid(DomainKind.ball(3), 64)
    sol = recover_solution(DualPair.zero(grid, make_exponents(3.0, 3.0, 3)))
    with pytest.raises(PreconditionError):
        vs.check_zero_simplicity(sol)


def test_zero_simplicity_minimizers(ball2_superlinear, annulus_superlinear, interval_sublinear):
    for res in (ball2_superlinear, annulus_superlinear, interval_sublinear):
        rep = vs.check_zero_simplicity(res.solution)
        assert rep.passed
        assert rep.values["u"]["count"] >= 1 and rep.values["v"]["count"] >= 1


@pytest.mark.parametrize("eps", [1e-2, 1e-3])
def test_second_variation_negative(ball2_superlinear, annulus_superlinear, eps):
    for res in (ball2_superlinear, annulus_superlinear):
        rep = vs.second_variation_test(res, eps)
        assert rep.passed
        assert rep.values["integral"] < 0
        assert rep.values["min_wN_minus_wD"] > 0


def test_second_variation_sign_flip_invariant(ball2_superlinear):
    res = ball2_superlinear
    e = res.pair.exponents
    flipped = as_result(DualPair(res.pair.f.with_values(-res.pair.f.values), res.pair.g.with_values(-res.pair.g.values), e))
    a = vs.second_variation_test(res, 1e-2).values["integral"]
    b = vs.second_variation_test(flipped, 1e-2).values["integral"]
    assert b == pytest.approx(a, rel=1e-10)


def test_second_variation_rejects_trivial_pair():
    grid = make_grid(DomainKind.ball(2), 64)
    with pytest.raises(PreconditionError):
        vs.second_variation_test(as_result(DualPair.zero(grid, make_exponents(3.0, 3.0, 2))), 1e-2)


def test_second_variation_rejects_non_monotone(rng):
    grid = make_grid(DomainKind.ball(2), 257)
    e = make_exponents(3.0, 3.0, 2)
    f = vs.random_smooth_function(grid, rng, modes=12)
    with pytest.raises(PreconditionError):
        vs.second_variation_test(as_result(DualPair(f, f.with_values(-f.values), e)), 1e-2)


def test_second_variation_rejects_unconverged(ball2_superlinear):
    res = ball2_superlinear
    with pytest.raises(PreconditionError):
        vs.second_variation_test(MinResult(res.pair, res.solution, res.phi_value, 0, False, []), 1e-2)


def test_second_variation_unsupported_on_interval(interval_sublinear):
    with pytest.raises(UnsupportedError):
        vs.second_variation_test(interval_sublinear, 1e-2)


def test_K_check():
    rep = vs.check_K((512, 1024, 2048))
    assert rep.values["interval"]["errors"][-1] < 1e-7


def test_hardy_littlewood_and_rigidity():
    assert vs.check_hardy_littlewood(50, seed=3).passed
    assert vs.check_rigidity(3).passed


def test_run_all_empty_matrix_passes():
    cfg = vs.SuiteConfig(matrix=(), static_checks=())
    assert vs.run_all(cfg) == []
    doc = json.loads(vs.report_json(cfg, []))
    assert doc["checks"] == [] and doc["suite_version"] == vs.SUITE_VERSION


def test_run_all_flags_linear_entry():
    cfg = vs.SuiteConfig(matrix=(vs.MatrixEntry("ball", 3, 0.0, 1.0, 1.0, 64),), static_checks=())
    reps = vs.run_all(cfg)
    assert len(reps) == 1
    assert not reps[0].passed
    assert "configuration error" in reps[0].notes and "pq=1" in reps[0].notes


def test_report_schema_and_reproducibility(monkeypatch):
    cfg = vs.SuiteConfig(
        matrix=(vs.MatrixEntry("interval", 1, -1.0, 0.5, 0.5, 129),),
        static_checks=("rigidity", "hardy-littlewood"),
        samples=5,
    )
    monkeypatch.setenv("NEUMANN_DUAL_THREADS", "3")
    first = vs.run_all(cfg)
    monkeypatch.setenv("NEUMANN_DUAL_THREADS", "1")
    second = vs.run_all(cfg)
    strip = lambda reps: [{k: v for k, v in r.to_dict().items()} for r in reps]  # noqa: E731
    for a, b in zip(strip(first), strip(second)):
        a["values"].pop("seconds", None)
        b["values"].pop("seconds", None)
        assert a == b
    doc = json.loads(vs.report_json(cfg, first))
    assert set(doc) == {"suite_version", "config", "checks"}
    for check in doc["checks"]:
        assert set(check) == {"name", "passed", "values", "tolerances", "notes"}


def test_unknown_static_check_reported():
    reps = vs.run_all(vs.SuiteConfig(matrix=(), static_checks=("bogus",)))
    assert not reps[0].passed


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("NEUMANN_DUAL_THREADS", "4")
    assert vs.thread_count() == 4
    monkeypatch.setenv("NEUMANN_DUAL_THREADS", "junk")
    assert vs.thread_count() == 1
