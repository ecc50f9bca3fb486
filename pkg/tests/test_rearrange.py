import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from neumann_dual import (
    DecreasingProfile,
    DomainKind,
    MeasureProfile,
    PreconditionError,
    RadialFunction,
    UnsupportedError,
    cumulative_I,
    decreasing_rearrangement,
    flip_F,
    make_grid,
    project_zero_average,
    schwarz_symmetrization,
    star_transform,
)
from neumann_dual.rearrange import (
    flip_profile,
    hardy_littlewood_gap,
    profile_inner,
    rearrange_profile,
    rigidity_check,
    star_transform_grid,
)
from neumann_dual.verify_suite import random_smooth_function, star_invariant_values

STAR_KINDS = [DomainKind.ball(2), DomainKind.ball(3), DomainKind.ball(5), DomainKind.annulus(2, 0.3)]

cell_arrays = hnp.arrays(np.float64, st.integers(15, 80), elements=st.floats(-100, 100))


def test_sine_star_is_cosine_profile():
    grid = make_grid(DomainKind.interval(), 4097)
    h = project_zero_average(RadialFunction.from_callable(grid, lambda x: np.sin(np.pi * x)))
    st_ = star_transform(h)
    x = grid.midpoints
    got = st_.evaluate(x + 1.0)
    assert np.max(np.abs(got - np.cos(np.pi * (x + 1) / 2))) <= 5e-3


def test_star_of_zero_is_zero():
    grid = make_grid(DomainKind.ball(3), 32)
    st_ = star_transform(RadialFunction(grid, np.zeros(31), "cell"))
    assert np.all(st_.values == 0.0)


def test_star_rejects_nonzero_average():
    grid = make_grid(DomainKind.ball(3), 32)
    with pytest.raises(PreconditionError):
        star_transform(RadialFunction(grid, np.ones(31), "cell"))


def test_schwarz_is_ball_only():
    grid = make_grid(DomainKind.annulus(2, 0.3), 32)
    with pytest.raises(UnsupportedError):
        schwarz_symmetrization(RadialFunction(grid, np.ones(31), "cell"))


def test_schwarz_of_decreasing_is_identity():
    grid = make_grid(DomainKind.ball(3), 65)
    h = RadialFunction.from_callable(grid, lambda r: 1 - r**2, "cell")
    prof = schwarz_symmetrization(h)
    assert np.allclose(prof.evaluate(0.5 * (grid.s_nodes[:-1] + grid.s_nodes[1:])), h.values)


@pytest.mark.parametrize("kind", STAR_KINDS, ids=str)
def test_star_invariants_random(kind, rng):
    grid = make_grid(kind, 513)
    for _ in range(10):
        v = star_invariant_values(random_smooth_function(grid, rng))
        assert v["avg_ratio"] <= 1e-8
        assert v["norm_drift"] <= 1e-6
        assert v["identity_err"] <= 1e-10
        assert v["monotone"]


@given(vals=cell_arrays)
@settings(max_examples=60, deadline=None)
def test_rearrangement_equimeasurable(vals):
    grid = make_grid(DomainKind.ball(3), vals.size + 1)
    h = RadialFunction(grid, vals, "cell")
    prof = decreasing_rearrangement(h)
    assert isinstance(prof, DecreasingProfile)
    assert np.all(np.diff(prof.values) <= 0)
    # breakpoints are cumulative positions, so a cell length carries
    # roundoff of order eps * |Omega| regardless of how small the cell is
    sup, total = max(h.sup_norm(), 1e-300), grid.total_measure
    for t in (1.0, 2.0, 3.0):
        floor = 1e-12 * sup * total ** (1.0 / t)
        assert prof.lp_norm(t) == pytest.approx(h.lp_norm(t), rel=1e-12, abs=floor)
    assert prof.integral() == pytest.approx(float(np.dot(grid.cell_measures, vals)), abs=1e-12 * sup * total)


@given(vals=cell_arrays)
@settings(max_examples=60, deadline=None)
def test_flip_keeps_cumulative_nonnegative(vals):
    grid = make_grid(DomainKind.annulus(2, 0.3), vals.size + 1)
    h = project_zero_average(RadialFunction(grid, vals, "cell"))
    fp = flip_profile(h)
    I = fp.cumulative(grid.s_nodes)
    scale = max(h.sup_norm(), 1e-300)
    assert np.min(I) >= -1e-10 * scale
    assert np.max(np.abs(I - np.abs(cumulative_I(h).values))) <= 1e-10 * scale


def test_flip_F_has_cumulative_identity_at_nodes(rng):
    grid = make_grid(DomainKind.ball(3), 257)
    h = random_smooth_function(grid, rng)
    fl = flip_F(h)
    err = np.max(np.abs(cumulative_I(fl).values - np.abs(cumulative_I(h).values)))
    assert err <= 1e-12 * h.sup_norm()


def test_resampled_star_keeps_cumulative_at_nodes(rng):
    grid = make_grid(DomainKind.ball(2), 257)
    h = random_smooth_function(grid, rng)
    res = star_transform_grid(h)
    prof = star_transform(h)
    err = np.max(np.abs(cumulative_I(res.function).values - prof.cumulative(grid.s_nodes)))
    assert err <= 1e-12 * h.sup_norm()
    assert res.max_drift < 1e-2


def test_profile_csv_roundtrip():
    prof = MeasureProfile(2.0, np.array([0.0, 0.5, 1.25, 2.0]), np.array([3.0, -1.0, 0.1]))
    back = MeasureProfile.from_csv(prof.to_csv())
    assert np.array_equal(back.breakpoints, prof.breakpoints)
    assert np.array_equal(back.values, prof.values)


def test_decreasing_profile_rejects_increasing_values():
    with pytest.raises(PreconditionError):
        DecreasingProfile(1.0, np.array([0.0, 0.5, 1.0]), np.array([0.0, 1.0]))


def step_profiles():
    def build(data):
        total, cuts, vals = data
        b = np.unique(np.concatenate([[0.0], np.sort(cuts) * total, [total]]))
        return MeasureProfile(total, b, np.resize(vals, b.size - 1))

    return st.tuples(
        st.floats(0.5, 5.0),
        hnp.arrays(np.float64, st.integers(1, 30), elements=st.floats(0.001, 0.999)),
        hnp.arrays(np.float64, 31, elements=st.floats(-10, 10)),
    ).map(build)


@given(a=step_profiles(), b_vals=hnp.arrays(np.float64, 7, elements=st.floats(-10, 10)))
@settings(max_examples=80, deadline=None)
def test_hardy_littlewood(a, b_vals):
    b = MeasureProfile(a.total, np.linspace(0, a.total, 8), b_vals)
    assert hardy_littlewood_gap(a, b) >= -1e-10


def test_rigidity_controls():
    b = np.linspace(0, 1, 6)
    psi = MeasureProfile(1.0, b, np.array([5.0, 4.0, 3.0, 2.0, 1.0]))
    dec = MeasureProfile(1.0, b, np.array([2.0, 1.0, 0.0, -1.0, -2.0]))
    pos = rigidity_check(dec, psi)
    assert pos.gap == pytest.approx(0.0, abs=1e-14) and pos.distance == pytest.approx(0.0, abs=1e-14)
    shuffled = MeasureProfile(1.0, b, np.array([0.0, 1.0, 2.0, -1.0, -2.0]))
    neg = rigidity_check(shuffled, psi)
    assert neg.gap > 0 and neg.distance > 0


def test_rigidity_needs_strictly_decreasing_weight():
    b = np.linspace(0, 1, 3)
    with pytest.raises(PreconditionError):
        rigidity_check(MeasureProfile(1.0, b, np.ones(2)), MeasureProfile(1.0, b, np.ones(2)))


def test_rearrange_profile_is_stable_on_ties():
    prof = MeasureProfile(1.0, np.array([0.0, 0.3, 0.6, 1.0]), np.array([1.0, 2.0, 1.0]))
    out = rearrange_profile(prof)
    assert np.allclose(out.values, [2.0, 1.0, 1.0]) or np.allclose(out.values, [2.0, 1.0])
    assert profile_inner(out, out) == pytest.approx(profile_inner(prof, prof))
