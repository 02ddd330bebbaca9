import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfelab import torus
from mfelab.errors import EmptyPositiveSet, Inadmissible, NonZeroMean
from mfelab.functional import (EIGHT_PI, Params, State, Weights, admissible, evaluate_J, gradient_J,
                               mt_functional, ratio_bounds)
from mfelab.torus import Field, Grid

from conftest import smooth_field


def test_zero_state_has_zero_energy(ones64):
    u = Field.constant(ones64.grid, 0.0)
    assert evaluate_J(u, ones64, Params(4 * np.pi, 4 * np.pi)) == 0.0
    assert np.max(np.abs(gradient_J(u, ones64, Params(4 * np.pi, 4 * np.pi)).values)) == 0.0


def test_nonzero_mean_rejected(ones64):
    with pytest.raises(NonZeroMean):
        evaluate_J(Field.constant(ones64.grid, 0.5), ones64, Params(1, 1))


def test_weights_need_positive_part(grid64):
    with pytest.raises(EmptyPositiveSet):
        Weights(Field.constant(grid64, -1.0), Field.constant(grid64, 1.0))
    w = Weights(Field.constant(grid64, -1.0), Field.constant(grid64, 1.0), require_positive=False)
    assert not w.pos1.any() and w.pos2.all()


def test_masks_follow_values(grid64):
    h1 = Field.from_function(grid64, lambda x, y: np.sin(2 * np.pi * x) + 0.3)
    w = Weights(h1, Field.constant(grid64, 1.0))
    assert np.array_equal(w.pos1, h1.values > 0)


@pytest.mark.parametrize("rho1, rho2, eps, tag", [
    (4 * np.pi, 4 * np.pi, 0, "subcritical"),
    (EIGHT_PI, 4 * np.pi, 0, "partial critical"),
    (EIGHT_PI, EIGHT_PI, 0, "full critical"),
    (EIGHT_PI, EIGHT_PI, 0.5, "partial critical"),
    (9 * np.pi, 1.0, 0, "supercritical"),
])
def test_classification(rho1, rho2, eps, tag):
    assert Params(rho1, rho2, eps).classification == tag


def test_negative_parameters_rejected():
    with pytest.raises(ValueError):
        Params(-1.0, 1.0)


def test_admissibility_with_sign_changing_weight(grid64):
    h1 = Field.from_function(grid64, lambda x, y: np.sin(2 * np.pi * x) + 0.3)
    w = Weights(h1, Field.constant(grid64, 1.0))
    assert admissible(Field.constant(grid64, 0.0), w).ok
    # concentrate e^u where h1 < 0
    bad = Field.from_function(grid64, lambda x, y: -8 * np.sin(2 * np.pi * x)).centered()
    a = admissible(bad, w)
    assert not a.ok and a.I1 < 0
    with pytest.raises(Inadmissible):
        evaluate_J(bad, w, Params(1.0, 1.0))


def test_shifted_integrals_survive_large_states(ones64):
    g = ones64.grid
    u = Field.from_function(g, lambda x, y: 800 * np.cos(2 * np.pi * x)).centered()
    a = admissible(u, ones64)
    assert a.ok and np.isfinite(a.logI1) and a.logI1 > 700


def _fd_check(u, w, p, rng, h=1e-6):
    g = gradient_J(u, w, p)
    for _ in range(3):
        v = smooth_field(u.grid, rng, modes=2)
        fd = (evaluate_J(u + h * v, w, p) - evaluate_J(u - h * v, w, p)) / (2 * h)
        np.testing.assert_allclose(np.mean(g.values * v.values), fd, rtol=1e-6, atol=1e-9)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    g = Grid(32)
    w = Weights(Field.from_function(g, lambda x, y: 1 + 0.5 * np.sin(2 * np.pi * y)),
                Field.from_function(g, lambda x, y: 2 + np.cos(2 * np.pi * x)))
    _fd_check(smooth_field(g, rng, amp=0.5), w, Params(5.0, 3.0, 0.2), rng)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_hessian_matches_gradient_differences(seed):
    rng = np.random.default_rng(seed)
    g = Grid(32)
    w = Weights.constant(g)
    p = Params(6.0, 2.0)
    u = smooth_field(g, rng, amp=0.5)
    v = smooth_field(g, rng, modes=2)
    h = 1e-5
    fd = (gradient_J(u + h * v, w, p) - gradient_J(u - h * v, w, p)) * (1 / (2 * h))
    hv = State(u, w).hessian_apply(p, v)
    np.testing.assert_allclose(hv.values, fd.values - fd.mean, atol=1e-6 * np.max(np.abs(hv.values)))


def test_gradient_has_zero_mean(ones64):
    u = smooth_field(ones64.grid, np.random.default_rng(0))
    assert abs(gradient_J(u, ones64, Params(3.0, 7.0)).mean) < 1e-12


def test_mt_functional_zero_at_zero(grid64):
    assert mt_functional(Field.constant(grid64, 0.0)) == 0.0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), amp=st.floats(0.1, 20.0))
def test_mt_functional_bounded_on_smooth_states(seed, amp):
    u = smooth_field(Grid(32), np.random.default_rng(seed), amp=amp)
    # log∫e^u + log∫e^{-u} ≤ (1/16π)∫|∇u|² + C with a modest constant
    assert mt_functional(u) < 5.0


def test_ratio_bounds_floor(grid64):
    h1 = Field.from_function(grid64, lambda x, y: 1.5 + np.sin(2 * np.pi * x))
    w = Weights(h1, Field.constant(grid64, 2.0))
    rb = ratio_bounds(smooth_field(grid64, np.random.default_rng(2)), w)
    assert rb.holds
    assert rb.c1_floor == pytest.approx(min(1 / 2.5, 1 / 2.0), rel=1e-3)
