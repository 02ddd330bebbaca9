import numpy as np
import pytest

from mfelab import green, torus
from mfelab.errors import InsufficientResolution, PoleCoincidence
from mfelab.functional import EIGHT_PI, Weights
from mfelab.torus import Field, Grid

import oracles

# 8π times the Ewald Robin constant of the unit square torus (oracles.ewald_robin), frozen
A_SINGLE = -5.242131703646038
# 8π(R − Γ(½,½)) from the Ewald oracle: regular part of the +8π pole in the ±8π pair at distance (½,½)
A_PAIR = -3.8558373425261476


@pytest.fixture(scope="module")
def nonlinear_4pi():
    w = Weights.constant(Grid(256))
    return w, green.nonlinear_green(w, 4 * np.pi, (0.5, 0.5))


def test_frozen_values_match_oracle():
    np.testing.assert_allclose(8 * np.pi * oracles.ewald_robin(), A_SINGLE, rtol=1e-14)
    R = oracles.ewald_robin()
    np.testing.assert_allclose(8 * np.pi * (R - oracles.ewald_green(0.5, 0.5)), A_PAIR, rtol=1e-13)


@pytest.mark.parametrize("n", [64, 128, 256])
def test_single_pole_regular_part(n):
    g = green.linear_green([((0.3, 0.6), EIGHT_PI)], Grid(n))
    e = g.regulars[0]
    np.testing.assert_allclose(e.A, A_SINGLE, atol=1e-10)
    # square-lattice symmetry kills the linear and anisotropic terms; α+β = 4π from the −8π background
    np.testing.assert_allclose([e.lam, e.nu, e.xi], 0, atol=1e-9)
    np.testing.assert_allclose(e.alpha + e.beta, 4 * np.pi, atol=1e-8)


def test_linear_green_pointwise_against_ewald():
    g = green.linear_green([((0.0, 0.0), EIGHT_PI)], Grid(128), compute_regulars=False)
    for p in [(0.25, 0.5), (0.5, 0.5), (0.125, 0.375)]:
        exact = 8 * np.pi * oracles.ewald_green(*p)
        np.testing.assert_allclose(torus.interpolate(g.field, [p])[0], exact, atol=1e-7)


def test_off_node_values_converge_second_order():
    p = (0.1, 0.3)
    exact = 8 * np.pi * oracles.ewald_green(*p)
    errs = []
    for n in (128, 256, 512):
        g = green.linear_green([((0.0, 0.0), EIGHT_PI)], Grid(n), compute_regulars=False)
        errs.append(abs(torus.interpolate(g.field, [p])[0] - exact))
    assert errs[0] > 3 * errs[1] > 9 * errs[2]


def test_two_pole_expansion():
    g = green.linear_green([((0.25, 0.25), EIGHT_PI), ((0.75, 0.75), -EIGHT_PI)], Grid(256))
    e1, e2 = g.regulars
    np.testing.assert_allclose(e1.A, A_PAIR, atol=1e-10)
    np.testing.assert_allclose(e2.A, -A_PAIR, atol=1e-10)
    for e in (e1, e2):
        np.testing.assert_allclose(e.alpha + e.beta, 0, atol=1e-9)
    assert abs(g.field.mean) < 1e-12


def test_pole_coincidence():
    with pytest.raises(PoleCoincidence):
        green.linear_green([((0.5, 0.5), 1.0), ((0.501, 0.5), -1.0)], Grid(64))


def test_crowded_poles_are_unresolved():
    with pytest.raises(InsufficientResolution):
        green.linear_green([((0.5, 0.5), 1.0), ((0.54, 0.5), -1.0)], Grid(64))


def test_translation_covariance():
    grid = Grid(64)
    a = green.linear_green([((0.0, 0.0), EIGHT_PI)], grid, compute_regulars=False).field
    b = green.linear_green([((0.25, 0.5), EIGHT_PI)], grid, compute_regulars=False).field
    np.testing.assert_allclose(np.roll(a.values, (16, 32), axis=(0, 1)), b.values, atol=1e-12)


def test_nonlinear_green_sum_rule(nonlinear_4pi):
    w, g = nonlinear_4pi
    e = g.regulars[0]
    np.testing.assert_allclose(e.alpha + e.beta, 4 * np.pi - 4 * np.pi / 2, rtol=1e-6)
    assert g.beta2 > 0 and abs(g.field.mean) < 1e-12
    assert green._dual_norm(green.equation_residual(g, w)) < 1e-7


def test_nonlinear_green_weak_form(nonlinear_4pi):
    w, g = nonlinear_4pi
    v = Field.from_function(w.grid, lambda x, y: np.cos(2 * np.pi * x) * np.sin(4 * np.pi * y + 0.2))
    assert abs(green.weak_residual(g, v, w)) < 1e-8


def test_nonlinear_green_grid_refinement(nonlinear_4pi):
    _, g = nonlinear_4pi
    fine = green.nonlinear_green(Weights.constant(Grid(512)), 4 * np.pi, (0.5, 0.5))
    np.testing.assert_allclose(fine.regulars[0].A, g.regulars[0].A, atol=1e-7)
    np.testing.assert_allclose(fine.beta2, g.beta2, rtol=1e-8)


def test_nonlinear_green_small_rho_limit():
    grid = Grid(64)
    lin = green.linear_green([((0.5, 0.5), EIGHT_PI)], grid, compute_regulars=False)
    nl = green.nonlinear_green(Weights.constant(grid), 1e-8, (0.5, 0.5), compute_regulars=False)
    assert np.max(np.abs(nl.field.values - lin.field.values)) < 1e-6


def test_nonlinear_green_rejects_critical_rho():
    with pytest.raises(ValueError):
        green.nonlinear_green(Weights.constant(Grid(64)), EIGHT_PI, (0.5, 0.5))


def test_ring_modes_of_plane_wave():
    grid = Grid(64)
    f = Field.from_function(grid, lambda x, y: np.cos(2 * np.pi * x))
    radii = np.array([0.05, 0.1, 0.2])
    modes = green.ring_modes(f, (0.0, 0.0), radii)
    from scipy.special import j0
    # ring average of cos(2πx) about the origin is J₀(2πr)
    np.testing.assert_allclose(modes[:, 0], j0(2 * np.pi * radii), atol=1e-13)


def test_serialization_roundtrip(tmp_path):
    g = green.linear_green([((0.25, 0.25), EIGHT_PI), ((0.75, 0.75), -EIGHT_PI)], Grid(64))
    paths = green.write_green(g, tmp_path / "g")
    meta = paths[1].read_text()
    assert "poles = 2" in meta and "pole.1.A" in meta
    back = green.read_green(tmp_path / "g")
    assert np.array_equal(back.field.values, g.field.values)
    assert back.poles == g.poles
    np.testing.assert_allclose(back.regulars[1].A, g.regulars[1].A, rtol=1e-15)
