import numpy as np
import pytest

from mfelab import green, torus
from mfelab.asymptotics import bounds, bubble, expansions, testfunctions
from mfelab.asymptotics.bubble import BubbleSpec
from mfelab.errors import GluingMismatch
from mfelab.functional import EIGHT_PI, Params, State, Weights
from mfelab.green import Expansion
from mfelab.torus import Grid

RHO2 = 4 * np.pi
P = (0.5, 0.5)


@pytest.fixture(scope="module")
def partial_setup():
    w = Weights.constant(Grid(256))
    return w, green.nonlinear_green(w, RHO2, P)


@pytest.fixture(scope="module")
def full_setup():
    w = Weights.constant(Grid(256))
    g = green.linear_green([((0.25, 0.25), EIGHT_PI), ((0.75, 0.75), -EIGHT_PI)], w.grid)
    return w, g


def _spec(eps, center=P):
    return BubbleSpec.from_scale_rule(center, eps)


def test_far_field_is_shifted_green(partial_setup):
    w, g = partial_setup
    spec = _spec(0.05)
    tfn = testfunctions.build_partial(spec, g, weights=w)
    co = g.regulars[0]
    c = 4 * np.log(spec.radius) - 2 * np.log1p(np.pi * spec.L**2) - co.A
    dx, dy = torus.displacement(g.grid, P)
    far = np.hypot(dx, dy) >= tfn.outer_radius
    assert np.array_equal(tfn.field.values[far], (g.field.values + c)[far])


def test_center_value_and_admissibility(partial_setup):
    w, g = partial_setup
    tfn = testfunctions.build_partial(_spec(0.05), g, weights=w)
    assert tfn.field.values[128, 128] == 0.0
    assert State(tfn.field, w).ok
    assert tfn.jump < 1e-12


def test_mean_matches_leading_terms(partial_setup):
    w, g = partial_setup
    co = g.regulars[0]
    for eps in (0.05, 0.025):
        spec = _spec(eps)
        phi = testfunctions.build_partial(spec, g, weights=w).field
        L, a = spec.L, spec.radius
        predicted = 4 * np.log(a) - co.A - 2 * np.log1p(np.pi * L * L) - 2 * eps**2 * np.log1p(np.pi * L * L)
        assert abs(phi.mean - predicted) <= 30 * a**4 * abs(np.log(a))


def test_gluing_mismatch_detected(partial_setup):
    w, g = partial_setup
    co = g.regulars[0]
    for bad in (dict(A=co.A + 1e-3), dict(lam=co.lam + 1e-3)):
        wrong = Expansion(**{**dict(A=co.A, lam=co.lam, nu=co.nu, alpha=co.alpha, beta=co.beta, xi=co.xi,
                                    residual=co.residual), **bad})
        with pytest.raises(GluingMismatch):
            testfunctions.build_partial(_spec(0.05), g, wrong)
    # an exact copy is accepted
    testfunctions.build_partial(_spec(0.05), g, Expansion(**{**co.__dict__}))


def test_center_must_be_pole(partial_setup):
    _, g = partial_setup
    with pytest.raises(ValueError):
        testfunctions.build_partial(_spec(0.05, (0.4, 0.5)), g)


def test_partial_expansion_residual_shrinks(partial_setup):
    w, g = partial_setup
    co = g.regulars[0]
    gi = expansions.GreenIntegrals.of(g, w)
    t1 = torus.taylor_at(w.h1, P)
    reps = []
    for eps in (0.1, 0.05, 0.025):
        spec = _spec(eps)
        phi = testfunctions.build_partial(spec, g, weights=w).field
        reps.append(expansions.report(spec, expansions.predict_partial(spec, co, t1, gi, RHO2),
                                      expansions.measure(phi, w, Params(EIGHT_PI, RHO2))))
    r = expansions.normalized_residuals(reps)
    assert r[0] > r[1] > r[2]
    reps = expansions.with_rate(reps)
    assert reps[0].rate_fit is not None and reps[0].rate_fit > 0
    assert reps[0].predicted["N_coeff"] == pytest.approx(1.0)


def test_report_json(tmp_path, partial_setup):
    w, g = partial_setup
    spec = _spec(0.05)
    phi = testfunctions.build_partial(spec, g, weights=w).field
    gi = expansions.GreenIntegrals.of(g, w)
    rep = expansions.report(spec, expansions.predict_partial(spec, g.regulars[0], torus.taylor_at(w.h1, P), gi, RHO2),
                            expansions.measure(phi, w, Params(EIGHT_PI, RHO2)))
    expansions.write_reports([rep], tmp_path / "r.json")
    import json
    doc = json.loads((tmp_path / "r.json").read_text())[0]
    for k in ("dirichlet", "mean", "logI1", "logI2", "J", "N_coeff"):
        assert k in doc["predicted"]
    assert doc["residual"] == pytest.approx(abs(doc["predicted"]["J"] - doc["measured"]["J"]))


def test_green_integrals_by_direct_quadrature(partial_setup):
    w, g = partial_setup
    gi = expansions.GreenIntegrals.of(g, w)
    G = g.field.values
    np.testing.assert_allclose(gi.log_int, np.log(np.mean(np.exp(-G))), rtol=1e-12)
    np.testing.assert_allclose(gi.int_G, np.mean(G * np.exp(-G)), rtol=1e-10)
    np.testing.assert_allclose(gi.beta2, g.beta2, rtol=1e-12)


def test_lower_bound_partial_constant_weight(partial_setup):
    w, g = partial_setup
    co = g.regulars[0]
    gi = expansions.GreenIntegrals.of(g, w)
    manual = (-8 * np.pi - 8 * np.pi * np.log(np.pi) - 4 * np.pi * co.A - RHO2 / 2 * gi.beta2 * gi.int_G
              - RHO2 * gi.log_int)
    np.testing.assert_allclose(bounds.lower_bound_partial(g, co, w, RHO2, 1.0), manual, rtol=1e-14)


# -- full case ------------------------------------------------------------------


def _full(w, g, eps):
    return testfunctions.build_full(_spec(eps, (0.25, 0.25)), _spec(eps, (0.75, 0.75)), g, weights=w)


def test_full_antisymmetry(full_setup):
    w, g = full_setup
    v = _full(w, g, 0.05).field.values
    s = v + np.roll(v, (128, 128), axis=(0, 1))
    assert np.ptp(s) < 1e-8


def test_full_admissible_and_continuous(full_setup):
    w, g = full_setup
    tfn = _full(w, g, 0.035)
    a = State(tfn.field, w)
    assert a.plus.ok and a.minus.ok
    assert tfn.jump < 1e-12


def test_full_needs_room_for_ramp(full_setup):
    w, g = full_setup
    with pytest.raises(GluingMismatch):
        _full(w, g, 0.1)


def test_full_dirichlet_within_budget(full_setup):
    w, g = full_setup
    t = torus.taylor_at(w.h1, (0.25, 0.25))
    for eps in (0.05, 0.025, 0.0175):
        spec = _spec(eps, (0.25, 0.25))
        D = torus.dirichlet_energy(_full(w, g, eps).field)
        pred = expansions.predict_full(spec, *g.regulars, t, t)["dirichlet"]
        a = spec.radius
        assert abs(D - pred) <= 100 * a**4 * abs(np.log(a))


def test_full_prediction_constants(full_setup):
    _, g = full_setup
    e1, e2 = g.regulars
    t = torus.TaylorData(1.0, 0, 0, 0, 0, 0)
    pred = expansions.predict_full(_spec(0.05, (0.25, 0.25)), e1, e2, t, t)
    const = -16 * np.pi * np.log(np.pi) - 16 * np.pi - 4 * np.pi * (e1.A - e2.A)
    assert pred["upper_bound"] == pytest.approx(const, rel=1e-14)
    # the bound formula and the lower bound share their constant
    assert bounds.lower_bound_full(g, 1.0, 1.0) == pytest.approx(const, rel=1e-14)


def test_full_residual_shrinks(full_setup):
    w, g = full_setup
    t = torus.taylor_at(w.h1, (0.25, 0.25))
    res = []
    for eps in (0.05, 0.025, 0.0175):
        spec = _spec(eps, (0.25, 0.25))
        me = expansions.measure(_full(w, g, eps).field, w, Params(EIGHT_PI, EIGHT_PI))
        pr = expansions.predict_full(spec, *g.regulars, t, t)
        res.append(abs(me["J"] - pr["J"]) / expansions.gap_scale(eps))
    assert res[0] > res[1] > res[2]
