"""End-to-end existence certificate.

Check the pointwise condition, build the Green data at the best
concentration point, evaluate the blow-up lower bound and sweep the glued
test function along ε with the scale rule.  The first ε whose measured
energy falls below the bound witnesses the contradiction.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from .. import green as greens
from .. import torus
from ..errors import GluingMismatch, Inadmissible
from ..functional import EIGHT_PI, Params, Weights
from . import bounds, bubble, expansions, testfunctions
from .conditions import djlw_check

DEFAULT_EPS = tuple(float(e) for e in np.geomspace(0.2, 0.01, 14))
CANDIDATE_SEPARATION = 0.1
REDUCTION_RHO2 = 7.5 * np.pi


@dataclass(frozen=True)
class CurvePoint:
    eps: float
    L: float
    J_measured: Optional[float]
    J_predicted: Optional[float]
    status: str = "ok"


@dataclass(frozen=True)
class Certificate:
    mode: str
    rho2: float
    condition_holds: bool
    min_margin: float
    boundary: bool
    probative: bool
    points: tuple
    lower_bound: float
    curve: tuple
    contradiction_eps: Optional[float]
    N_coeff: float
    reductions: dict = field(default_factory=dict)

    @property
    def testfn_J_curve(self) -> list[tuple[float, float]]:
        return [(c.eps, c.J_measured) for c in self.curve if c.J_measured is not None]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["reductions"] = {k: v.to_dict() for k, v in self.reductions.items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["eps", "J_measured", "J_predicted", "lower_bound"])
        for c in self.curve:
            wr.writerow([repr(c.eps), _fmt(c.J_measured), _fmt(c.J_predicted), repr(self.lower_bound)])
        return buf.getvalue()


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def peak_candidates(h: torus.Field, k: int = 3, separation: float = CANDIDATE_SEPARATION) -> list[tuple]:
    """Up to k well separated local maxima of a positive weight, highest first."""
    v = h.values
    n = h.n
    is_max = (v == ndimage.maximum_filter(v, size=3, mode="wrap")) & (v > 0)
    idx = np.flatnonzero(is_max.ravel())
    idx = idx[np.argsort(-v.ravel()[idx], kind="stable")]
    out: list[tuple] = []
    for flat in idx:
        p = (int(flat // n) / n, int(flat % n) / n)
        if all(torus.torus_distance(p, q) >= separation for q in out):
            out.append(p)
        if len(out) == k:
            break
    return out


def _sweep(eps_seq, grid, build, predict, w, p, lb):
    curve, hit = [], None
    for eps in eps_seq:
        eps = float(eps)
        try:
            if not eps > 4 * grid.spacing:
                raise ValueError(f"unresolved on n={grid.n}")
            spec = bubble.BubbleSpec.from_scale_rule((0.0, 0.0), eps)
        except ValueError as exc:
            curve.append(CurvePoint(eps, float("nan"), None, None, f"skipped: {exc}"))
            continue
        try:
            phi, pred = build(spec), predict(spec)
        except GluingMismatch as exc:
            curve.append(CurvePoint(eps, spec.L, None, None, f"skipped: {exc}"))
            continue
        Jm = expansions.measure(phi, w, p)["J"]
        curve.append(CurvePoint(eps, spec.L, Jm, pred["J"]))
        if hit is None and Jm < lb:
            hit = eps
    return tuple(curve), hit


def _at(spec: bubble.BubbleSpec, center) -> bubble.BubbleSpec:
    return bubble.BubbleSpec(tuple(center), spec.eps, spec.L, spec.hval)


def certify_partial(w: Weights, rho2: float, eps_seq: Sequence[float] = DEFAULT_EPS,
                    max_candidates: int = 3) -> Certificate:
    cond = djlw_check(w, rho2)
    grid = w.grid
    best = None
    for p in peak_candidates(w.h1, max_candidates):
        g = greens.nonlinear_green(w, rho2, p)
        h1p = float(torus.interpolate(w.h1, [p])[0])
        score = g.regulars[0].A + 2 * np.log(h1p)
        if best is None or score > best[0] + 1e-12:
            best = (score, p, g, h1p)
    if best is None:
        raise Inadmissible("h1 has no positive local maximum")
    _, p, g, h1p = best
    co = g.regulars[0]
    lb = bounds.lower_bound_partial(g, co, w, rho2, h1p)
    gi = expansions.GreenIntegrals.of(g, w)
    t1 = torus.taylor_at(w.h1, p)
    params = Params(EIGHT_PI, rho2)

    def build(spec):
        return testfunctions.build_partial(_at(spec, p), g, co, weights=w).field

    def predict(spec):
        return expansions.predict_partial(_at(spec, p), co, t1, gi, rho2)

    curve, hit = _sweep(eps_seq, grid, build, predict, w, params, lb)
    N = expansions.n_coefficient(t1, torus.LocalGeometry.flat(), co.lam, co.nu, rho2)
    return Certificate("partial", float(rho2), cond.holds, cond.min_margin, abs(cond.min_margin) <= 1e-9,
                       cond.holds, (tuple(p),), lb, curve, hit, N)


def certify_full(w: Weights, eps_seq: Sequence[float] = DEFAULT_EPS, x1=None, x2=None,
                 reductions: bool = False, reduction_rho2: float = REDUCTION_RHO2) -> Certificate:
    """Two-bubble certificate; x₂ defaults to the antipode x₁ + (½, ½) of the peak of h₁."""
    c1 = djlw_check(w, EIGHT_PI)
    c2 = djlw_check(w.swapped(), EIGHT_PI)
    grid = w.grid
    if x1 is None:
        x1 = peak_candidates(w.h1, 1)[0]
    if x2 is None:
        x2 = ((x1[0] + 0.5) % 1.0, (x1[1] + 0.5) % 1.0)
    g = greens.linear_green([(x1, EIGHT_PI), (x2, -EIGHT_PI)], grid)
    h1x, h2x = (float(torus.interpolate(h, [x])[0]) for h, x in ((w.h1, x1), (w.h2, x2)))
    if h1x <= 0 or h2x <= 0:
        raise Inadmissible("bubble centers must lie in the positive sets")
    lb = bounds.lower_bound_full(g, h1x, h2x)
    t1, t2 = torus.taylor_at(w.h1, x1), torus.taylor_at(w.h2, x2)
    params = Params(EIGHT_PI, EIGHT_PI)

    def specs(spec):
        return _at(spec, x1), _at(spec, x2)

    def build(spec):
        return testfunctions.build_full(*specs(spec), g, weights=w).field

    def predict(spec):
        return expansions.predict_full(spec, *g.regulars, t1, t2)

    curve, hit = _sweep(eps_seq, grid, build, predict, w, params, lb)
    # the bracket sum at the chosen points decides the sign of the gap
    margin = float(c1.margin.values[_node(grid, x1)] + c2.margin.values[_node(grid, x2)])
    holds = c1.holds and c2.holds
    N = float(expansions.predict_full(bubble.BubbleSpec((0, 0), 0.05, 2.0), *g.regulars, t1, t2)["N_coeff"])
    red = {}
    if reductions:
        red["case1"] = certify_partial(w, reduction_rho2, eps_seq)
        red["case2"] = certify_partial(w.swapped(), reduction_rho2, eps_seq)
    return Certificate("full", EIGHT_PI, holds, min(c1.min_margin, c2.min_margin), abs(margin) <= 1e-9,
                       holds, (tuple(x1), tuple(x2)), lb, curve, hit, N, red)


def _node(grid, p) -> tuple:
    return tuple(int(round(c * grid.n)) % grid.n for c in p)


def certificate(w: Weights, rho2: float, mode: str = "partial", eps_seq: Sequence[float] = DEFAULT_EPS,
                **kwargs) -> Certificate:
    if mode == "partial":
        return certify_partial(w, rho2, eps_seq, **kwargs)
    if mode == "full":
        return certify_full(w, eps_seq, **kwargs)
    raise ValueError(f"unknown mode {mode!r}")
