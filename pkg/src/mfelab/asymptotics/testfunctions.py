"""Glued bubble test functions.

Partial case, bubble at p with A, λ, ν the expansion data of G at p
(a = Lε, c = 4log a − 2log(1+πL²) − A):

    φ = w(x/ε) + λx + νy            r < a
    φ = G − ηH + c                  a ≤ r < b
    φ = G + c                       otherwise,      H = G + 4log r − A − λx − νy

Full case: a positive bubble at x₁, a negative one at x₂, glued to the
two-pole Green function of strengths ±8π.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import torus
from ..errors import GluingMismatch, Inadmissible
from ..functional import State, Weights
from ..green import Expansion, GreenFunction
from ..torus import Field
from . import bubble
from .bubble import BubbleSpec


@dataclass(frozen=True)
class TestFunctionPartial:
    spec: BubbleSpec
    green: GreenFunction
    coeffs: Expansion
    field: Field
    outer_radius: float
    jump: float

    __test__ = False  # not a pytest class


@dataclass(frozen=True)
class TestFunctionFull:
    spec1: BubbleSpec
    spec2: BubbleSpec
    green: GreenFunction
    field: Field
    outer_radius: float
    jump: float

    __test__ = False


def _outer_radius(a: float, cap: float) -> float:
    b = min(2 * a, cap)
    if not b > a * 1.05:
        raise GluingMismatch(f"no room for the cutoff ramp between {a:.3g} and {cap:.3g}")
    return b


def _ring_jump(green: GreenFunction, p, a: float, inner, outer, n_theta: int = 64) -> float:
    """Max difference of the inner and annulus formulas on the circle r = a (interpolated G).

    G cancels between the two formulas, so this is zero up to roundoff; it
    guards the zone assembly itself.
    """
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    dx, dy = a * np.cos(th), a * np.sin(th)
    G = torus.interpolate(green.field, np.column_stack([p[0] + dx, p[1] + dy]))
    return float(np.max(np.abs(inner(dx, dy) - outer(G, dx, dy))))


def _check_coeffs(co: Expansion, green: GreenFunction) -> None:
    """Caller-supplied coefficients must agree with the Green function's own expansion."""
    if not green.regulars:
        return
    ref = green.regulars[0]
    tol = 10 * max(ref.residual, co.residual, 1e-10)
    err = max(abs(co.A - ref.A), abs(co.lam - ref.lam), abs(co.nu - ref.nu))
    if err > tol:
        raise GluingMismatch(f"expansion data disagree with the Green function by {err:.3e} (tolerance {tol:.1e})")


def build_partial(spec: BubbleSpec, green: GreenFunction, coeffs: Optional[Expansion] = None,
                  ramp_cap: float = bubble.RAMP_CAP, weights: Optional[Weights] = None) -> TestFunctionPartial:
    grid = green.grid
    spec.check_resolved(grid)
    p = green.poles[0][0]
    if torus.torus_distance(p, spec.center) > 1e-12:
        raise ValueError("bubble center must coincide with the Green pole")
    co = coeffs if coeffs is not None else green.regulars[0]
    _check_coeffs(co, green)
    A, lam, nu = co.A, co.lam, co.nu
    eps, L = spec.eps, spec.L
    a = spec.radius
    b = _outer_radius(a, ramp_cap)
    c = 4 * np.log(a) - 2 * np.log1p(np.pi * L * L) - A

    dx, dy = torus.displacement(grid, p)
    r = np.hypot(dx, dy)
    G = green.field.values
    inner = lambda x, y: bubble.profile(np.hypot(x, y) / eps) + lam * x + nu * y
    with np.errstate(divide="ignore"):
        H = G + 4 * np.log(r) - A - lam * dx - nu * dy
    eta = bubble.ramp(r, a, b)
    phi = np.where(r < a, inner(dx, dy), G - np.where(r < b, eta * H, 0.0) + c)

    annulus = lambda Gv, x, y: Gv - (Gv + 4 * np.log(np.hypot(x, y)) - A - lam * x - nu * y) + c
    jump = _ring_jump(green, p, a, inner, annulus)
    if jump > 10 * max(co.residual, 1e-10):
        raise GluingMismatch(f"zone boundary jump {jump:.3e} exceeds tolerance")
    f = Field(grid, phi)
    if weights is not None and not State(f, weights).ok:
        raise Inadmissible("test function is not admissible")
    return TestFunctionPartial(spec, green, co, f, b, jump)


def build_full(spec1: BubbleSpec, spec2: BubbleSpec, green: GreenFunction,
               ramp_cap: Optional[float] = None, weights: Optional[Weights] = None) -> TestFunctionFull:
    grid = green.grid
    if spec1.eps != spec2.eps or spec1.L != spec2.L:
        raise ValueError("both bubbles must share eps and L")
    spec1.check_resolved(grid)
    (p1, s1), (p2, s2) = green.poles
    if s1 <= 0 or s2 >= 0:
        raise ValueError("expected a +8π pole followed by a −8π pole")
    e1, e2 = green.regulars
    eps, L = spec1.eps, spec1.L
    a = spec1.radius
    cap = min(bubble.RAMP_CAP, 0.49 * torus.torus_distance(p1, p2)) if ramp_cap is None else ramp_cap
    b = _outer_radius(a, cap)
    logq = np.log1p(np.pi * L * L)
    c = 4 * np.log(a) - 2 * logq - e1.A
    c2 = 8 * np.log(a) - 4 * logq - e1.A + e2.A

    G = green.field.values
    phi = G + c
    jumps = []
    for (p, _), e, sgn, const in (((p1, 0), e1, 1.0, 0.0), ((p2, 0), e2, -1.0, c2)):
        dx, dy = torus.displacement(grid, p)
        r = np.hypot(dx, dy)
        with np.errstate(divide="ignore"):
            H = G + sgn * 4 * np.log(r) - e.A - e.lam * dx - e.nu * dy
        eta = bubble.ramp(r, a, b)
        inner = (lambda e, sgn, const: lambda x, y: sgn * bubble.profile(np.hypot(x, y) / eps)
                 + e.lam * x + e.nu * y + const)(e, sgn, const)
        annulus = (lambda e, sgn: lambda Gv, x, y: Gv - (Gv + sgn * 4 * np.log(np.hypot(x, y)) - e.A
                                                         - e.lam * x - e.nu * y) + c)(e, sgn)
        phi = np.where(r < b, phi - eta * np.where(r < b, H, 0.0), phi)
        phi = np.where(r < a, inner(dx, dy), phi)
        jumps.append(_ring_jump(green, p, a, inner, annulus))
    jump = max(jumps)
    if jump > 10 * max(e1.residual, e2.residual, 1e-10):
        raise GluingMismatch(f"zone boundary jump {jump:.3e} exceeds tolerance")
    f = Field(grid, phi)
    if weights is not None and not State(f, weights).ok:
        raise Inadmissible("test function is not admissible")
    return TestFunctionFull(spec1, spec2, green, f, b, jump)
