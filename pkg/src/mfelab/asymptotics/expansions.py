"""Predicted vs measured expansions of the test-function energy.

Every displayed term of the asymptotic expansions is evaluated from the
Green expansion data at the concentration point, the second-order Taylor
data of the weights there and the local geometry (flat on the torus).
The measured side integrates the glued field on the grid.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .. import torus
from ..functional import EIGHT_PI, Params, State, Weights, _Exp
from ..green import Expansion, GreenFunction
from ..torus import LocalGeometry, TaylorData
from . import bubble
from .bubble import BubbleSpec

KEYS = ("dirichlet", "mean", "logI1", "logI2", "J")


@dataclass(frozen=True)
class ExpansionReport:
    eps: float
    L: float
    predicted: dict
    measured: dict
    residual: float
    rate_fit: Optional[float] = None
    terms: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def gap_scale(eps: float) -> float:
    """ε²(−log ε²), the order of the certificate gap."""
    return eps * eps * -np.log(eps * eps)


def m_coefficient(geom: LocalGeometry, lam: float, nu: float) -> float:
    return (-geom.K / 2 + ((geom.b1 + lam) ** 2 + (geom.b2 + nu) ** 2) / 4) / np.pi


def _weight_bracket(t: TaylorData, geom: LocalGeometry, lam: float, nu: float) -> float:
    return t.k3 + t.k5 + t.k1 * (geom.b1 + lam) + t.k2 * (geom.b2 + nu)


def n_coefficient(t: TaylorData, geom: LocalGeometry, lam: float, nu: float, rho2: float) -> float:
    """𝓝 = 𝓜 + (4π − ρ₂/2)/2π + [k₃+k₅+k₁(b₁+λ)+k₂(b₂+ν)]/(2πh₁(p))."""
    return (m_coefficient(geom, lam, nu) + (4 * np.pi - rho2 / 2) / (2 * np.pi)
            + _weight_bracket(t, geom, lam, nu) / (2 * np.pi * t.value))


def n_decomposed(t: TaylorData, geom: LocalGeometry, lam: float, nu: float, rho2: float) -> float:
    """Sum-of-squares form of 𝓝.

    Uses Δh₁ = 2(k₃+k₅) and ∇log h₁ = (k₁, k₂)/h₁, so it agrees with
    :func:`n_coefficient` for any h₁(p) > 0.
    """
    h = t.value
    g1, g2 = t.k1 / h, t.k2 / h
    dlog = t.laplacian() / h - g1 * g1 - g2 * g2
    sq = (geom.b1 + lam + g1) ** 2 + (geom.b2 + nu + g2) ** 2
    return (dlog + (EIGHT_PI - rho2) - 2 * geom.K + sq) / (4 * np.pi)


@dataclass(frozen=True)
class GreenIntegrals:
    """∫h₂e^{−G}, β₂ and ∫h₂Ge^{−G} for a nonlinear Green function."""

    log_int: float
    beta2: float
    int_G: float

    @classmethod
    def of(cls, g: GreenFunction, w: Weights) -> "GreenIntegrals":
        ex = _Exp(g.field, w.h2, -1.0)
        # β₂∫h₂Ge^{−G} = mean of G·density
        return cls(ex.log_integral, float(np.exp(-ex.log_integral)),
                   float(np.mean(g.field.values * ex.density())) * float(np.exp(ex.log_integral)))


def predict_partial(spec: BubbleSpec, coeffs: Expansion, taylor_h1: TaylorData, gi: GreenIntegrals,
                    rho2: float, geom: LocalGeometry = LocalGeometry.flat()) -> dict:
    eps, L = spec.eps, spec.L
    A, lam, nu = coeffs.A, coeffs.lam, coeffs.nu
    la = np.log(L * eps)
    lq = np.log1p(np.pi * L * L)
    e2 = eps * eps
    M = m_coefficient(geom, lam, nu)
    S = _weight_bracket(taylor_h1, geom, lam, nu) / (2 * np.pi * taylor_h1.value)
    D = (-32 * np.pi * la + 8 * np.pi * A - rho2 * gi.beta2 * gi.int_G
         + 16 * np.pi * lq - 16 * np.pi**2 * L * L / (1 + np.pi * L * L))
    mean = 4 * la - A - 2 * lq - 2 * e2 * lq
    logI1 = (np.log(taylor_h1.value) + np.log(e2) + M * e2 * lq
             - (M + (4 * np.pi - rho2 / 2) / (2 * np.pi)) * e2 * 2 * la + S * e2 * (lq - 2 * la))
    logI2 = gi.log_int - 4 * la + 2 * lq + A
    J = 0.5 * D - EIGHT_PI * (logI1 - mean) - rho2 * (logI2 + mean)
    return dict(dirichlet=D, mean=mean, logI1=logI1, logI2=logI2, J=J,
                N_coeff=n_coefficient(taylor_h1, geom, lam, nu, rho2))


def predict_full(spec: BubbleSpec, e1: Expansion, e2: Expansion, t1: TaylorData, t2: TaylorData,
                 geom1: LocalGeometry = LocalGeometry.flat(), geom2: LocalGeometry = LocalGeometry.flat()) -> dict:
    eps, L = spec.eps, spec.L
    q = np.pi * L * L
    la = np.log(L * eps)
    lq = np.log1p(q)
    gs = gap_scale(eps)
    dA = e1.A - e2.A
    M1 = m_coefficient(geom1, e1.lam, e1.nu)
    M2 = m_coefficient(geom2, -e2.lam, -e2.nu)
    N1 = M1 + _weight_bracket(t1, geom1, e1.lam, e1.nu) / (2 * np.pi * t1.value)
    N2 = M2 + _weight_bracket(t2, geom2, -e2.lam, -e2.nu) / (2 * np.pi * t2.value)
    D = 32 * np.pi * lq - 32 * np.pi**2 * L * L / (1 + q) - 64 * np.pi * la + 8 * np.pi * dA
    logI1 = np.log(t1.value) + np.log(eps * eps) + N1 * gs
    logI2 = np.log(t2.value) + dA + 4 * np.log(np.pi) - 6 * np.log(eps) + 4 / q + N2 * gs
    J = 0.5 * D - EIGHT_PI * (logI1 + logI2)
    brackets = 0.0
    for t, g in ((t1, geom1), (t2, geom2)):
        h = t.value
        brackets += t.laplacian() / h - (t.k1**2 + t.k2**2) / h**2 - 2 * g.K
    bound = (-16 * np.pi * np.log(np.pi) - 16 * np.pi - 4 * np.pi * dA - EIGHT_PI * np.log(t1.value)
             - EIGHT_PI * np.log(t2.value) - 2 * brackets * gs)
    return dict(dirichlet=D, logI1=logI1, logI2=logI2, J=J, N_coeff=N1 + N2, upper_bound=bound)


def measure(phi: torus.Field, w: Weights, p: Params) -> dict:
    s = State(phi, w)
    s.require()
    u = phi.centered()
    return dict(dirichlet=s.dirichlet, mean=phi.mean, logI1=s.plus.log_integral, logI2=s.minus.log_integral,
                J=State(u, w).J(p))


def report(spec: BubbleSpec, predicted: dict, measured: dict) -> ExpansionReport:
    return ExpansionReport(spec.eps, spec.L, predicted, measured, abs(predicted["J"] - measured["J"]))


def rate_fit(reports: Sequence[ExpansionReport]) -> Optional[float]:
    """Slope of log(residual) against log ε (None for fewer than two usable points)."""
    pts = [(np.log(r.eps), np.log(r.residual)) for r in reports if r.residual > 0]
    if len(pts) < 2:
        return None
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def normalized_residuals(reports: Sequence[ExpansionReport]) -> list[float]:
    return [r.residual / gap_scale(r.eps) for r in reports]


def with_rate(reports: Sequence[ExpansionReport]) -> list[ExpansionReport]:
    rf = rate_fit(reports)
    return [ExpansionReport(r.eps, r.L, r.predicted, r.measured, r.residual, rf, r.terms) for r in reports]


def write_reports(reports: Sequence[ExpansionReport], path) -> None:
    Path(path).write_text(json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True))
