"""Pointwise existence conditions, the Pohozaev mass constraint and the neck bound."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import torus
from ..errors import BadRadii, EmptyPositiveSet
from ..functional import EIGHT_PI, Weights
from ..torus import Field


@dataclass(frozen=True)
class ConditionReport:
    holds: bool
    margin: Field  # NaN off the positive set
    min_margin: float
    argmin: tuple
    mask: np.ndarray


def log_laplacian(h: Field) -> np.ndarray:
    """Δ log h = Δh/h − |∇h|²/h² on {h > 0} (NaN elsewhere), from spectral derivatives of h."""
    lap = torus.laplacian(h).values
    hx, hy = torus.gradient(h)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = lap / h.values - (hx.values**2 + hy.values**2) / h.values**2
    out[h.values <= 0] = np.nan
    return out


def djlw_check(w: Weights, rho2: float, geom_K: Optional[Field] = None) -> ConditionReport:
    """Margin Δlog h₁ + (8π − ρ₂) − 2K on M₁⁺; ρ₂ = 8π gives the full-critical form.

    Swap the weights (``w.swapped()``) to test the second function.
    """
    mask = w.pos1
    if not mask.any():
        raise EmptyPositiveSet("h1 has no positive set")
    K = 0.0 if geom_K is None else geom_K.values
    margin = log_laplacian(w.h1) + (EIGHT_PI - rho2) - 2.0 * K
    margin = np.where(mask, margin, np.nan)
    flat = np.where(mask, margin, np.inf)
    idx = np.unravel_index(int(np.argmin(flat)), flat.shape)
    m = float(flat[idx])
    # an exact zero margin (boundary case) is not a pass
    tol = 1e-9 * (1.0 + abs(EIGHT_PI - rho2))
    return ConditionReport(m > tol, Field(w.grid, margin), m, tuple(int(i) for i in idx), mask)


def pohozaev_admissible(sigma1: float, sigma2: float, tol: float = 1e-9) -> bool:
    if sigma1 < 0 or sigma2 < 0:
        raise ValueError("masses must be nonnegative")
    return abs((sigma1 - sigma2) ** 2 - (sigma1 + sigma2)) <= tol


def pohozaev_roots(sigma1: float) -> tuple[float, ...]:
    """Nonnegative σ₂ with (σ₁ − σ₂)² = σ₁ + σ₂, i.e. σ₂² − (2σ₁+1)σ₂ + σ₁² − σ₁ = 0."""
    b, c = -(2 * sigma1 + 1), sigma1**2 - sigma1
    disc = b * b - 4 * c
    if disc < 0:
        return ()
    roots = sorted({(-b - np.sqrt(disc)) / 2, (-b + np.sqrt(disc)) / 2})
    return tuple(float(r) for r in roots if r >= -1e-14)


def neck_bound(a: float, b: float, r_in: float, r_out: float) -> float:
    """Least Dirichlet energy on the annulus r_in < r < r_out among functions equal to a and b on its rims."""
    if not 0 < r_in < r_out:
        raise BadRadii(f"need 0 < r_in < r_out, got {r_in}, {r_out}")
    return 4 * np.pi * (a - b) ** 2 / (-np.log(r_in**2) + np.log(r_out**2))
