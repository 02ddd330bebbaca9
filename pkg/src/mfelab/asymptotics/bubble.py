"""The standard bubble w = −2log(1+π|x|²), its closed-form integrals, the
gluing cutoff and the scale rule for L."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import torus
from ..torus import Field, Grid

# bubble zones must sit inside the fundamental cell around their center
MAX_GLUING_RADIUS = 0.4
RAMP_CAP = 0.45
# |d/dt| of the quintic smoothstep peaks at 15/8 (t = 1/2)
RAMP_SLOPE = 15.0 / 8.0


@dataclass(frozen=True)
class BubbleSpec:
    center: tuple
    eps: float
    L: float
    hval: float = 1.0

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not self.L > 1:
            raise ValueError("L must exceed 1")
        if not self.L * self.eps < MAX_GLUING_RADIUS:
            raise ValueError(f"L*eps = {self.L * self.eps:.3g} does not fit in the cell (< {MAX_GLUING_RADIUS})")

    @property
    def radius(self) -> float:
        return self.L * self.eps

    def check_resolved(self, grid: Grid):
        if not self.eps > 4 * grid.spacing:
            raise ValueError(f"eps = {self.eps} is not resolved on n = {grid.n} (needs > 4h)")

    @classmethod
    def from_scale_rule(cls, center, eps: float, hval: float = 1.0) -> "BubbleSpec":
        return cls(tuple(center), eps, scale_rule_L(eps), hval)


def scale_rule_L(eps: float) -> float:
    """L with L⁴ε² = 1/log(−log ε)."""
    if not 0 < eps < np.exp(-1):
        raise ValueError("scale rule needs 0 < eps < 1/e")
    return float((1.0 / (eps**2 * np.log(-np.log(eps)))) ** 0.25)


def profile(r, hval: float = 1.0):
    return -2.0 * np.log1p(np.pi * hval * np.asarray(r) ** 2)


def mass_outside(R: float) -> float:
    """∫_{|x|>R} e^w dx."""
    return 1.0 / (1.0 + np.pi * R * R)


def energy(L: float) -> float:
    """∫_{B_L} |∇w|² dx."""
    q = np.pi * L * L
    return 16 * np.pi * np.log1p(q) - 16 * np.pi * q / (1 + q)


def integral_w(L: float) -> float:
    """∫_{B_L} w dx."""
    q = np.pi * L * L
    return -2.0 * ((1 + q) * np.log1p(q) - q)


def bubble_field(spec: BubbleSpec, grid: Grid) -> Field:
    """w((x − center)/ε) with the minimum-image distance (the plain profile)."""
    spec.check_resolved(grid)
    dx, dy = torus.displacement(grid, spec.center)
    return Field(grid, profile(np.hypot(dx, dy) / spec.eps, spec.hval))


def bubble_family(grid: Grid, eps_seq, center=(0.5, 0.5), L: float = 2.0) -> list[Field]:
    """Mean-zero bubbles w(x/ε) − mean along a sequence of scales."""
    return [bubble_field(BubbleSpec(tuple(center), e, L), grid).centered() for e in eps_seq]


def ramp(r, a: float, b: float):
    """Cutoff η: 1 on r ≤ a, 0 on r ≥ b, quintic smoothstep in log r between.

    |∇η| ≤ RAMP_SLOPE / (a·log(b/a)); for b = 2a that is ≈ 2.705/a.
    """
    t = np.clip(np.log(np.maximum(r, 1e-300) / a) / np.log(b / a), 0.0, 1.0)
    return 1.0 - t**3 * (10 - 15 * t + 6 * t * t)


def ramp_constant(a: float, b: float) -> float:
    """C in |∇η| ≤ C/a for the ramp on [a, b]."""
    return RAMP_SLOPE / np.log(b / a)
