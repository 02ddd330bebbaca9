"""The energy functional J, its gradient and Hessian action, admissibility,
and the Moser-Trudinger diagnostic.

Weighted exponential integrals are evaluated in shifted form,
``∫h e^u = e^M ∫h e^{u-M}`` with ``M = max u``, so that strongly
concentrated states do not overflow.  Logs of integrals are returned
directly and the raw integrals may be ``inf`` in that regime.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import torus
from .errors import EmptyPositiveSet, Inadmissible, NonZeroMean
from .torus import Field

EIGHT_PI = 8.0 * np.pi
ADMISSIBLE_RTOL = 1e-12
MEAN_TOL = 1e-9


@dataclass(frozen=True)
class Weights:
    h1: Field
    h2: Field
    require_positive: bool = True

    def __post_init__(self):
        if self.h1.grid != self.h2.grid:
            raise ValueError("weights live on different grids")
        if self.require_positive:
            for i, h in ((1, self.h1), (2, self.h2)):
                if not np.any(h.values > 0):
                    raise EmptyPositiveSet(f"h{i} is nowhere positive")

    @property
    def grid(self):
        return self.h1.grid

    @property
    def pos1(self) -> np.ndarray:
        return self.h1.values > 0

    @property
    def pos2(self) -> np.ndarray:
        return self.h2.values > 0

    def swapped(self) -> "Weights":
        return Weights(self.h2, self.h1, self.require_positive)

    @classmethod
    def constant(cls, grid, c1: float = 1.0, c2: float = 1.0) -> "Weights":
        return cls(Field.constant(grid, c1), Field.constant(grid, c2))


@dataclass(frozen=True)
class Params:
    rho1: float
    rho2: float
    eps: float = 0.0

    def __post_init__(self):
        if min(self.rho1, self.rho2, self.eps) < 0:
            raise ValueError("rho1, rho2 and eps must be nonnegative")

    @property
    def active_rho1(self) -> float:
        return self.rho1 - self.eps

    @property
    def classification(self) -> str:
        r1, r2 = self.active_rho1, self.rho2
        tol = 1e-12 * EIGHT_PI
        if r1 > EIGHT_PI + tol or r2 > EIGHT_PI + tol:
            return "supercritical"
        c1, c2 = abs(r1 - EIGHT_PI) <= tol, abs(r2 - EIGHT_PI) <= tol
        if c1 and c2:
            return "full critical"
        if c1 or c2:
            return "partial critical"
        return "subcritical"


@dataclass(frozen=True)
class Admissibility:
    ok: bool
    I1: float
    I2: float
    logI1: float
    logI2: float


class _Exp:
    """Shifted evaluation of ∫h e^{s u}; cached per (state, weight, sign)."""

    def __init__(self, u: Field, h: Field, sign: float):
        su = sign * u.values
        self.shift = float(su.max())
        self.e = np.exp(su - self.shift)
        self.he = h.values * self.e
        self.s = float(np.mean(self.he))  # ∫h e^{su} = e^shift · s
        self.scale = float(np.mean(np.abs(h.values) * self.e))

    @property
    def ok(self) -> bool:
        return self.s > ADMISSIBLE_RTOL * self.scale

    @property
    def log_integral(self) -> float:
        return self.shift + np.log(self.s) if self.ok else float("nan")

    @property
    def integral(self) -> float:
        with np.errstate(over="ignore"):
            return float(np.exp(self.shift) * self.s)

    def density(self) -> np.ndarray:
        """h e^{su} / ∫h e^{su} (integrates to one)."""
        return self.he / self.s


@dataclass(frozen=True)
class State:
    """Evaluation cache for one (u, weights) pair; used by the solver."""

    u: Field
    w: Weights

    @cached_property
    def plus(self) -> _Exp:
        return _Exp(self.u, self.w.h1, 1.0)

    @cached_property
    def minus(self) -> _Exp:
        return _Exp(self.u, self.w.h2, -1.0)

    @property
    def ok(self) -> bool:
        return self.plus.ok and self.minus.ok

    def require(self):
        if not self.plus.ok:
            raise Inadmissible("∫h1 e^u is not positive")
        if not self.minus.ok:
            raise Inadmissible("∫h2 e^-u is not positive")

    @cached_property
    def dirichlet(self) -> float:
        return torus.dirichlet_energy(self.u)

    def J(self, p: Params) -> float:
        self.require()
        r1, r2 = p.active_rho1, p.rho2
        val = 0.5 * self.dirichlet
        if r1:
            val -= r1 * self.plus.log_integral
        if r2:
            val -= r2 * self.minus.log_integral
        return float(val)

    def gradient(self, p: Params) -> Field:
        self.require()
        r1, r2 = p.active_rho1, p.rho2
        g = -torus.laplacian(self.u).values
        if r1:
            g = g - r1 * (self.plus.density() - 1.0)
        if r2:
            g = g + r2 * (self.minus.density() - 1.0)
        return Field(self.u.grid, g)

    def hessian_apply(self, p: Params, v: Field) -> Field:
        """Second variation of J at u applied to a mean-zero direction v."""
        self.require()
        r1, r2 = p.active_rho1, p.rho2
        vv = v.values
        out = -torus.laplacian(v).values
        for rho, ex in ((r1, self.plus), (r2, self.minus)):
            if rho:
                d = ex.density()
                out = out - rho * (d * vv - d * np.mean(d * vv))
        return Field(v.grid, out - out.mean())


def _check_mean(u: Field):
    if abs(u.mean) > MEAN_TOL * max(1.0, float(np.max(np.abs(u.values)))):
        raise NonZeroMean(f"state must have zero mean (mean={u.mean:.3e})")


def admissible(u: Field, w: Weights) -> Admissibility:
    s = State(u, w)
    return Admissibility(s.ok, s.plus.integral, s.minus.integral, s.plus.log_integral, s.minus.log_integral)


def evaluate_J(u: Field, w: Weights, p: Params, require_mean_zero: bool = True) -> float:
    if require_mean_zero:
        _check_mean(u)
    return State(u, w).J(p)


def gradient_J(u: Field, w: Weights, p: Params) -> Field:
    return State(u, w).gradient(p)


def mt_functional(u: Field, coeff: float = 1.0 / (16.0 * np.pi)) -> float:
    """log∫e^u + log∫e^{-u} - coeff·∫|∇u|²; bounded above when coeff = 1/16π."""
    _check_mean(u)
    one = Field.constant(u.grid, 1.0)
    s = State(u, Weights(one, one))
    return s.plus.log_integral + s.minus.log_integral - coeff * s.dirichlet


@dataclass(frozen=True)
class RatioBounds:
    r1: float
    r2: float
    c1_floor: float

    @property
    def holds(self) -> bool:
        return self.r1 >= self.c1_floor * (1 - 1e-12) and self.r2 >= self.c1_floor * (1 - 1e-12)


def ratio_bounds(u: Field, w: Weights) -> RatioBounds:
    s = State(u, w)
    s.require()
    # ∫e^{±u}/∫h e^{±u}: the shifts cancel
    r1 = float(np.mean(s.plus.e)) / s.plus.s
    r2 = float(np.mean(s.minus.e)) / s.minus.s
    floor = min(1.0 / w.h1.max(), 1.0 / w.h2.max())
    return RatioBounds(r1, r2, floor)
