"""Green's functions on the unit torus and their local expansion data.

Near a pole p of strength c every Green field is written as

    G(x) = -(c/2π) log r + A + λ x' + ν y' + α x'² + β y'² + ξ x'y' + O(r³)

with (x', y') = x - p.  The coefficients are extracted from angular ring
modes of the spectral field.  Ring modes are evaluated exactly through the
Jacobi-Anger expansion of each Fourier mode, after a Gaussian mollifier of
width ~2.5 grid cells has removed the band-limit ripple of the discrete
delta.  The mollifier acts on the local model in closed form (the heat
semigroup on polynomials and ½E₁ on the logarithm), so the fit carries no
smoothing bias.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import factorial
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import special

from . import torus
from .errors import (AdmissibilityLoss, IllConditionedFit, InsufficientResolution, LineSearchStall,
                     NonConvergence, PoleCoincidence)
from .functional import EIGHT_PI, Params, Weights, _Exp
from .torus import Field, Grid

# band of radii and mollifier width, in grid cells
MOLLIFIER_CELLS = 2.5
INNER_WIDTHS = 2.0
OUTER_FRACTION = 0.4  # of the distance to the nearest other pole
RHO_MAX = 0.15
N_RADII = 24
DEGREE = 6  # polynomial terms per angular mode


@dataclass(frozen=True)
class Expansion:
    A: float
    lam: float
    nu: float
    alpha: float
    beta: float
    xi: float
    residual: float = 0.0

    def as_dict(self) -> dict:
        return dict(A=self.A, lambda_=self.lam, nu=self.nu, alpha=self.alpha, beta=self.beta, xi=self.xi,
                    residual=self.residual)


@dataclass(frozen=True)
class GreenFunction:
    field: Field
    poles: tuple
    beta2: Optional[float] = None
    regulars: tuple = ()
    rho2: Optional[float] = None
    info: dict = field(default_factory=dict, compare=False)

    @property
    def grid(self) -> Grid:
        return self.field.grid

    def pole(self, i: int) -> tuple:
        return self.poles[i]


# -- construction --------------------------------------------------------------


def _pole_spectrum(grid: Grid, poles) -> np.ndarray:
    """Σ c_j e^{-2πik·p_j} with cos(πn p) on the Nyquist index (translation covariant)."""
    n = grid.n
    k = torus._wavenumbers(n)["k"]
    F = np.zeros((n, n), complex)
    for (px, py), c in poles:
        ex = np.exp(-2j * np.pi * k * px)
        ey = np.exp(-2j * np.pi * k * py)
        ex[n // 2] = np.cos(np.pi * n * px)
        ey[n // 2] = np.cos(np.pi * n * py)
        F += c * np.outer(ex, ey)
    return F


def _check_poles(grid: Grid, poles):
    if not poles:
        raise ValueError("at least one pole is required")
    for (p, _), (q, _) in _pairs(poles):
        if torus.torus_distance(p, q) < 2 * grid.spacing:
            raise PoleCoincidence(f"poles {p} and {q} are closer than two grid cells")


def _pairs(poles):
    return [(a, b) for i, a in enumerate(poles) for b in poles[i + 1:]]


def _normalize_poles(poles):
    return tuple(((float(p[0]) % 1.0, float(p[1]) % 1.0), float(c)) for p, c in poles)


def linear_green(poles: Sequence, grid: Grid, compute_regulars: bool = True) -> GreenFunction:
    """Mean-zero solution of -ΔG = Σ c_j δ_{p_j} - Σ c_j (background added when unbalanced)."""
    poles = _normalize_poles(poles)
    _check_poles(grid, poles)
    F = _pole_spectrum(grid, poles)
    G = Field.from_coeffs(grid, -F * torus._wavenumbers(grid.n)["inv_lap"])
    g = GreenFunction(G, poles, info=dict(kind="linear"))
    if compute_regulars:
        g = replace(g, regulars=tuple(expansion_coeffs(g, i) for i in range(len(poles))))
    return g


def _dual_norm(r: Field) -> float:
    """H^{-1} norm of a mean-zero residual."""
    return float(np.sqrt(torus.dirichlet_energy(torus.solve_poisson(r))))


def nonlinear_green(
    w: Weights,
    rho2: float,
    x1,
    *,
    tol: float = 1e-8,
    damping: float = 0.5,
    max_fixed: int = 40,
    compute_regulars: bool = True,
) -> GreenFunction:
    """Solve -ΔG = 8π(δ_{x1} - 1) - ρ₂(β₂h₂e^{-G} - 1), β₂ = 1/∫h₂e^{-G}, ∫G = 0.

    G = G_sing + v.  A damped fixed point on v runs first; if its residual
    rises twice in a row, or it has not converged after ``max_fixed``
    sweeps, v is polished by the solver (v minimizes ½∫|∇v|² - ρ₂ log∫h₂e^{-G_sing}e^{-v}).
    """
    if not 0 < rho2 < EIGHT_PI:
        raise ValueError("rho2 must lie in (0, 8π)")
    from .solver import SolveConfig, minimize

    grid = w.grid
    gs = linear_green([(x1, EIGHT_PI)], grid, compute_regulars=False)
    Gs = gs.field
    h2 = w.h2

    def step(v: Field):
        ex = _Exp(Gs + v, h2, -1.0)
        if not ex.ok:
            raise AdmissibilityLoss("∫h2 e^-G is not positive")
        rhs = Field(grid, -rho2 * (ex.density() - 1.0))
        return torus.solve_poisson(rhs), ex

    v = Field.constant(grid, 0.0)
    res_hist, method, beta_prev = [], "fixed-point", None
    converged = False
    for it in range(max_fixed):
        v_new, ex = step(v)
        res = float(np.sqrt(torus.dirichlet_energy(v_new - v)))
        beta = float(np.exp(-ex.log_integral))
        res_hist.append(res)
        if res <= tol and beta_prev is not None and abs(beta - beta_prev) <= 1e-10 * max(1.0, beta):
            converged = True
            break
        rising = len(res_hist) >= 3 and res_hist[-1] > res_hist[-2] > res_hist[-3]
        if rising:
            break
        v = v + damping * (v_new - v)
        beta_prev = beta
    if not converged:
        method = "fixed-point+descent"
        shift = Gs.values.min()
        wt = Weights(Field.constant(grid, 1.0), Field(grid, h2.values * np.exp(-(Gs.values - shift))))
        try:
            sol = minimize(wt, Params(0.0, rho2), v, SolveConfig(grad_tol=tol, max_iters=500))
        except LineSearchStall as exc:
            sol = exc.result
        except Exception as exc:  # admissibility lost inside the solver
            raise AdmissibilityLoss(str(exc)) from exc
        if not sol.converged:
            raise NonConvergence(f"nonlinear Green iteration stalled at grad {sol.grad_norm:.2e}")
        v = sol.u
    G = Gs + v
    ex = _Exp(G, h2, -1.0)
    if not ex.ok:
        raise AdmissibilityLoss("∫h2 e^-G is not positive")
    beta2 = float(np.exp(-ex.log_integral))
    out = GreenFunction(G, gs.poles, beta2=beta2, rho2=float(rho2),
                        info=dict(kind="nonlinear", method=method, iterations=len(res_hist),
                                  residual=_dual_norm(equation_residual(GreenFunction(G, gs.poles, beta2, (), rho2), w))))
    if compute_regulars:
        out = replace(out, regulars=(expansion_coeffs(out, 0),))
    return out


def equation_residual(g: GreenFunction, w: Optional[Weights] = None) -> Field:
    """Smooth part of -ΔG minus the smooth part of the source (zero for an exact solution)."""
    F = _pole_spectrum(g.grid, g.poles)
    delta = Field.from_coeffs(g.grid, F)
    lhs = -torus.laplacian(g.field)
    src = delta - delta.mean
    if g.rho2 is not None:
        ex = _Exp(g.field, w.h2, -1.0)
        src = src - g.rho2 * (Field(g.grid, ex.density()) - 1.0)
    return lhs - src


def weak_residual(g: GreenFunction, v: Field, w: Optional[Weights] = None) -> float:
    """∫∇G·∇v - ⟨source, v⟩ with the point masses evaluated at the poles."""
    fx, fy = torus.gradient(g.field)
    vx, vy = torus.gradient(v)
    lhs = float(np.mean(fx.values * vx.values + fy.values * vy.values))
    rhs = 0.0
    for p, c in g.poles:
        rhs += c * (torus.interpolate(v, [p])[0] - v.mean)
    if g.rho2 is not None:
        ex = _Exp(g.field, w.h2, -1.0)
        rhs -= g.rho2 * float(np.mean((ex.density() - 1.0) * v.values))
    return lhs - rhs


# -- ring modes ------------------------------------------------------------------


def _extended_spectrum(f: Field):
    """Coefficients on k ∈ [-n/2, n/2]² with the Nyquist lines split half-and-half."""
    n = f.n
    k = np.arange(-n // 2, n // 2 + 1)
    wgt = np.ones(n + 1)
    wgt[0] = wgt[-1] = 0.5
    idx = k % n
    C = f.coeffs[np.ix_(idx, idx)] * np.outer(wgt, wgt)
    KX, KY = np.meshgrid(k, k, indexing="ij")
    return C, KX, KY


def ring_modes(f: Field, p, radii, sigma: float = 0.0) -> np.ndarray:
    """Angular Fourier data (a0, a1, b1, a2, b2) of the (mollified) interpolant on circles about p.

    Row r holds the coefficients of f(p + ρ_r e^{iθ}) ≈ a0 + a1 cosθ + b1 sinθ + a2 cos2θ + b2 sin2θ.
    """
    C, KX, KY = _extended_spectrum(f)
    K = np.hypot(KX, KY)
    theta = np.arctan2(KY, KX)
    phase = C * np.exp(2j * np.pi * (KX * p[0] + KY * p[1])) * np.exp(-2 * np.pi**2 * sigma**2 * K**2)
    e1 = phase * np.exp(-1j * theta)
    e2 = phase * np.exp(-2j * theta)
    out = np.empty((len(radii), 5))
    for r, rho in enumerate(radii):
        z = 2 * np.pi * K * rho
        j0, j1 = special.j0(z), special.j1(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            j2 = np.where(z > 0, 2 * j1 / np.where(z > 0, z, 1) - j0, 0.0)
        c0 = np.sum(phase * j0).real
        c1 = 1j * np.sum(e1 * j1)
        c2 = -np.sum(e2 * j2)
        out[r] = (c0, 2 * c1.real, -2 * c1.imag, 2 * c2.real, -2 * c2.imag)
    return out


def _heat_monomial(s: int, m: int, t: float, rho: np.ndarray) -> np.ndarray:
    """Radial factor of e^{tΔ}[r^s e^{imθ}] evaluated at ρ (s - m even, s ≥ m)."""
    out = np.zeros_like(rho)
    coef, q = 1.0, 0
    while s - 2 * q >= m:
        out = out + coef * t**q / factorial(q) * rho ** (s - 2 * q)
        coef *= (s - 2 * q) ** 2 - m**2
        q += 1
    return out


def _isolation(g: GreenFunction, i: int) -> float:
    p = g.poles[i][0]
    d = 1.0
    for j, (q, _) in enumerate(g.poles):
        if j != i:
            d = min(d, torus.torus_distance(p, q))
    return d


def fit_band(g: GreenFunction, i: int) -> tuple[float, float, float]:
    """(sigma, rho_lo, rho_hi) used for pole i."""
    h = g.grid.spacing
    sigma = MOLLIFIER_CELLS * h
    lo = INNER_WIDTHS * sigma
    hi = min(RHO_MAX, OUTER_FRACTION * _isolation(g, i))
    if hi < 1.5 * lo:
        raise InsufficientResolution(f"pole {i} is not isolated enough for ring extraction at n={g.grid.n}")
    return sigma, lo, hi


def expansion_coeffs(g: GreenFunction, pole_index: int) -> Expansion:
    p, c = g.poles[pole_index]
    sigma, lo, hi = fit_band(g, pole_index)
    radii = np.linspace(lo, hi, N_RADII)
    modes = ring_modes(g.field, p, radii, sigma)
    t = 0.5 * sigma**2
    # mollified -(c/2π) log r  ->  -(c/2π)(log r + ½E₁(r²/2σ²))
    log_part = -(c / (2 * np.pi)) * (np.log(radii) + 0.5 * special.exp1(radii**2 / (2 * sigma**2)))
    targets = [modes[:, 0] - log_part, modes[:, 1], modes[:, 2], modes[:, 3], modes[:, 4]]
    orders = [0, 1, 1, 2, 2]
    scale = hi
    lead, resid = [], 0.0
    for y, m in zip(targets, orders):
        B = np.column_stack([_heat_monomial(m + 2 * j, m, t, radii) / scale ** (m + 2 * j) for j in range(DEGREE)])
        coef, *_ = np.linalg.lstsq(B, y, rcond=None)
        if np.linalg.cond(B) > 1e12:
            raise IllConditionedFit(f"ring fit for pole {pole_index} is ill conditioned")
        resid = max(resid, float(np.max(np.abs(B @ coef - y))))
        lead.append(coef[0] / scale**m)
        if m == 0:
            sum_ab = 2 * coef[1] / scale**2  # ring average of αx²+βy² is (α+β)ρ²/2
    A, lam, nu, a2, b2 = lead
    # cos2θ and sin2θ coefficients are (α-β)ρ²/2 and ξρ²/2
    alpha = 0.5 * sum_ab + a2
    beta = 0.5 * sum_ab - a2
    xi = 2 * b2
    return Expansion(float(A), float(lam), float(nu), float(alpha), float(beta), float(xi), resid)


def regular_part(g: GreenFunction, pole_index: int = 0) -> float:
    if pole_index < len(g.regulars):
        return g.regulars[pole_index].A
    return expansion_coeffs(g, pole_index).A


def ring_samples(f: Field, p, radius: float, n_theta: int = 64) -> np.ndarray:
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    pts = np.column_stack([p[0] + radius * np.cos(th), p[1] + radius * np.sin(th)])
    return torus.interpolate(f, pts)


# -- serialization -----------------------------------------------------------------


def green_metadata(g: GreenFunction) -> dict:
    meta = {"n": g.grid.n, "poles": len(g.poles), "kind": g.info.get("kind", "linear")}
    if g.beta2 is not None:
        meta["beta2"] = g.beta2
    if g.rho2 is not None:
        meta["rho2"] = g.rho2
    for i, ((x, y), c) in enumerate(g.poles):
        meta[f"pole.{i}.x"], meta[f"pole.{i}.y"], meta[f"pole.{i}.strength"] = x, y, c
    for i, e in enumerate(g.regulars):
        for k, v in e.as_dict().items():
            meta[f"pole.{i}.{k.rstrip('_')}"] = v
    return meta


def write_green(g: GreenFunction, path) -> tuple[Path, Path]:
    path = Path(path)
    fpath, mpath = path.with_suffix(".mfe"), path.with_suffix(".meta")
    torus.write_field(g.field, fpath)
    lines = [f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}" for k, v in green_metadata(g).items()]
    mpath.write_text("\n".join(lines) + "\n")
    return fpath, mpath


def read_green(path) -> GreenFunction:
    path = Path(path)
    f = torus.read_field(path.with_suffix(".mfe"))
    meta = {}
    for line in path.with_suffix(".meta").read_text().splitlines():
        if line.strip():
            k, v = (s.strip() for s in line.split("=", 1))
            meta[k] = v
    npoles = int(meta["poles"])
    poles = tuple(((float(meta[f"pole.{i}.x"]), float(meta[f"pole.{i}.y"])), float(meta[f"pole.{i}.strength"]))
                  for i in range(npoles))
    regs = []
    for i in range(npoles):
        if f"pole.{i}.A" in meta:
            get = lambda k: float(meta[f"pole.{i}.{k}"])
            regs.append(Expansion(get("A"), get("lambda"), get("nu"), get("alpha"), get("beta"), get("xi"),
                                  get("residual")))
    return GreenFunction(f, poles, float(meta["beta2"]) if "beta2" in meta else None, tuple(regs),
                         float(meta["rho2"]) if "rho2" in meta else None, dict(kind=meta["kind"]))
