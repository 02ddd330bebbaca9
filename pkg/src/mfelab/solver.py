"""Minimization of J over the admissible set, ε-continuation toward the
critical parameter, and blow-up indicators.

The descent direction is the H¹ (Sobolev) gradient, i.e. the L² gradient
mapped through ``(-Δ)^{-1}``, accelerated by a limited-memory quasi-Newton
update whose initial metric is that same operator (``memory=0`` gives the
plain Sobolev gradient).  Close to convergence a Newton-CG step with the
same preconditioner takes over.
"""

from __future__ import annotations

import csv
import io
import itertools
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage, stats

from . import torus
from .errors import Inadmissible, InadmissibleInit, LineSearchStall, MFEError, NotConverged, TooFewSamples
from .functional import EIGHT_PI, Params, State, Weights
from .torus import Field

_ROUNDOFF = 1e3 * np.finfo(float).eps


@dataclass(frozen=True)
class SolveConfig:
    grad_tol: float = 1e-8
    max_iters: int = 1000
    step0: float = 1.0
    backtrack: float = 0.5
    newton_refine: bool = True
    armijo: float = 1e-4
    memory: int = 8
    newton_factor: float = 100.0
    cg_max_iters: int = 200

    def __post_init__(self):
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")


@dataclass(frozen=True)
class BlowupDiagnostics:
    m: float
    n: float
    grad_l2: float
    logI1: float
    logI2: float
    w1s_norm: float
    m_at: tuple = (0, 0)
    n_at: tuple = (0, 0)


@dataclass(frozen=True)
class SolveResult:
    u: Field
    J: float
    grad_norm: float
    iters: int
    converged: bool
    diag: BlowupDiagnostics
    params: Optional[Params] = None
    history: tuple = ()
    status: str = "ok"


def l2_norm(f: Field) -> float:
    return float(np.sqrt(np.mean(f.values**2)))


def _dot(a: Field, b: Field) -> float:
    return float(np.mean(a.values * b.values))


def diagnostics(u: Field, w: Weights, s: float = 1.5) -> BlowupDiagnostics:
    st = State(u, w)
    st.require()
    l1, l2 = st.plus.log_integral, st.minus.log_integral
    fx, fy = torus.gradient(u)
    mag = np.hypot(fx.values, fy.values)
    return BlowupDiagnostics(
        m=u.max() - l1,
        n=(-u).max() - l2,
        grad_l2=float(np.sqrt(st.dirichlet)),
        logI1=l1,
        logI2=l2,
        w1s_norm=float(np.mean(mag**s) ** (1.0 / s)),
        m_at=tuple(int(i) for i in u.argmax()),
        n_at=tuple(int(i) for i in (-u).argmax()),
    )


def _precondition(g: Field) -> Field:
    # identity on the mean (zero here), (-Δ)^{-1} on the oscillatory part
    return -torus.inverse_laplacian(g.centered())


def _newton_direction(st: State, p: Params, g: Field, cfg: SolveConfig, gnorm: float) -> Optional[Field]:
    """Inexact Newton step from preconditioned CG; None on negative curvature."""
    rtol = min(0.1, gnorm)
    x = Field.constant(g.grid, 0.0)
    r = -g
    z = _precondition(r)
    d = z
    rz = _dot(r, z)
    r0 = l2_norm(r)
    if not rz > 0:
        return None
    for it in range(cfg.cg_max_iters):
        Hd = st.hessian_apply(p, d)
        curv = _dot(d, Hd)
        if curv <= 0:
            return x if it > 0 else None
        a = rz / curv
        x = x + a * d
        r = r - a * Hd
        if l2_norm(r) <= rtol * r0:
            break
        z = _precondition(r)
        rz_new = _dot(r, z)
        if not rz_new > 0:
            break
        d = z + (rz_new / rz) * d
        rz = rz_new
    return x


def _lbfgs_direction(g: Field, S: list, Y: list) -> Field:
    q = g
    alphas = []
    for s, y in reversed(list(zip(S, Y))):
        rho = 1.0 / _dot(y, s)
        a = rho * _dot(s, q)
        alphas.append((a, rho, s, y))
        q = q - a * y
    r = _precondition(q)
    if S:
        s, y = S[-1], Y[-1]
        r = (_dot(s, y) / _dot(y, _precondition(y))) * r
    for a, rho, s, y in reversed(alphas):
        b = rho * _dot(y, r)
        r = r + (a - b) * s
    return -r


def _line_search(st: State, w: Weights, p: Params, J: float, d: Field, slope: float, tau: float,
                 cfg: SolveConfig):
    """Backtracking Armijo search with an admissibility guard; None when the step underflows."""
    u = st.u
    floor = 1e-14 * cfg.step0
    while tau >= floor:
        trial = State(u + tau * d, w)
        if trial.ok:
            Jt = trial.J(p)
            if Jt <= J + cfg.armijo * tau * slope:
                return trial, Jt, trial.gradient(p)
            if abs(Jt - J) <= _ROUNDOFF * max(1.0, abs(J)):
                # decrease is below roundoff: accept if the gradient shrinks
                gt = trial.gradient(p)
                if l2_norm(gt) < l2_norm(st.gradient(p)):
                    return trial, Jt, gt
        tau *= cfg.backtrack
    return None


def minimize(w: Weights, p: Params, init: Optional[Field] = None, cfg: SolveConfig = SolveConfig()) -> SolveResult:
    grid = w.grid
    u = Field.constant(grid, 0.0) if init is None else torus.project_mean_zero(init)
    st = State(u, w)
    if not st.ok:
        raise InadmissibleInit("initial state is not admissible")
    J = st.J(p)
    g = st.gradient(p)
    gn = l2_norm(g)
    history = [J]
    S: list = []
    Y: list = []
    converged = gn <= cfg.grad_tol
    it = 0

    def result(status="ok"):
        return SolveResult(st.u, J, gn, it, converged, diagnostics(st.u, w), p, tuple(history), status)

    while not converged and it < cfg.max_iters:
        it += 1
        d = None
        newton = cfg.newton_refine and gn < cfg.newton_factor * cfg.grad_tol
        if newton:
            d = _newton_direction(st, p, g, cfg, gn)
        if d is None:
            newton = False
            d = _lbfgs_direction(g, S, Y) if cfg.memory else -_precondition(g)
        slope = _dot(g, d)
        if not slope < 0:
            S.clear(), Y.clear()
            d = -_precondition(g)
            slope = _dot(g, d)
        found = _line_search(st, w, p, J, d, slope, 1.0 if (newton or S) else cfg.step0, cfg)
        if found is None and (newton or S):
            # quasi-Newton and Newton steps can stall at roundoff; retry along the Sobolev gradient
            S.clear(), Y.clear()
            d = -_precondition(g)
            found = _line_search(st, w, p, J, d, _dot(g, d), cfg.step0, cfg)
        if found is None:
            raise LineSearchStall(f"line search stalled at iteration {it}", result("stalled"))
        trial, Jt, gt = found
        if Jt > J + _ROUNDOFF * max(1.0, abs(J)):
            raise AssertionError("descent produced an energy increase")
        s_vec = trial.u - u
        y_vec = gt - g
        if cfg.memory and _dot(s_vec, y_vec) > 1e-14 * l2_norm(s_vec) * l2_norm(y_vec):
            S.append(s_vec), Y.append(y_vec)
            if len(S) > cfg.memory:
                S.pop(0), Y.pop(0)
        u, st, J, g = trial.u, trial, Jt, gt
        gn = l2_norm(g)
        history.append(J)
        converged = gn <= cfg.grad_tol
    if not converged:
        warnings.warn(f"minimize: budget of {cfg.max_iters} iterations exhausted (grad {gn:.2e})", NotConverged)
        return result("not converged")
    return result()


def continuation(
    w: Weights,
    rho2: float,
    eps_seq: Sequence[float],
    cfg: SolveConfig = SolveConfig(),
    *,
    full_critical: bool = False,
    init: Optional[Field] = None,
) -> list[SolveResult]:
    """Warm-started minimizers of J_{8π-ε, ρ₂} (or J_{8π-ε, 8π-ε}) along ``eps_seq``.

    Failures are recorded in the entry's ``status`` and do not stop the sweep.
    """
    eps = [float(e) for e in eps_seq]
    if not eps:
        raise ValueError("empty ε sequence")
    if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("ε sequence must be positive and strictly decreasing")
    if not full_critical and rho2 > EIGHT_PI:
        raise ValueError("rho2 must not exceed 8π")
    out = []
    u = init
    for e in eps:
        p = Params(EIGHT_PI, EIGHT_PI - e if full_critical else rho2, e)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NotConverged)
                res = minimize(w, p, u, cfg)
        except LineSearchStall as exc:
            res = exc.result
        except MFEError as exc:
            base = u if u is not None else Field.constant(w.grid, 0.0)
            try:
                d = diagnostics(base, w)
            except Inadmissible:
                d = BlowupDiagnostics(*([float("nan")] * 6))
            res = SolveResult(base, float("nan"), float("nan"), 0, False, d, p, (), f"error: {exc}")
        out.append(res)
        if np.isfinite(res.J):
            u = res.u
    return out


CSV_COLUMNS = ("eps", "J", "grad_norm", "m", "n", "grad_l2", "logI1", "logI2", "w1s_norm", "status")


def continuation_rows(results: Sequence[SolveResult]) -> list[dict]:
    rows = []
    for r in results:
        d = r.diag
        rows.append(dict(eps=r.params.eps, J=r.J, grad_norm=r.grad_norm, m=d.m, n=d.n, grad_l2=d.grad_l2,
                         logI1=d.logI1, logI2=d.logI2, w1s_norm=d.w1s_norm, status=r.status))
    return rows


def continuation_csv(results: Sequence[SolveResult]) -> str:
    buf = io.StringIO()
    wr = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    wr.writeheader()
    for row in continuation_rows(results):
        wr.writerow({k: (repr(float(v)) if k != "status" else v) for k, v in row.items()})
    return buf.getvalue()


@dataclass(frozen=True)
class EquivalenceReport:
    kendall_tau: dict
    verdict: str
    streams: dict = field(default_factory=dict)


STREAMS = ("m+n", "grad_l2", "logI1+logI2")


def blowup_equivalence_report(results=None, *, streams: Optional[dict] = None) -> EquivalenceReport:
    """Rank agreement of the three blow-up indicators along a sweep.

    ``streams`` may be passed directly (name -> sequence) instead of results.
    """
    if streams is None:
        if results is None or len(results) < 3:
            raise TooFewSamples("need at least three results")
        streams = {
            "m+n": [r.diag.m + r.diag.n for r in results],
            "grad_l2": [r.diag.grad_l2 for r in results],
            "logI1+logI2": [r.diag.logI1 + r.diag.logI2 for r in results],
        }
    streams = {k: np.asarray(v, float) for k, v in streams.items()}
    if min(len(v) for v in streams.values()) < 3:
        raise TooFewSamples("need at least three samples per stream")
    taus = {}
    for a, b in itertools.combinations(streams, 2):
        t = stats.kendalltau(streams[a], streams[b]).statistic
        taus[f"{a}|{b}"] = round(float(t), 12) if np.isfinite(t) else float("nan")
    bounded = all(np.ptp(v) < 1.0 for v in streams.values())
    comoving = all(np.isfinite(t) and t >= 0.9 for t in taus.values())
    verdict = "consistent" if (comoving or bounded) else "inconsistent"
    return EquivalenceReport(taus, verdict, {k: v.tolist() for k, v in streams.items()})


@dataclass(frozen=True)
class Candidate:
    x: tuple
    mass1: float
    mass2: float
    gamma: float
    flagged: bool


def concentration_candidates(
    u: Field, w: Weights, ball_radius: float, p: Optional[Params] = None, max_per_density: int = 8
) -> list[Candidate]:
    """Local maxima of h₁e^u/I1 and h₂e^{-u}/I2 with their ball masses and γ = ρ₁m₁ − ρ₂m₂."""
    p = p or Params(EIGHT_PI, EIGHT_PI)
    st = State(u, w)
    st.require()
    grid = u.grid
    dens = [st.plus.density(), st.minus.density()]
    X, Y = grid.nodes()
    peaks = []
    for d in dens:
        hi = ndimage.maximum_filter(d, size=3, mode="wrap")
        lo = ndimage.minimum_filter(d, size=3, mode="wrap")
        idx = np.argwhere((d >= hi) & (d > lo))
        idx = sorted(idx.tolist(), key=lambda ij: -d[ij[0], ij[1]])[:max_per_density]
        peaks.extend((d[i, j], (X[i, j], Y[i, j])) for i, j in idx)
    peaks.sort(key=lambda t: -t[0])
    out: list[Candidate] = []
    for _, x in peaks:
        if any(torus.torus_distance(x, c.x) < ball_radius for c in out):
            continue
        dx, dy = torus.displacement(grid, x)
        mask = dx**2 + dy**2 < ball_radius**2
        m1 = float(np.mean(dens[0] * mask))
        m2 = float(np.mean(dens[1] * mask))
        gamma = p.active_rho1 * m1 - p.rho2 * m2
        out.append(Candidate((float(x[0]), float(x[1])), m1, m2, gamma, abs(gamma) >= 4 * np.pi))
    return out


def path_independence(w: Weights, warm: SolveResult, cfg: SolveConfig = SolveConfig(), tol: float = 1e-6) -> dict:
    """Cold solve at the warm result's parameters; flags multi-well disagreement."""
    cold = minimize(w, warm.params, None, cfg)
    gap = abs(cold.J - warm.J)
    return dict(J_warm=warm.J, J_cold=cold.J, gap=gap, multiwell=bool(cold.converged and warm.converged and gap > tol))
