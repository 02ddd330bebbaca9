"""Independent reference computations used by the test-suite.

Nothing here imports mfelab: each oracle re-derives its quantity from a
different formula than the library uses.
"""

import numpy as np
from scipy import integrate, special

EWALD_ALPHA = 2.5


def ewald_green(x, y, alpha=EWALD_ALPHA, cutoff=8):
    """Mean-zero torus Green function Γ (−ΔΓ = δ − 1) by Gaussian splitting.

    Γ = Σ_m E₁(α²|x+m|²)/4π + Σ_{k≠0} e^{−π²|k|²/α²} cos(2πk·x)/(4π²|k|²) − 1/(4α²)
    """
    m = np.arange(-cutoff, cutoff + 1)
    MX, MY = np.meshgrid(m, m, indexing="ij")
    r2 = (x + MX) ** 2 + (y + MY) ** 2
    real = np.sum(special.exp1(alpha**2 * r2)) / (4 * np.pi)
    K2 = MX**2 + MY**2
    nz = K2 > 0
    recip = np.sum(np.exp(-np.pi**2 * K2[nz] / alpha**2) * np.cos(2 * np.pi * (MX[nz] * x + MY[nz] * y))
                   / (4 * np.pi**2 * K2[nz]))
    return real + recip - 1 / (4 * alpha**2)


def ewald_robin(alpha=EWALD_ALPHA, cutoff=8):
    """lim_{x→0} Γ(x) + (1/2π) log|x| by the same splitting."""
    m = np.arange(-cutoff, cutoff + 1)
    MX, MY = np.meshgrid(m, m, indexing="ij")
    K2 = MX**2 + MY**2
    nz = K2 > 0
    real = np.sum(special.exp1(alpha**2 * K2[nz])) / (4 * np.pi) - (np.euler_gamma + 2 * np.log(alpha)) / (4 * np.pi)
    recip = np.sum(np.exp(-np.pi**2 * K2[nz] / alpha**2) / (4 * np.pi**2 * K2[nz]))
    return real + recip - 1 / (4 * alpha**2)


def trapezoid_1d(f, n=4096):
    s = np.arange(n) / n
    return float(np.mean(f(s)))


def bubble_energy_radial(L):
    """∫_{B_L}|∇w|² for w = −2log(1+π|x|²), by adaptive radial quadrature."""
    val, _ = integrate.quad(lambda r: 2 * np.pi * r * (4 * np.pi * r / (1 + np.pi * r * r)) ** 2, 0, L,
                            epsabs=0, epsrel=1e-13, limit=200)
    return val


def bubble_energy_cartesian(L):
    """Same quantity as a 2-D Cartesian integral over the disc."""
    f = lambda y, x: (4 * np.pi) ** 2 * (x * x + y * y) / (1 + np.pi * (x * x + y * y)) ** 2
    val, _ = integrate.dblquad(f, -L, L, lambda x: -np.sqrt(max(L * L - x * x, 0)),
                               lambda x: np.sqrt(max(L * L - x * x, 0)), epsabs=0, epsrel=1e-11)
    return val


def annulus_bvp_energy(a, b, r_in, r_out, n=4001):
    """Minimal Dirichlet energy of a radial function equal to a at r_in and b at r_out.

    Solves (rφ')' = 0 in the variable s = log r by scipy's collocation BVP
    solver and integrates 2π∫ r φ'² dr numerically.
    """
    from scipy.integrate import solve_bvp, quad

    s0, s1 = np.log(r_in), np.log(r_out)
    s = np.linspace(s0, s1, 11)
    sol = solve_bvp(lambda s, y: np.vstack([y[1], np.zeros_like(s)]),
                    lambda ya, yb: np.array([ya[0] - a, yb[0] - b]), s, np.zeros((2, s.size)), tol=1e-12)
    # in s = log r the energy density is 2π φ_s² ds
    val, _ = quad(lambda t: 2 * np.pi * sol.sol(t)[1] ** 2, s0, s1, epsabs=0, epsrel=1e-13)
    return val
