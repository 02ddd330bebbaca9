"""Regular part of the Green function: linear single pole, a ± pair, and the nonlinear problem.

Run:  python demos/green_regular_part.py
"""
import numpy as np

from mfelab import green
from mfelab.functional import EIGHT_PI, Weights
from mfelab.torus import Grid

grid = Grid(256)
single = green.linear_green([((0.5, 0.5), EIGHT_PI)], grid)
print(f"single pole      A = {single.regulars[0].A:.12f}")

pair = green.linear_green([((0.25, 0.25), EIGHT_PI), ((0.75, 0.75), -EIGHT_PI)], grid)
print("+/- pair         A = " + ", ".join(f"{e.A:.12f}" for e in pair.regulars))

for rho2 in (2 * np.pi, 4 * np.pi, 6 * np.pi):
    e = green.nonlinear_green(Weights.constant(grid), rho2, (0.5, 0.5)).regulars[0]
    print(f"nonlinear rho2={rho2 / np.pi:.0f}pi  A = {e.A:.8f}  alpha+beta = {e.alpha + e.beta:.6f}"
          f"  (expected {4 * np.pi - rho2 / 2:.6f})")
