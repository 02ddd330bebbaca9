"""Minimize J on a 64 and a 128 grid for a sinusoidal weight and compare.

Run:  python demos/subcritical_solve.py
"""
import numpy as np

from mfelab import solver
from mfelab.functional import Params, Weights
from mfelab.torus import Field, Grid

p = Params(4 * np.pi, 4 * np.pi)
for n in (64, 128):
    g = Grid(n)
    h1 = Field.from_function(g, lambda x, y: 1 + 0.5 * np.sin(2 * np.pi * x))
    r = solver.minimize(Weights(h1, Field.constant(g, 1.0)), p)
    print(f"n={n:4d}  J={r.J:.12f}  |grad|={r.grad_norm:.1e}  iters={r.iters}  max u={r.u.max():.4f}")
