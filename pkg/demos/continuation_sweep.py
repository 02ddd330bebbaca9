"""Warm-started sweep ε → 0 for a sharply peaked h1; the blow-up indicators rise together.

Run:  python demos/continuation_sweep.py
"""
import numpy as np

from mfelab import solver, torus
from mfelab.functional import Weights
from mfelab.torus import Field, Grid

g = Grid(128)
dx, dy = torus.displacement(g, (0.5, 0.5))
w = Weights(Field(g, 1 + 50 * np.exp(-(dx**2 + dy**2) / (2 * 0.05**2))), Field.constant(g, 1.0))
res = solver.continuation(w, 2 * np.pi, [2, 1, 0.5, 0.25, 0.125])
print(solver.continuation_csv(res))
rep = solver.blowup_equivalence_report(res)
print("verdict:", rep.verdict)
for k, t in rep.kendall_tau.items():
    print(f"  tau[{k}] = {t:+.3f}")
