"""Partial-critical certificate for h ≡ 1, ρ2 = 4π: a test function whose energy dips below the lower bound.

Run:  python demos/existence_certificate.py   (a few seconds at n = 256)
"""
import numpy as np

from mfelab.asymptotics import certificate
from mfelab.functional import Weights
from mfelab.torus import Grid

cert = certificate(Weights.constant(Grid(256)), 4 * np.pi, mode="partial")
print(f"condition holds: {cert.condition_holds}  margin: {cert.min_margin:.6f}  probative: {cert.probative}")
print(f"lower bound: {cert.lower_bound:.6f}")
print(cert.to_csv())
print("first eps below the bound:", cert.contradiction_eps)
