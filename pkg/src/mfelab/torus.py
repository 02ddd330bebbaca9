"""Discrete calculus on the unit flat torus [0,1)^2.

Fields are sampled at x_i = i/n, y_j = j/n and stored as ``values[i, j]``
(``indexing="ij"``).  Fourier coefficients are normalized so that
``coeffs[0, 0]`` is the mean.  The Nyquist mode is kept for the Laplacian
and its inverse but zeroed under first-order differentiation.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

from .errors import NonZeroMean

MAGIC = b"MFE1"
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Grid:
    n: int

    def __post_init__(self):
        if self.n < 16 or self.n % 2:
            raise ValueError(f"grid size must be even and >= 16, got {self.n}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    @property
    def area(self) -> float:
        return 1.0

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        s = np.arange(self.n) / self.n
        return np.meshgrid(s, s, indexing="ij")


@lru_cache(maxsize=16)
def _wavenumbers(n: int) -> dict:
    k = sfft.fftfreq(n, 1.0 / n)
    kd = k.copy()
    kd[n // 2] = 0.0  # Nyquist dropped for first derivatives
    KX, KY = np.meshgrid(k, k, indexing="ij")
    K2 = KX**2 + KY**2
    lap = -4.0 * np.pi**2 * K2
    inv = np.zeros_like(lap)
    inv[K2 > 0] = 1.0 / lap[K2 > 0]
    out = dict(k=k, kd=kd, lap=lap, inv_lap=inv)
    for a in out.values():
        a.setflags(write=False)
    return out


class Field:
    """Immutable periodic scalar field on a :class:`Grid`."""

    def __init__(self, grid: Grid, values):
        v = np.array(values, dtype=float, copy=True)
        if v.shape != (grid.n, grid.n):
            raise ValueError(f"expected shape {(grid.n, grid.n)}, got {v.shape}")
        v.setflags(write=False)
        self.grid = grid
        self.values = v

    @classmethod
    def from_function(cls, grid: Grid, f: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "Field":
        X, Y = grid.nodes()
        return cls(grid, np.broadcast_to(f(X, Y), X.shape))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "Field":
        return cls(grid, np.full((grid.n, grid.n), float(c)))

    @classmethod
    def from_coeffs(cls, grid: Grid, c: np.ndarray) -> "Field":
        n = grid.n
        return cls(grid, sfft.ifft2(np.asarray(c) * n * n).real)

    @cached_property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @cached_property
    def coeffs(self) -> np.ndarray:
        c = sfft.fft2(self.values) / self.grid.n**2
        c.setflags(write=False)
        return c

    @property
    def n(self) -> int:
        return self.grid.n

    def centered(self) -> "Field":
        return Field(self.grid, self.values - self.mean)

    def max(self) -> float:
        return float(self.values.max())

    def argmax(self) -> tuple[int, int]:
        # np.argmax returns the lowest flat (row-major) index among ties
        return np.unravel_index(int(np.argmax(self.values)), self.values.shape)

    def map(self, f: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return Field(self.grid, f(self.values))

    def _other(self, o):
        if isinstance(o, Field):
            if o.grid != self.grid:
                raise ValueError("fields live on different grids")
            return o.values
        return o

    def __add__(self, o):
        return Field(self.grid, self.values + self._other(o))

    __radd__ = __add__

    def __sub__(self, o):
        return Field(self.grid, self.values - self._other(o))

    def __rsub__(self, o):
        return Field(self.grid, self._other(o) - self.values)

    def __mul__(self, o):
        return Field(self.grid, self.values * self._other(o))

    __rmul__ = __mul__

    def __truediv__(self, o):
        return Field(self.grid, self.values / self._other(o))

    def __neg__(self):
        return Field(self.grid, -self.values)

    def __repr__(self):
        return f"Field(n={self.grid.n}, mean={self.mean:.6g})"


@dataclass(frozen=True)
class LocalGeometry:
    """Isothermal-coordinate data at a point: conformal factor coefficients and curvature."""

    K: float = 0.0
    b1: float = 0.0
    b2: float = 0.0
    c1: float = 0.0
    c2: float = 0.0
    c12: float = 0.0

    @classmethod
    def flat(cls) -> "LocalGeometry":
        return cls()

    @classmethod
    def from_coefficients(cls, b1=0.0, b2=0.0, c1=0.0, c2=0.0, c12=0.0) -> "LocalGeometry":
        return cls(K=-(c1 + c2), b1=b1, b2=b2, c1=c1, c2=c2, c12=c12)


@dataclass(frozen=True)
class TaylorData:
    value: float
    k1: float
    k2: float
    k3: float
    k4: float
    k5: float

    def laplacian(self) -> float:
        return 2.0 * (self.k3 + self.k5)


def integrate(f: Field) -> float:
    return f.mean * f.grid.area


def laplacian(f: Field) -> Field:
    return Field.from_coeffs(f.grid, f.coeffs * _wavenumbers(f.n)["lap"])


def inverse_laplacian(f: Field, tol: float = 1e-10) -> Field:
    if abs(f.mean) > tol * max(1.0, float(np.max(np.abs(f.values)))):
        raise NonZeroMean(f"inverse_laplacian needs a mean-zero source (mean={f.mean:.3e})")
    return Field.from_coeffs(f.grid, f.coeffs * _wavenumbers(f.n)["inv_lap"])


def solve_poisson(f: Field) -> Field:
    """Mean-zero solution of -Δu = f - mean(f)."""
    return Field.from_coeffs(f.grid, -f.coeffs * _wavenumbers(f.n)["inv_lap"])


def project_mean_zero(f: Field) -> Field:
    return f.centered()


def dirichlet_energy(f: Field) -> float:
    w = _wavenumbers(f.n)
    return float(np.sum(-w["lap"] * np.abs(f.coeffs) ** 2))


def gradient(f: Field) -> tuple[Field, Field]:
    w = _wavenumbers(f.n)
    c = f.coeffs
    fx = Field.from_coeffs(f.grid, c * (2j * np.pi) * w["kd"][:, None])
    fy = Field.from_coeffs(f.grid, c * (2j * np.pi) * w["kd"][None, :])
    return fx, fy


def _basis(n: int, s: np.ndarray, order: int = 0) -> np.ndarray:
    """Rows e^{2πiks} (times (2πik)^order) with a symmetric Nyquist column."""
    w = _wavenumbers(n)
    k = w["k"] if order % 2 == 0 else w["kd"]
    E = np.exp(2j * np.pi * np.outer(s, k)) * (2j * np.pi * k) ** order
    if order % 2 == 0:
        # even derivatives of cos(πns) keep the Nyquist mode, matching laplacian()
        E[:, n // 2] = (-((np.pi * n) ** 2)) ** (order // 2) * np.cos(np.pi * n * s)
    return E


def interpolate(f: Field, points, dx: int = 0, dy: int = 0) -> np.ndarray:
    """Trigonometric interpolant of f (or a partial derivative) at arbitrary points."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    Ex = _basis(f.n, P[:, 0], dx)
    Ey = _basis(f.n, P[:, 1], dy)
    return np.einsum("pk,pk->p", Ex @ f.coeffs, Ey).real


def taylor_at(f: Field, p: Sequence[float], order: int = 2) -> TaylorData:
    if order != 2:
        raise ValueError("only second-order Taylor data is supported")
    p = np.asarray(p, dtype=float).reshape(1, 2)
    v = interpolate(f, p)[0]
    fx = interpolate(f, p, 1, 0)[0]
    fy = interpolate(f, p, 0, 1)[0]
    fxx = interpolate(f, p, 2, 0)[0]
    fxy = interpolate(f, p, 1, 1)[0]
    fyy = interpolate(f, p, 0, 2)[0]
    return TaylorData(v, fx, fy, 0.5 * fxx, 0.5 * fxy, 0.5 * fyy)


def displacement(grid: Grid, p: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-image displacement (x - p) on the grid, each component in [-1/2, 1/2)."""
    X, Y = grid.nodes()
    dx = (X - p[0] + 0.5) % 1.0 - 0.5
    dy = (Y - p[1] + 0.5) % 1.0 - 0.5
    return dx, dy


def torus_distance(p, q) -> float:
    d = (np.asarray(p, float) - np.asarray(q, float) + 0.5) % 1.0 - 0.5
    return float(np.hypot(*d))


# -- serialization -----------------------------------------------------------


def field_to_bytes(f: Field) -> bytes:
    body = np.ascontiguousarray(f.values, dtype="<f8").tobytes(order="C")
    return MAGIC + struct.pack("<I", f.n) + body


def field_from_bytes(data: bytes) -> Field:
    if data[:4] != MAGIC:
        raise ValueError("not an MFE1 field container")
    (n,) = struct.unpack("<I", data[4:8])
    vals = np.frombuffer(data, dtype="<f8", count=n * n, offset=8)
    if 8 + 8 * n * n != len(data):
        raise ValueError("truncated or oversized field container")
    return Field(Grid(n), vals.reshape(n, n))


def write_field(f: Field, path) -> None:
    Path(path).write_bytes(field_to_bytes(f))


def read_field(path) -> Field:
    return field_from_bytes(Path(path).read_bytes())


def write_field_csv(f: Field, path) -> None:
    X, Y = f.grid.nodes()
    table = np.column_stack([X.ravel(), Y.ravel(), f.values.ravel()])
    np.savetxt(path, table, delimiter=",", header="x,y,value", comments="", fmt="%.17g")
