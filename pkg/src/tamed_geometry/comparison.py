"""Exact geometry of the constant-curvature model spaces (kappa <= 0).

kappa = 0 is Euclidean R^n.  kappa < 0 is the upper hyperboloid sheet
{x in R^{n+1} : <x,x>_L = 1/kappa, x0 > 0} in Minkowski space with
<x,y>_L = -x0*y0 + sum_i xi*yi; the induced metric has constant sectional
curvature kappa.  All functions are pure and accept scalars or numpy
arrays; point arrays are stored coordinate-first, shape (coord_dim,) or
(coord_dim, N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, GeometryError

# Below this value of |kappa|*t^2 the comparison functions switch to a
# truncated Taylor series so they stay continuous in kappa at 0.
SERIES_CUTOFF = 1e-8

# Relative clamp window for the hyperboloid arccosh argument.
ACOSH_CLAMP = 1e-9

SHEET_TOL = 1e-10
TANGENT_TOL = 1e-10


def _check_curvature(kappa):
    if kappa > 0:
        raise DomainError(f"curvature must be <= 0, got {kappa}")


def s_kappa(kappa, t):
    """Comparison function: t for kappa=0, sinh(sqrt(-kappa) t)/sqrt(-kappa) else."""
    _check_curvature(kappa)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("s_kappa requires t >= 0")
    if kappa == 0:
        return t if t.shape else float(t)
    x = -kappa * t * t
    small = x < SERIES_CUTOFF
    a = math.sqrt(-kappa)
    out = np.where(small, t * (1.0 + x / 6.0 + x * x / 120.0),
                   np.sinh(a * np.where(small, 0.0, t)) / a)
    return out if out.shape else float(out)


def c_kappa(kappa, t):
    """Derivative of s_kappa in t: 1 for kappa=0, cosh(sqrt(-kappa) t) else."""
    _check_curvature(kappa)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("c_kappa requires t >= 0")
    if kappa == 0:
        out = np.ones_like(t)
        return out if out.shape else float(out)
    x = -kappa * t * t
    small = x < SERIES_CUTOFF
    a = math.sqrt(-kappa)
    out = np.where(small, 1.0 + x / 2.0 + x * x / 24.0,
                   np.cosh(a * np.where(small, 0.0, t)))
    return out if out.shape else float(out)


def ct_over_st(kappa, t):
    """C_kappa/S_kappa, the principal curvature of the geodesic sphere of radius t.

    Non-increasing in t; behaves like 1/t near 0 and tends to sqrt(-kappa)
    for kappa < 0.
    """
    _check_curvature(kappa)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("ct_over_st requires t > 0")
    if kappa == 0:
        out = 1.0 / t
        return out if out.shape else float(out)
    x = -kappa * t * t
    small = x < SERIES_CUTOFF
    a = math.sqrt(-kappa)
    # coth series: a*coth(a t) = 1/t - kappa t/3 - kappa^2 t^3/45 + ...
    series = 1.0 / t - kappa * t / 3.0 - kappa * kappa * t ** 3 / 45.0
    out = np.where(small, series, a / np.tanh(a * np.where(small, 1.0, t)))
    return out if out.shape else float(out)


def st_over_ct(kappa, t):
    """S_kappa/C_kappa: t for kappa=0, tanh(sqrt(-kappa) t)/sqrt(-kappa) else.

    This is the radial factor of the tamedness ratio; for kappa < 0 it is
    bounded by 1/sqrt(-kappa).
    """
    _check_curvature(kappa)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("st_over_ct requires t >= 0")
    if kappa == 0:
        return t if t.shape else float(t)
    a = math.sqrt(-kappa)
    out = np.tanh(a * t) / a
    return out if out.shape else float(out)


@dataclass(frozen=True)
class AmbientModel:
    """A constant-curvature Hadamard model space.

    kappa <= 0 (units 1/length^2), dim >= 2.  Euclidean points live in R^dim;
    hyperboloid points (kappa < 0) live in R^{dim+1} with the Lorentz form.
    """

    kappa: float
    dim: int

    def __post_init__(self):
        _check_curvature(self.kappa)
        if self.dim < 2:
            raise GeometryError(f"ambient dimension must be >= 2, got {self.dim}")

    @property
    def is_euclidean(self):
        return self.kappa == 0.0

    @property
    def coord_dim(self):
        return self.dim if self.is_euclidean else self.dim + 1

    @property
    def sqrt_minus_kappa(self):
        return math.sqrt(-self.kappa)

    def inner(self, u, v):
        """Ambient inner product (Lorentzian for kappa < 0), coordinates on axis 0."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.is_euclidean:
            return np.sum(u * v, axis=0)
        return -u[0] * v[0] + np.sum(u[1:] * v[1:], axis=0)

    def origin(self):
        y = np.zeros(self.coord_dim)
        if not self.is_euclidean:
            y[0] = 1.0 / self.sqrt_minus_kappa
        return y

    def sheet_residual(self, y):
        """|kappa*<y,y>_L - 1| for hyperboloid points; 0 for Euclidean."""
        if self.is_euclidean:
            return np.zeros(np.asarray(y).shape[1:])
        return np.abs(self.kappa * self.inner(y, y) - 1.0)

    def check_point(self, y, tol=SHEET_TOL):
        y = np.asarray(y, dtype=float)
        if y.shape[0] != self.coord_dim:
            raise GeometryError(
                f"point has {y.shape[0]} coordinates, model needs {self.coord_dim}")
        if not self.is_euclidean:
            if np.any(self.sheet_residual(y) > tol):
                raise GeometryError("point is off the hyperboloid sheet")
            if np.any(y[0] <= 0):
                raise GeometryError("point is on the lower hyperboloid sheet")
        return y

    def project(self, y):
        """Rescale onto the sheet <y,y>_L = 1/kappa (identity for Euclidean)."""
        y = np.asarray(y, dtype=float)
        if self.is_euclidean:
            return y
        q = self.kappa * self.inner(y, y)
        if np.any(q <= 0):
            raise GeometryError("cannot project: <y,y>_L has the wrong sign")
        return y / np.sqrt(q)

    def check_tangent(self, y, v, tol=TANGENT_TOL):
        if self.is_euclidean:
            return np.asarray(v, dtype=float)
        v = np.asarray(v, dtype=float)
        norms = np.sqrt(np.abs(self.inner(v, v)))
        if np.any(np.abs(self.inner(y, v)) > tol * np.maximum(norms, 1.0) / min(
                self.sqrt_minus_kappa, 1.0)):
            raise GeometryError("vector is not tangent to the hyperboloid")
        return v

    def tangent_project(self, y, w):
        """Lorentz-orthogonal projection of w onto the tangent space at y."""
        if self.is_euclidean:
            return np.asarray(w, dtype=float)
        return w - self.kappa * self.inner(w, y) * y


@dataclass(frozen=True)
class AmbientPoint:
    """A validated point of an AmbientModel."""

    model: AmbientModel
    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        self.model.check_point(coords)
        object.__setattr__(self, "coords", coords)


@dataclass(frozen=True)
class AmbientVector:
    """A tangent vector at a base point of an AmbientModel."""

    model: AmbientModel
    base: np.ndarray = field(repr=False)
    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        base = np.asarray(self.base, dtype=float)
        coords = np.asarray(self.coords, dtype=float)
        self.model.check_point(base)
        self.model.check_tangent(base, coords)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "coords", coords)

    def norm(self):
        return float(np.sqrt(self.model.inner(self.coords, self.coords)))


def _coords(p):
    return p.coords if isinstance(p, (AmbientPoint, AmbientVector)) else np.asarray(p, dtype=float)


def model_distance(model, p, q):
    """Geodesic distance between points (Euclidean norm / hyperboloid arccosh)."""
    p = _coords(p)
    q = _coords(q)
    if model.is_euclidean:
        out = np.sqrt(np.sum((p - q) ** 2, axis=0))
        return out if out.shape else float(out)
    arg = model.kappa * model.inner(p, q)
    if np.any(arg < 1.0 - ACOSH_CLAMP):
        raise DomainError("points are numerically off-sheet: kappa*<p,q>_L < 1 - 1e-9")
    arg = np.maximum(arg, 1.0)
    out = np.arccosh(arg) / model.sqrt_minus_kappa
    return out if out.shape else float(out)


POLE_TOL = 1e-12


def grad_rho(model, y0, y):
    """Unit gradient at y of the distance function rho(y) = d(y0, y).

    Returns raw coordinates; wrap with AmbientVector for a validated value.
    Raises DomainError at the pole y = y0.
    """
    y0 = _coords(y0)
    y = _coords(y)
    rho = model_distance(model, y0, y)
    if np.any(np.asarray(rho) <= POLE_TOL):
        raise DomainError("grad_rho is undefined at the pole y = y0")
    if model.is_euclidean:
        return (y - y0) / rho
    a = model.sqrt_minus_kappa
    return a * (np.cosh(a * rho) * y - y0) / np.sinh(a * rho)


def hess_rho(model, y0, y, X, Y):
    """Hessian of the distance function at y, on ambient tangent vectors X, Y.

    In constant curvature the Hessian comparison bounds coincide:
    Hess rho(X, Y) = (C_k/S_k)(rho) * (<X,Y> - <X, grad rho><Y, grad rho>).
    """
    y0 = _coords(y0)
    y = _coords(y)
    X = _coords(X)
    Y = _coords(Y)
    rho = model_distance(model, y0, y)
    if np.any(np.asarray(rho) <= POLE_TOL):
        raise DomainError("hess_rho is undefined at the pole y = y0")
    g = grad_rho(model, y0, y)
    ratio = ct_over_st(model.kappa, rho)
    out = ratio * (model.inner(X, Y) - model.inner(X, g) * model.inner(Y, g))
    return out if np.asarray(out).shape else float(out)


def geodesic_point(model, y, X, t):
    """Point at arc length t along the unit-speed geodesic from y with direction X."""
    y = _coords(y)
    X = _coords(X)
    if model.is_euclidean:
        return y + t * X
    a = model.sqrt_minus_kappa
    return np.cosh(a * t) * y + np.sinh(a * t) / a * X
