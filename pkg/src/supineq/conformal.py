"""Stereographic and hyperbolic coordinates, Jacobians and pullbacks.

Functions on the sphere, hemisphere and hyperboloid are never stored on those
manifolds. A lifted function is kept in flat coordinates: its values at the
images of the cell centres plus the manifold measure of each image cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gridfn import GridError, GridFunction, evaluate


class PointAtInfinity(GridError):
    pass


def _pts(x) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))


def _sq(x: np.ndarray) -> np.ndarray:
    return np.sum(x * x, axis=-1)


# ------------------------------------------------------------------ sphere

def stereo_sphere(x) -> np.ndarray:
    x = _pts(x)
    r = _sq(x)[:, None]
    return np.hstack([2 * x, 1 - r]) / (1 + r)


def stereo_sphere_inverse(s) -> np.ndarray:
    s = _pts(s)
    d = 1 + s[:, -1:]
    if np.any(d <= 0):
        raise PointAtInfinity("the south pole has no preimage")
    return s[:, :-1] / d


def sphere_jacobian(s) -> np.ndarray:
    """|J| of the inverse projection at s: (1 + s_{n+1})^(-n)."""
    s = _pts(s)
    n = s.shape[1] - 1
    d = 1 + s[:, -1]
    if np.any(d <= 0):
        raise PointAtInfinity("the Jacobian is singular at the south pole")
    return d ** -n


def sphere_jacobian_flat(x) -> np.ndarray:
    """The same Jacobian written through x = S^{-1}(s): 2^{-n}(1+|x|^2)^n."""
    x = _pts(x)
    n = x.shape[1]
    return ((1 + _sq(x)) / 2) ** n


def chordal_identity_check(x, y) -> np.ndarray:
    """Residual of |x-y| = |s-t| ((1+|x|^2)/2)^{1/2} ((1+|y|^2)/2)^{1/2}."""
    x, y = _pts(x), _pts(y)
    s, t = stereo_sphere(x), stereo_sphere(y)
    lhs = np.sqrt(_sq(x - y))
    rhs = np.sqrt(_sq(s - t)) * np.sqrt((1 + _sq(x)) / 2) * np.sqrt((1 + _sq(y)) / 2)
    return np.abs(lhs - rhs)


# -------------------------------------------------------------- hemisphere

def stereo_hemisphere(x) -> np.ndarray:
    x = _pts(x)
    d = np.sqrt(1 + _sq(x))[:, None]
    return np.hstack([x, np.ones_like(d)]) / d


def stereo_hemisphere_inverse(s) -> np.ndarray:
    s = _pts(s)
    if np.any(s[:, -1] <= 0):
        raise PointAtInfinity("the equator and the southern half have no preimage")
    return s[:, :-1] / s[:, -1:]


def hemisphere_jacobian(s) -> np.ndarray:
    """|J| of the inverse central projection: s_{n+1}^{-(n+1)} = (1+|x|^2)^{(n+1)/2}."""
    s = _pts(s)
    n = s.shape[1] - 1
    if np.any(s[:, -1] <= 0):
        raise PointAtInfinity("the Jacobian is singular on the equator")
    return s[:, -1] ** -(n + 1)


def det_matrix(vs) -> float:
    """|det| of the square matrix whose columns are the given n+1 vectors."""
    return abs(float(np.linalg.det(np.asarray(vs, dtype=float).T)))


# --------------------------------------------------------------- hyperboloid

def lorentz_product(q, t) -> np.ndarray:
    q, t = _pts(q), _pts(t)
    return -np.sum(q[:, :-1] * t[:, :-1], axis=-1) + q[:, -1] * t[:, -1]


def hyperbolic_map(x) -> np.ndarray:
    """H(x) = (2x, 1+|x|^2)/(1-|x|^2); the outside of the unit ball goes to the lower sheet."""
    x = _pts(x)
    r = _sq(x)[:, None]
    if np.any(r == 1):
        raise PointAtInfinity("the unit sphere maps to infinity")
    return np.hstack([2 * x, 1 + r]) / (1 - r)


def hyperbolic_map_inverse(q) -> np.ndarray:
    q = _pts(q)
    return q[:, :-1] / (1 + q[:, -1:])


def hyperbolic_jacobian(x) -> np.ndarray:
    """|J| of H^{-1} written in flat coordinates: (|1-|x|^2|/2)^n."""
    x = _pts(x)
    n = x.shape[1]
    return (np.abs(1 - _sq(x)) / 2) ** n


def hyperbolic_distance_identity(x, y) -> np.ndarray:
    """Residual of |x-y| = (|1-|x|^2|/2)^{1/2} (|1-|y|^2|/2)^{1/2} |2(qt-1)|^{1/2}.

    Expanding qt - 1 gives 2|x-y|^2 / ((1-|x|^2)(1-|y|^2)), which fixes the
    factor 2 inside the last root.
    """
    x, y = _pts(x), _pts(y)
    qt = lorentz_product(hyperbolic_map(x), hyperbolic_map(y))
    lhs = np.sqrt(_sq(x - y))
    rhs = (np.sqrt(np.abs(1 - _sq(x)) / 2) * np.sqrt(np.abs(1 - _sq(y)) / 2)
           * np.sqrt(np.abs(2 * (qt - 1))))
    return np.abs(lhs - rhs)


def klein_map(x) -> np.ndarray:
    """H(x) = (x, 1)/sqrt(1-|x|^2) on the open unit ball."""
    x = _pts(x)
    r = _sq(x)[:, None]
    if np.any(r >= 1):
        raise GridError("points must lie in the open unit ball")
    return np.hstack([x, np.ones_like(r)]) / np.sqrt(1 - r)


def klein_map_inverse(q) -> np.ndarray:
    q = _pts(q)
    return q[:, :-1] / q[:, -1:]


def klein_jacobian(x) -> np.ndarray:
    """|J| of the inverse map in flat coordinates: (1-|x|^2)^{(n+1)/2}."""
    x = _pts(x)
    n = x.shape[1]
    return (1 - _sq(x)) ** ((n + 1) / 2)


# ------------------------------------------------------------------- lifts

@dataclass(frozen=True, eq=False)
class Lifted:
    """A function on a manifold kept in flat coordinates.

    points: images of the cell centres; values: F at those points;
    weights: manifold measure of each image cell (cell volume / Jacobian).
    Cells on singular sets are zeroed and counted in `zeroed`.
    """

    base: GridFunction
    points: np.ndarray
    values: np.ndarray
    weights: np.ndarray
    p: float
    zeroed: int = 0
    meta: dict = field(default_factory=dict)

    def lp_norm(self, p: float | None = None) -> float:
        p = self.p if p is None else p
        return float(np.sum(self.weights * self.values ** p) ** (1 / p))


def _lift(f: GridFunction, p: float, pts_of, jac_of, keep=None, **meta) -> Lifted:
    if not p > 0:
        raise GridError("p must be positive")
    x = f.centers()
    ok = np.ones(len(x), dtype=bool) if keep is None else keep(x)
    xs = np.where(ok[:, None], x, 0.0)
    J = jac_of(xs)
    vals = np.where(ok, J ** (1 / p) * f.flat, 0.0)
    weights = np.where(ok, f.cell_volume / J, 0.0)
    zeroed = int(np.count_nonzero(~ok & (f.flat > 0)))
    return Lifted(f, pts_of(xs), vals, weights, p, zeroed, meta)


def lift_to_sphere(f: GridFunction, p: float) -> Lifted:
    """F(s) = |J(s)|^{1/p} f(S^{-1}s) on the whole sphere."""
    return _lift(f, p, stereo_sphere, sphere_jacobian_flat, manifold="sphere")


def lift_to_hemisphere(f: GridFunction, p: float) -> Lifted:
    return _lift(f, p, stereo_hemisphere,
                 lambda x: (1 + _sq(x)) ** ((x.shape[1] + 1) / 2), manifold="hemisphere")


def _off_unit_sphere(f: GridFunction):
    """Mask of cells that do not meet the unit sphere |x| = 1."""
    half = f.widths / 2

    def keep(x):
        near = np.sqrt(np.sum(np.maximum(np.abs(x) - half, 0) ** 2, axis=1))
        far = np.sqrt(np.sum((np.abs(x) + half) ** 2, axis=1))
        return (far < 1) | (near > 1)
    return keep


def hyperbolic_lift_bilinear(f: GridFunction, p: float) -> Lifted:
    """F(q) = |J(q)|^{1/p} f(H^{-1}q); cells straddling |x| = 1 are zeroed."""
    return _lift(f, p, hyperbolic_map, hyperbolic_jacobian, keep=_off_unit_sphere(f),
                 manifold="hyperboloid")


def hyperbolic_lift_multilinear(f: GridFunction, p: float) -> Lifted:
    """F(q) = |J(q)|^{1/p} f(H^{-1}q) for the projective hyperboloid chart."""
    keep = _off_unit_sphere(f)
    x = f.centers()
    outside = (f.flat > 0) & ~(keep(x) & (_sq(x) < 1))
    if np.any(outside):
        raise GridError("support must lie inside the open unit ball")
    return _lift(f, p, klein_map, klein_jacobian,
                 keep=lambda y: keep(y) & (_sq(y) < 1), manifold="hyperboloid")


# ---------------------------------------------------------------- rotations

def _pull(f: GridFunction, factor: np.ndarray, src: np.ndarray, p: float, name: str) -> GridFunction:
    ok = np.isfinite(factor) & np.all(np.isfinite(src), axis=1)
    vals = np.zeros(f.size)
    vals[ok] = factor[ok] ** (1 / p) * evaluate(f, src[ok])
    return GridFunction(f.box, f.shape, vals, name=f.name,
                        meta={"zeroed_cells": int(np.count_nonzero(~ok)), "map": name})


def rotation_D_flat(f: GridFunction, p: float) -> GridFunction:
    """Quarter turn of the sphere in the (e_n, e_{n+1}) plane, read in flat coordinates.

    (Df)(x) = (2/|x+e_n|^2)^{n/p} f(2x_1/|x+e_n|^2, ..., (|x|^2-1)/|x+e_n|^2),
    evaluated at the cell centres of the grid of f. The cell holding -e_n is zeroed.
    """
    x = f.centers()
    n = f.dim
    e = np.zeros(n)
    e[-1] = 1.0
    d2 = _sq(x + e)
    with np.errstate(divide="ignore", invalid="ignore"):
        src = np.empty_like(x)
        src[:, :-1] = 2 * x[:, :-1] / d2[:, None]
        src[:, -1] = (_sq(x) - 1) / d2
        factor = (2 / d2) ** n
    bad = d2 == 0
    factor[bad] = np.nan
    return _pull(f, factor, src, p, "D")


def rotation_U_flat(f: GridFunction, p: float, axis: int = 1, alpha: float = 1.0) -> GridFunction:
    """Rotate the upper hemisphere by alpha in the (e_axis, e_{n+1}) plane.

    Points pushed below the equator are sent to their antipodes, which in
    flat coordinates is the projective action
    x_i -> (x_i cos a + sin a)/(cos a - x_i sin a), x_k -> x_k/(cos a - x_i sin a)
    with Jacobian |cos a - x_i sin a|^{-(n+1)}.
    """
    n = f.dim
    if not 1 <= axis <= n:
        raise GridError(f"axis {axis} out of range")
    i = axis - 1
    x = f.centers()
    c, s = np.cos(alpha), np.sin(alpha)
    den = c - x[:, i] * s
    with np.errstate(divide="ignore", invalid="ignore"):
        src = x / den[:, None]
        src[:, i] = (x[:, i] * c + s) / den
        factor = np.abs(den) ** -(n + 1.0)
    factor[den == 0] = np.nan
    return _pull(f, factor, src, p, "U")


def map_sphere_D(s) -> np.ndarray:
    """D(s) = (s_1, ..., s_{n-1}, s_{n+1}, -s_n)."""
    s = _pts(s).copy()
    s[:, [-2, -1]] = np.stack([s[:, -1], -s[:, -2]], axis=1)
    return s
