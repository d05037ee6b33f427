"""Competing-symmetries iterations towards the conformal extremizers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import conformal
from .gridfn import GridError, GridFunction, from_function, lp_norm
from .rearrange import steiner_symmetrize, symmetric_rearrange
from .supfunc import (ExponentSpec, Family, bilinear_sup, det_sup, product_sup)


def sphere_area(n: int) -> float:
    """Surface measure of the unit n-sphere in R^{n+1}."""
    return 2 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


@dataclass(frozen=True)
class IterationTrace:
    k: int
    norm: float
    dist: float
    sup: float | None
    factor: float = 1.0

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "norm": self.norm, "dist": self.dist, "sup": self.sup})


@dataclass
class IterationResult:
    function: GridFunction
    trace: list[IterationTrace]
    converged: bool
    c: float
    status: str = ""
    warnings: list[str] = field(default_factory=list)

    def __iter__(self):
        # allows `final, trace = bilinear_iterate(...)`
        return iter((self.function, self.trace))


def bilinear_profile(n: int, p: float):
    return lambda x: (1 + np.sum(x * x, axis=1)) ** (-n / p)


def multilinear_profile(n: int, p: float):
    return lambda x: (1 + np.sum(x * x, axis=1)) ** (-(n + 1) / (2 * p))


def _distance(g: GridFunction, target: GridFunction, p: float, scale: float) -> float:
    diff = g.with_values(np.abs(g.values - target.values))
    return lp_norm(diff, p) / scale


def _iterate(f: GridFunction, p: float, max_iter: int, tol: float, c: float,
             profile, step, sup_of, renormalize: bool) -> IterationResult:
    n0 = lp_norm(f, p)
    if n0 == 0:
        raise GridError("cannot iterate the zero function")
    g = f
    target = from_function(profile, g.box, g.shape)
    trace = [IterationTrace(0, n0, _distance(g, target, p, n0), sup_of(g))]
    warnings = []
    k = 0
    while trace[-1].dist >= tol and k < max_iter:
        k += 1
        g = step(g, k)
        if g.box != target.box or g.shape != target.shape:
            target = from_function(profile, g.box, g.shape)
        nk = lp_norm(g, p)
        factor = n0 / nk if renormalize and nk > 0 else 1.0
        if factor != 1.0:
            g = g.scaled(factor)
        trace.append(IterationTrace(k, lp_norm(g, p), _distance(g, target, p, n0), sup_of(g), factor))
    factors = [t.factor for t in trace[1:]]
    if factors:
        warnings.append(f"renormalized each step; factors in [{min(factors):.6g}, {max(factors):.6g}]")
    converged = trace[-1].dist < tol
    status = "converged" if converged else f"not converged after {k} iterations"
    return IterationResult(g, trace, converged, c, status, warnings)


def bilinear_iterate(f: GridFunction, p: float, max_iter: int = 50, tol: float = 1e-2,
                     track_sup: bool = True, threads: int = 1,
                     renormalize: bool = True) -> IterationResult:
    """f_k = (R D)^k f with D the quarter turn of the sphere read in flat coordinates."""
    n = f.dim
    c = 2 ** (n / p) * sphere_area(n) ** (-1 / p) * lp_norm(f, p)
    h = bilinear_profile(n, p)
    gamma = 2 * n / p

    def step(g, k):
        return symmetric_rearrange(conformal.rotation_D_flat(g, p))

    def sup_of(g):
        if not track_sup:
            return None
        return bilinear_sup(g, g, gamma, "upper", threads).upper

    return _iterate(f, p, max_iter, tol, c, lambda x: c * h(x), step, sup_of, renormalize)


def steiner_schedule(n: int, k: int) -> tuple[int, list[int]]:
    """Rotation axis and Steiner order for step k >= 1: (i, [i, i+1, ..., n, 1, ..., i-1])."""
    i = (k - 1) % n + 1
    return i, [i + j if i + j <= n else i + j - n for j in range(n)]


def multilinear_iterate(f: GridFunction, p: float, max_iter: int = 100, tol: float = 1e-2,
                        alpha: float = 1.0, track_sup: bool = True, threads: int = 1,
                        renormalize: bool = True) -> IterationResult:
    """Alternate hemisphere rotations by alpha with full Steiner sweeps."""
    n = f.dim
    c = (sphere_area(n) / 2) ** (-1 / p) * lp_norm(f, p)
    h = multilinear_profile(n, p)
    gamma = (n + 1) / p

    def step(g, k):
        axis, order = steiner_schedule(n, k)
        g = conformal.rotation_U_flat(g, p, axis, alpha)
        for j in order:
            g = steiner_symmetrize(g, j)
        return g

    def sup_of(g):
        if not track_sup:
            return None
        return det_sup([g] * (n + 1), gamma, "upper", threads).upper

    return _iterate(f, p, max_iter, tol, c, lambda x: c * h(x), step, sup_of, renormalize)


def ratio(fs, spec: ExponentSpec, threads: int = 1) -> float:
    """prod ||f_j||_{p_j} over the lower-mode sup: the constant a pair or tuple needs."""
    fs = list(fs)
    if len(fs) != len(spec.p):
        raise GridError("one exponent per function")
    fam = Family(spec.family)
    if fam == Family.BILINEAR:
        res = bilinear_sup(fs[0], fs[1], spec.gamma, "lower", threads)
    elif fam == Family.DETERMINANT:
        res = det_sup(fs, spec.gamma, "lower", threads)
    else:
        res = product_sup(fs, spec.r, "lower", threads)
    if res.lower == 0:
        raise GridError("vacuous: the sup-functional vanishes")
    return math.prod(lp_norm(f, p) for f, p in zip(fs, spec.p)) / res.lower


def trace_lines(trace: list[IterationTrace]) -> str:
    return "".join(t.to_json() + "\n" for t in trace)


def trace_csv(trace: list[IterationTrace]) -> str:
    rows = ["k,norm,dist,sup,factor"]
    rows += [f"{t.k},{t.norm!r},{t.dist!r},{'' if t.sup is None else repr(t.sup)},{t.factor!r}"
             for t in trace]
    return "\n".join(rows) + "\n"

