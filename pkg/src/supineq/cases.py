"""Closed-form constants, known extremizers and counterexample families."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
import numpy as np

from . import __version__
from .gridfn import GridError, GridFunction, default_grid, from_function
from .symmetrize import bilinear_profile, multilinear_profile, sphere_area

UPPER_BOUND_ONLY = "upper-bound-only"


class ConstantFamily(str, Enum):
    BILINEAR_RN = "bilinear-rn"
    BILINEAR_SPHERE = "bilinear-sphere"
    BILINEAR_HYPERBOLIC = "bilinear-hyperbolic"
    MULTILINEAR_RN = "multilinear-rn"
    MULTILINEAR_SPHERE = "multilinear-sphere"
    MULTILINEAR_HYPERBOLIC = "multilinear-hyperbolic"


@dataclass(frozen=True)
class SharpConstant:
    """`value` is sharp unless `marker` says it is only an upper bound."""

    family: ConstantFamily
    p: float
    n: int
    value: float
    marker: str | None = None

    @property
    def upper_bound_only(self) -> bool:
        return self.marker == UPPER_BOUND_ONLY

    def to_dict(self) -> dict:
        return {"family": self.family.value, "p": self.p, "n": self.n,
                "value": self.value, "marker": self.marker}


def _family(family) -> ConstantFamily:
    if isinstance(family, ConstantFamily):
        return family
    key = str(family).lower().replace("_", "-")
    for fam in ConstantFamily:
        if key in (fam.value, fam.name.lower().replace("_", "-"), fam.value.replace("-", "")):
            return fam
    raise GridError(f"unknown family {family!r}")


def bilinear_constant(p: float, n: int) -> float:
    return 2 ** (-2 * n / p) * sphere_area(n) ** (2 / p)


def multilinear_constant(p: float, n: int) -> float:
    return (sphere_area(n) / 2) ** ((n + 1) / p)


def bilinear_proof_constant(p: float, q: float, n: int) -> float:
    """A valid, generally non-sharp constant for any finite p, q in R^n.

    It comes from the layer-cake interpolation between the weak endpoint
    bounds, with ball-volume constant v_n = |B(0,1)|.
    """
    if not (0 < p < math.inf and 0 < q < math.inf):
        raise GridError("p and q must be positive and finite")
    vn = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
    return vn ** (1 / p + 1 / q) * ((p + q) / p) ** (1 / p) * ((p + q) / q) ** (1 / q)


def sharp_constant(family, p: float, n: int) -> SharpConstant:
    fam = _family(family)
    if not p > 0 or math.isinf(p):
        raise GridError("p must be positive and finite")
    if n < 1:
        raise GridError("n must be at least 1")
    S = sphere_area(n)
    marker = None
    if fam in (ConstantFamily.BILINEAR_RN, ConstantFamily.BILINEAR_SPHERE):
        value = bilinear_constant(p, n)
    elif fam == ConstantFamily.BILINEAR_HYPERBOLIC:
        # the flat form transported through |x-y|^2 = J(x)^{1/n} J(y)^{1/n} |2(qt-1)|
        value = 2 ** (n / p) * bilinear_constant(p, n)
        marker = UPPER_BOUND_ONLY
    elif fam == ConstantFamily.MULTILINEAR_RN:
        value = multilinear_constant(p, n)
    elif fam == ConstantFamily.MULTILINEAR_SPHERE:
        value = S ** ((n + 1) / p)
    else:
        value = 2 ** ((n + 1) / p) * (S / 2) ** ((n + 1) / p)
        marker = UPPER_BOUND_ONLY
    return SharpConstant(fam, float(p), int(n), float(value), marker)


def extremizer(family, p: float, n: int, box=None, shape=None,
               sample: str = "center") -> GridFunction:
    """The known extremizer in flat coordinates, sampled on a grid.

    Sphere and hyperbolic families return the flat function whose lift is the
    extremizer on the manifold; each is a multiple of the flat profile.
    """
    fam = _family(family)
    if box is None or shape is None:
        box, shape = default_grid(n)
    if len(box) != n:
        raise GridError("grid dimension must equal n")
    if fam in (ConstantFamily.BILINEAR_RN, ConstantFamily.BILINEAR_SPHERE,
               ConstantFamily.BILINEAR_HYPERBOLIC):
        h = bilinear_profile(n, p)
        formula = f"(1+|x|^2)^(-{n}/{p})"
    elif fam in (ConstantFamily.MULTILINEAR_RN, ConstantFamily.MULTILINEAR_SPHERE):
        h = multilinear_profile(n, p)
        formula = f"(1+|x|^2)^(-({n}+1)/(2*{p}))"
    else:
        raise GridError("no extremizer is known for the multilinear hyperbolic form")
    lifted = {
        ConstantFamily.BILINEAR_SPHERE: "constant on the sphere",
        ConstantFamily.BILINEAR_HYPERBOLIC: "|q_{n+1}|^(-n/p) on the hyperboloid",
        ConstantFamily.MULTILINEAR_SPHERE: "constant on the hemisphere",
    }.get(fam)
    meta = {"family": fam.value, "p": p, "n": n, "formula": formula}
    if lifted:
        meta["lift"] = lifted
    return from_function(h, box, shape, name=f"h[{fam.value}]", sample=sample, **meta)


# ------------------------------------------------------- graded 1-D cells

@dataclass(frozen=True, eq=False)
class GradedCells:
    """Nonnegative step function on sorted, non-overlapping 1-D cells [lo_i, hi_i]."""

    lo: np.ndarray
    hi: np.ndarray
    values: np.ndarray

    @property
    def size(self) -> int:
        return int(self.lo.size)

    def integral(self, power: float) -> float:
        """Integral of f^power."""
        return float(np.sum((self.hi - self.lo) * self.values ** power))

    def norm(self, p: float) -> float:
        if math.isinf(p):
            return float(self.values.max(initial=0.0))
        return self.integral(p) ** (1 / p)


def _symmetric_shell(a: float, b: float, per_decade: int, profile) -> GradedCells:
    """Cells geometric in |s| on a <= |s| <= b; each cell takes `profile` at its
    outer end, its infimum for decreasing profiles."""
    m = max(1, math.ceil(per_decade * math.log10(b / a)))
    e = np.geomspace(a, b, m + 1)
    e[0], e[-1] = a, b
    lo = np.concatenate([-e[:0:-1], e[:-1]])
    hi = np.concatenate([-e[-2::-1], e[1:]])
    outer = np.maximum(np.abs(lo), np.abs(hi))
    return GradedCells(lo, hi, profile(outer))


def _single(a: float, b: float) -> GradedCells:
    return GradedCells(np.array([a]), np.array([b]), np.array([1.0]))


def _max_dist(A: GradedCells, B: GradedCells) -> np.ndarray:
    """Largest |s-t| over s in cell i of A and t in cell j of B, shape (|A|, |B|)."""
    return np.maximum(np.abs(A.hi[:, None] - B.lo[None, :]),
                      np.abs(B.hi[None, :] - A.lo[:, None]))


def _upper_sup(cells: list[GradedCells], r: np.ndarray) -> float:
    """Upper bound for sup prod f_j(y_j) prod_{i<j} |y_i - y_j|^{r_ij}.

    Exact for the enumerated cells: every tuple is bounded by its cell values
    times the largest pairwise distances.
    """
    N = len(cells)
    total = None
    for j, c in enumerate(cells):
        shape = [1] * N
        shape[j] = c.size
        v = c.values.reshape(shape)
        total = v if total is None else total * v
    for i in range(N):
        for j in range(i + 1, N):
            if r[i, j] == 0:
                continue
            d = _max_dist(cells[i], cells[j])
            shape = [1] * N
            shape[i], shape[j] = cells[i].size, cells[j].size
            total = total * d.reshape(shape) ** r[i, j]
    return float(np.max(total))


def _tail_bound(a: float, inv: float) -> float:
    """(2 int_2^inf y^{-a} dy)^{inv} for a > 1: the N -> inf limit of ||f_1||."""
    return (2 * 2 ** (1 - a) / (a - 1)) ** inv


def _log_slope(Ns, ys) -> float:
    if len(Ns) < 2:
        return float("nan")
    return float(np.polyfit(np.log(np.asarray(Ns, float)), np.asarray(ys, float), 1)[0])


@dataclass(frozen=True)
class Experiment:
    """Immutable record of a counterexample run, JSON-serialisable."""

    name: str
    params: dict
    rows: tuple
    fitted_slope: float
    predicted_slope: float
    sup_bound: float
    formulas: dict = field(default_factory=dict)
    control: dict | None = None

    @property
    def sup_max(self) -> float:
        return max(row["sup_upper"] for row in self.rows)

    @property
    def slope_error(self) -> float:
        return abs(self.fitted_slope - self.predicted_slope) / abs(self.predicted_slope)

    def to_dict(self) -> dict:
        return {"experiment": self.name, "params": self.params, "rows": list(self.rows),
                "fitted_slope": self.fitted_slope, "predicted_slope": self.predicted_slope,
                "sup_bound": self.sup_bound, "formulas": self.formulas,
                "control": self.control, "version": __version__}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _Ns(N) -> list[float]:
    Ns = [float(N)] if np.isscalar(N) else [float(x) for x in N]
    if not Ns:
        raise GridError("need at least one N")
    return Ns


def _check_n(n: int):
    if n != 1:
        raise GridError("counterexample runs are implemented for n = 1")


def endpoint_counterexample_bilinear(N=(10, 100, 1000), p: float = 2.0, n: int = 1,
                                     per_decade: int = 2000) -> Experiment:
    """f_N = (1+|s|)^{-n/p} on 1 <= |s| <= N against g = indicator of |t| <= 1.

    The sup of f_N(s) g(t) |s-t|^{n/p} stays at 1 while int f_N^p grows like
    2 ln N, so no bound with the L-infinity norm of g can hold.
    """
    _check_n(n)
    Ns = _Ns(N)
    if min(Ns) <= 1:
        raise GridError("N must exceed 1")
    g = _single(-1.0, 1.0)
    gamma = n / p
    r = np.array([[0, gamma], [gamma, 0]])
    rows = []
    for Nk in Ns:
        f = _symmetric_shell(1.0, Nk, per_decade, lambda s: (1 + s) ** (-n / p))
        rows.append({"N": Nk, "cells": f.size, "sup_upper": _upper_sup([f, g], r),
                     "lhs_norm": f.norm(p), "norm_p_power": f.integral(p),
                     "predicted": 2 * (math.log(Nk + 1) - math.log(2))})
    slope = _log_slope(Ns, [row["norm_p_power"] for row in rows])
    return Experiment(
        "endpoint-bilinear", {"N": Ns, "p": p, "n": n, "gamma": gamma,
                              "per_decade": per_decade},
        tuple(rows), slope, 2.0, 1.0,
        {"f_N": "(1+|s|)^(-n/p) on 1<=|s|<=N", "g": "indicator of |t|<=1",
         "norm_p_power": "2(ln(N+1) - ln 2)"})


def failed_endpoint_Linf(N=(10, 100, 1000), p: float = 2.0, n: int = 1,
                         q_control: float = 2.0, per_decade: int = 2000) -> Experiment:
    """The same family paired with ||g||_inf = 1: the ratio ||f_N||_p / sup is unbounded.

    The control run uses the finite q_control with gamma = n/p + n/q_control,
    where the ratio stays bounded (it tends to zero).
    """
    base = endpoint_counterexample_bilinear(N, p, n, per_decade)
    rows = []
    for row in base.rows:
        rows.append({**row, "g_inf": 1.0, "ratio": row["lhs_norm"] / row["sup_upper"]})
    Ns = list(base.params["N"])
    g = _single(-1.0, 1.0)
    gc = n / p + n / q_control
    rc = np.array([[0, gc], [gc, 0]])
    ctrl = []
    for Nk in Ns:
        f = _symmetric_shell(1.0, Nk, per_decade, lambda s: (1 + s) ** (-n / p))
        sup = _upper_sup([f, g], rc)
        ctrl.append({"N": Nk, "sup_upper": sup,
                     "ratio": f.norm(p) * g.norm(q_control) / sup})
    slope = _log_slope(Ns, [row["ratio"] ** p for row in rows])
    return Experiment(
        "linf", {**base.params, "q_control": q_control}, tuple(rows), slope, 2.0, 1.0,
        {**base.formulas, "ratio^p": "grows like 2 ln N"},
        {"q": q_control, "gamma": gc, "rows": ctrl})


def boundary_counterexample_det(N=(10, 100, 1000), n: int = 1, gamma: float = 1.0,
                                perturb: float = 0.05, per_decade: int = 2000) -> Experiment:
    """f_1 = |y|^{-gamma} on 2 <= |y| <= N, f_2 = indicator of |y| <= 1/4, in R^1.

    At the boundary exponent 1/p_1 = gamma/n the sup of f_1 f_2 det^gamma stays
    below (9/8)^gamma while int f_1^{p_1} = 2 ln(N/2). The control lowers 1/p_1
    by `perturb` and puts the difference on p_2; its ratio stays below the
    closed-form N -> inf limit recorded as `ratio_bound`.
    """
    _check_n(n)
    Ns = _Ns(N)
    if min(Ns) <= 2:
        raise GridError("N must exceed 2")
    if not 0 < perturb < gamma:
        raise GridError("perturb must lie in (0, gamma)")
    f2 = _single(-0.25, 0.25)
    r = np.array([[0, gamma], [gamma, 0]])
    p1 = n / gamma
    inv1, inv2 = gamma / n - perturb, perturb
    rows, ctrl = [], []
    for Nk in Ns:
        f1 = _symmetric_shell(2.0, Nk, per_decade, lambda y: y ** -gamma)
        sup = _upper_sup([f1, f2], r)
        rows.append({"N": Nk, "cells": f1.size, "sup_upper": sup,
                     "norm_p_power": f1.integral(p1),
                     "predicted": 2 * (math.log(Nk) - math.log(2))})
        lhs = f1.norm(1 / inv1) * f2.norm(1 / inv2)
        ctrl.append({"N": Nk, "ratio": float(lhs / sup)})
    slope = _log_slope(Ns, [row["norm_p_power"] for row in rows])
    return Experiment(
        "boundary-det", {"N": Ns, "n": n, "gamma": gamma, "p": [p1, math.inf],
                         "per_decade": per_decade},
        tuple(rows), slope, 2.0, 1.125 ** gamma,
        {"f_1": "|y|^(-gamma) on 2<=|y|<=N", "f_2": "indicator of |y|<=1/4",
         "norm_p_power": "2(ln N - ln 2)"},
        {"p": [1 / inv1, 1 / inv2], "rows": ctrl,
         "ratio_bound": _tail_bound(gamma / inv1, inv1) * 0.5 ** inv2 / rows[0]["sup_upper"]})


def product_counterexample(N=(10, 100, 1000), n: int = 1, r=None,
                           control_inv_p1: float | None = None,
                           per_decade: int = 2000) -> Experiment:
    """f_1 = |y|^{-(r12+r13)} on 2 <= |y| <= N, f_2 = f_3 = indicator of |y| <= 1/4.

    With 1/p_1 = (r12+r13)/n the sup stays bounded while int f_1^{p_1} = 2 ln(N/2).
    The control run takes 1/p_1 = 0.05 below the boundary and splits the
    remainder of the homogeneity budget evenly between p_2 and p_3.
    """
    _check_n(n)
    Ns = _Ns(N)
    if min(Ns) <= 2:
        raise GridError("N must exceed 2")
    r = np.ones((3, 3)) - np.eye(3) if r is None else np.asarray(r, dtype=float)
    if r.shape != (3, 3) or not np.allclose(r, r.T) or np.any(r < 0):
        raise GridError("r must be a symmetric nonnegative 3x3 matrix")
    s1 = r[0, 1] + r[0, 2]
    if s1 <= 0:
        raise GridError("r12 + r13 must be positive")
    total = (r[0, 1] + r[0, 2] + r[1, 2]) / n
    inv1 = s1 / n
    rest = (total - inv1) / 2
    cinv1 = inv1 - 0.05 if control_inv_p1 is None else control_inv_p1
    crest = (total - cinv1) / 2
    small = _single(-0.25, 0.25)
    rows, ctrl = [], []
    for Nk in Ns:
        f1 = _symmetric_shell(2.0, Nk, per_decade, lambda y: y ** -s1)
        sup = _upper_sup([f1, small, small], r)
        rows.append({"N": Nk, "cells": f1.size, "sup_upper": sup,
                     "norm_p_power": f1.integral(1 / inv1),
                     "predicted": 2 * (math.log(Nk) - math.log(2))})
        lhs = f1.norm(1 / cinv1) * small.norm(1 / crest) ** 2
        ctrl.append({"N": Nk, "ratio": float(lhs / sup)})
    slope = _log_slope(Ns, [row["norm_p_power"] for row in rows])
    bound = 1.125 ** s1 * 0.5 ** r[1, 2]
    p_rest = math.inf if rest == 0 else 1 / rest
    return Experiment(
        "product", {"N": Ns, "n": n, "r": r.tolist(), "p": [1 / inv1, p_rest, p_rest],
                    "per_decade": per_decade},
        tuple(rows), slope, 2.0, bound,
        {"f_1": "|y|^(-(r12+r13)) on 2<=|y|<=N", "f_2": "indicator of |y|<=1/4",
         "f_3": "indicator of |y|<=1/4", "norm_p_power": "2(ln N - ln 2)"},
        {"p": [1 / cinv1, 1 / crest, 1 / crest], "rows": ctrl,
         "ratio_bound": _tail_bound(s1 / cinv1, cinv1) * 0.5 ** (2 * crest) / rows[0]["sup_upper"]})


COUNTEREXAMPLES = {
    "endpoint-bilinear": endpoint_counterexample_bilinear,
    "boundary-det": boundary_counterexample_det,
    "product": product_counterexample,
    "linf": failed_endpoint_Linf,
}


def counterexample(name: str, **kwargs) -> Experiment:
    if name not in COUNTEREXAMPLES:
        raise GridError(f"unknown counterexample {name!r}")
    return COUNTEREXAMPLES[name](**kwargs)

