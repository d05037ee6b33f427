"""Sup-functionals over tuples of grid cells with certified bounds.

Every functional is a max over tuples of cells of prod f_j(cell_j) times a
geometric weight. Three bound modes evaluate the weight differently:
lower (certified lower bound of the essential sup), center (cell centres)
and upper (certified over-estimate).
"""

from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .gridfn import GridError, GridFunction

MODES = ("lower", "center", "upper")
_CHUNK = 1 << 21  # tuple evaluations per vectorised block


class Mode(str, Enum):
    LOWER = "lower"
    CENTER = "center"
    UPPER = "upper"


class DegenerateWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SupResult:
    lower: float
    center: float
    upper: float
    argmax: tuple[tuple[int, ...], ...]
    mode_used: Mode = Mode.LOWER
    argmax_by_mode: dict = field(default_factory=dict, compare=False)

    @property
    def value(self) -> float:
        return getattr(self, Mode(self.mode_used).value)

    @property
    def vacuous(self) -> bool:
        return self.upper == 0.0

    def to_dict(self) -> dict:
        return {"lower": self.lower, "center": self.center, "upper": self.upper,
                "argmax": [list(a) for a in self.argmax],
                "mode_used": Mode(self.mode_used).value}


@dataclass
class _Cells:
    """Nonzero cells of one grid function."""

    vals: np.ndarray
    pts: np.ndarray
    idx: np.ndarray
    half: np.ndarray
    rho: float
    lo: np.ndarray
    hi: np.ndarray
    shape: tuple[int, ...]

    @classmethod
    def of(cls, f: GridFunction) -> "_Cells":
        nz = np.flatnonzero(f.flat)
        pts = f.centers()[nz]
        half = f.widths / 2
        lo = pts.min(axis=0) if nz.size else np.zeros(f.dim)
        hi = pts.max(axis=0) if nz.size else np.zeros(f.dim)
        return cls(f.flat[nz], pts, nz, half, float(np.linalg.norm(half)), lo, hi, f.shape)

    def far(self, c: np.ndarray, extra: np.ndarray) -> np.ndarray:
        """Upper bound on the max corner distance from point(s) c to any cell here."""
        d = np.maximum(np.abs(c - self.lo), np.abs(c - self.hi)) + extra
        return np.sqrt(np.sum(d * d, axis=-1))


def _dists(p, hp, q, hq):
    """(min, centre, max) distances between axis-parallel cells."""
    diff = np.abs(p - q)
    s = hp + hq
    gap = np.maximum(diff - s, 0.0)
    dmin = np.sqrt(np.sum(gap * gap, axis=-1))
    dcen = np.sqrt(np.sum(diff * diff, axis=-1))
    dmax = np.sqrt(np.sum((diff + s) ** 2, axis=-1))
    return dmin, dcen, dmax


Weight = Callable[[list], tuple[np.ndarray, np.ndarray, np.ndarray]]
Bound = Callable[[list, np.ndarray], np.ndarray]


def _enumerate(cells: list[_Cells], weight: Weight, row_bound: Bound,
               threads: int = 1) -> dict:
    """Max of prod f_j * weight over all tuples, for each mode.

    Outer functions (all but the last two) are looped over; the last two form
    a vectorised rows x cols block. Rows that cannot beat the running lower
    incumbent are pruned. Work units are split into contiguous blocks per
    thread and merged keeping the larger value, ties to the smaller tuple.
    """
    N = len(cells)
    rows, cols = cells[-2], cells[-1]
    step = max(1, _CHUNK // max(1, cols.vals.size))
    outer = itertools.product(*[range(c.vals.size) for c in cells[:-2]])
    units = [(o, r0) for o in outer for r0 in range(0, rows.vals.size, step)]
    colmax = cols.vals.max()

    # warm start: the tuple of per-function maxima gives an attained value
    start = tuple(int(np.argmax(c.vals)) for c in cells)
    seed_lower = _block(cells, weight, start[:-2], np.array([start[-2]]))["lower"][0]

    def run(block):
        best = {m: (-1.0, None) for m in MODES}
        inc = seed_lower
        for o, r0 in block:
            r = np.arange(r0, min(r0 + step, rows.vals.size))
            pre = math.prod(cells[j].vals[o[j]] for j in range(N - 2))
            ub = pre * rows.vals[r] * colmax * row_bound([cells[j].pts[o[j]] for j in range(N - 2)], rows.pts[r])
            r = r[ub >= inc]
            if r.size == 0:
                continue
            res = _block(cells, weight, o, r)
            for m in MODES:
                v, t = res[m]
                if v > best[m][0] or (v == best[m][0] and t < best[m][1]):
                    best[m] = (v, t)
            inc = max(inc, best["lower"][0])
        return best

    threads = max(1, int(threads))
    if threads == 1 or len(units) < 2:
        parts = [run(units)]
    else:
        k = min(threads, len(units))
        blocks = [units[i * len(units) // k:(i + 1) * len(units) // k] for i in range(k)]
        with ThreadPoolExecutor(max_workers=k) as ex:
            parts = list(ex.map(run, blocks))
    out = {}
    for m in MODES:
        v, t = -1.0, None
        for part in parts:
            pv, pt = part[m]
            if pt is None:
                continue
            if pv > v or (pv == v and (t is None or pt < t)):
                v, t = pv, pt
        out[m] = (max(v, 0.0), t)
    return out


def _block(cells, weight, o, r):
    """Evaluate one (outer tuple, row set) block against all columns."""
    N = len(cells)
    rows, cols = cells[-2], cells[-1]
    pts = [cells[j].pts[o[j]][None, None, :] for j in range(N - 2)]
    pts.append(rows.pts[r][:, None, :])
    pts.append(cols.pts[None, :, :])
    pre = math.prod(cells[j].vals[o[j]] for j in range(N - 2))
    base = pre * rows.vals[r][:, None] * cols.vals[None, :]
    head = tuple(int(cells[q].idx[o[q]]) for q in range(N - 2))
    out = {}
    for m, wm in zip(MODES, weight(pts)):
        val = base * wm
        # first maximum in row-major order is the lexicographically smallest
        i, j = divmod(int(np.argmax(val)), val.shape[1])
        out[m] = (float(val[i, j]), head + (int(rows.idx[r[i]]), int(cols.idx[j])))
    return out


def _result(cells: list[_Cells], found: dict, mode) -> SupResult:
    mode = Mode(mode)
    by_mode = {}
    for m in MODES:
        v, t = found[m]
        by_mode[m] = () if t is None or v == 0 else tuple(
            tuple(int(i) for i in np.unravel_index(t[j], cells[j].shape)) for j in range(len(cells)))
    lo, ce, up = (found[m][0] for m in MODES)
    return SupResult(lo, ce, up, by_mode[mode.value], mode, by_mode)


def _zero_result(mode) -> SupResult:
    empty = {m: () for m in MODES}
    return SupResult(0.0, 0.0, 0.0, (), Mode(mode), empty)


def _prepare(fs: Sequence[GridFunction]) -> list[_Cells] | None:
    dims = {f.dim for f in fs}
    if len(dims) != 1:
        raise GridError("all functions must share one dimension")
    cells = [_Cells.of(f) for f in fs]
    if any(c.vals.size == 0 for c in cells):
        return None
    return cells


# ---------------------------------------------------------------- product form

def _check_r(r, N: int) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (N, N):
        raise GridError(f"r must be {N}x{N}")
    if not np.allclose(r, r.T, rtol=0, atol=1e-12):
        raise GridError("r must be symmetric")
    off = r[~np.eye(N, dtype=bool)]
    if np.any(off <= 0) or not np.all(np.isfinite(off)):
        raise GridError("off-diagonal r entries must be positive and finite")
    return r


def product_sup(fs: Sequence[GridFunction], r, mode="lower", threads: int = 1) -> SupResult:
    """max over cell tuples of prod f_j * prod_{i<j} d(i,j)^{r_ij}."""
    N = len(fs)
    if not 2 <= N <= 4:
        raise GridError("product form supports 2 to 4 functions")
    r = _check_r(r, N)
    cells = _prepare(fs)
    if cells is None:
        return _zero_result(mode)
    half = [c.half for c in cells]
    pairs = [(i, j) for i in range(N) for j in range(i + 1, N)]

    def weight(pts):
        out = [1.0, 1.0, 1.0]
        for i, j in pairs:
            ds = _dists(pts[i], half[i], pts[j], half[j])
            out = [o * d ** r[i, j] for o, d in zip(out, ds)]
        return [np.broadcast_to(o, (pts[-2].shape[0], pts[-1].shape[1])) for o in out]

    def row_bound(outer, rowpts):
        allpts = [p[None, :] for p in outer] + [rowpts]
        b = np.ones(rowpts.shape[0])
        for i, j in pairs:
            if j == N - 1:
                d = cells[-1].far(allpts[i], half[i] + half[j])
            else:
                _, _, d = _dists(allpts[i], half[i], allpts[j], half[j])
            b = b * d ** r[i, j]
        return b

    found = _enumerate(cells, weight, row_bound, threads)
    return _result(cells, found, mode)


def bilinear_sup(f: GridFunction, g: GridFunction, gamma: float, mode="lower",
                 threads: int = 1) -> SupResult:
    """max over cell pairs of f_i g_j d(i,j)^gamma."""
    if f.dim != g.dim:
        raise GridError("dimension mismatch")
    if not gamma > 0:
        raise GridError("gamma must be positive")
    return product_sup([f, g], [[0, gamma], [gamma, 0]], mode, threads)


# ----------------------------------------------------------- determinant form

def gram_det(points) -> float:
    """sqrt det of the Gram matrix of y_i - y_{k+1}; k+1 points in R^n."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    k, n = pts.shape[0] - 1, pts.shape[1]
    if k < 1:
        raise GridError("need at least two points")
    if k > n:
        warnings.warn(f"{k} edge vectors in R^{n} are dependent; determinant is 0",
                      DegenerateWarning, stacklevel=2)
        return 0.0
    A = pts[:-1] - pts[-1]
    # |prod diag R| avoids squaring the condition number via A A^T
    return float(abs(np.prod(np.diag(np.linalg.qr(A.T, mode="r")))))


def hadamard_check(points) -> bool:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    edges = np.linalg.norm(pts[:-1] - pts[-1], axis=1)
    bound = float(np.prod(edges))
    return gram_det(pts) <= bound + 1e-12 * max(1.0, bound)


def _det_weight(n: int, gamma: float, rho: list[float]):
    if n == 1:
        def weight(pts):
            u = np.abs(pts[0][..., 0] - pts[1][..., 0])
            up = u + rho[0] + rho[1]
            return u ** gamma, u ** gamma, up ** gamma
        return weight

    def weight(pts):
        u = pts[0] - pts[2]
        v = pts[1] - pts[2]
        cross = np.abs(u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0])
        nu = np.sqrt(np.sum(u * u, axis=-1))
        nv = np.sqrt(np.sum(v * v, axis=-1))
        ru = rho[0] + rho[2]
        rv = rho[1] + rho[2]
        up = cross + ru * nv + nu * rv + ru * rv
        c = np.broadcast_to(cross ** gamma, up.shape)
        return c, c, up ** gamma
    return weight


def det_sup(fs: Sequence[GridFunction], gamma: float, mode="lower", threads: int = 1) -> SupResult:
    """max over (n+1)-tuples of cells of prod f_j * det(y_1..y_{n+1})^gamma.

    Lower and center modes use cell centres; upper inflates the determinant
    by the perturbation bound |(u+du) x (v+dv)| <= |u x v| + |du||v| + |u||dv| + |du||dv|.
    """
    if not gamma > 0:
        raise GridError("gamma must be positive")
    n = fs[0].dim if fs else 0
    if n >= 3 or any(f.dim != n for f in fs):
        raise GridError("determinant form needs functions of one common dimension n <= 2")
    if len(fs) != n + 1:
        raise GridError(f"determinant form in R^{n} takes {n + 1} functions, got {len(fs)}")
    cells = _prepare(fs)
    if cells is None:
        return _zero_result(mode)
    rho = [c.rho for c in cells]
    weight = _det_weight(n, gamma, rho)

    def row_bound(outer, rowpts):
        # Hadamard: det <= prod |y_i - y_last|, inflated by cell radii
        last = cells[-1]
        extra = np.zeros(n)
        b = last.far(rowpts, extra) + rho[-2] + rho[-1]
        for j, p in enumerate(outer):
            b = b * (last.far(p[None, :], extra) + rho[j] + rho[-1])
        return b ** gamma

    found = _enumerate(cells, weight, row_bound, threads)
    return _result(cells, found, mode)


# ------------------------------------------------------------ linear forms

def linear_form_sup(fs: Sequence[GridFunction], coeffs: Sequence[float], mode="lower",
                    threads: int = 1) -> SupResult:
    """max over tuples of prod f_j(x_j) * |sum a_j x_j| for 1-D functions."""
    if len(fs) != len(coeffs):
        raise GridError("one coefficient per function")
    if len(fs) < 2:
        raise GridError("need at least two functions")
    if any(f.dim != 1 for f in fs):
        raise GridError("linear forms take one-dimensional functions")
    a = np.asarray(coeffs, dtype=float)
    cells = _prepare(fs)
    if cells is None:
        return _zero_result(mode)
    slack = float(np.sum(np.abs(a) * np.array([c.half[0] for c in cells])))

    def weight(pts):
        s = sum(a[j] * pts[j][..., 0] for j in range(len(pts)))
        s = np.abs(s)
        return np.maximum(s - slack, 0.0), s, s + slack

    def row_bound(outer, rowpts):
        s = sum(a[j] * p[0] for j, p in enumerate(outer)) + a[-2] * rowpts[:, 0]
        last = cells[-1]
        ext = np.maximum(np.abs(s + a[-1] * last.lo[0]), np.abs(s + a[-1] * last.hi[0]))
        return ext + slack

    found = _enumerate(cells, weight, row_bound, threads)
    return _result(cells, found, mode)


# ---------------------------------------------------------------- exponents

class Family(str, Enum):
    BILINEAR = "bilinear"
    DETERMINANT = "det"
    PRODUCT = "product"


@dataclass(frozen=True)
class ExponentSpec:
    family: Family
    n: int
    p: tuple[float, ...]
    gamma: float | None = None
    r: tuple[tuple[float, ...], ...] | None = None


@dataclass(frozen=True)
class Classification:
    status: str  # "admissible" | "boundary_violation" | "homogeneity_violation"
    violations: tuple[int, ...] = ()
    detail: str = ""

    @property
    def admissible(self) -> bool:
        return self.status == "admissible"


def forced_gamma(spec: ExponentSpec) -> float:
    """The exponent that scaling invariance forces on gamma."""
    inv = [1 / p for p in spec.p]
    if spec.family == Family.BILINEAR:
        return spec.n * sum(inv)
    if spec.family == Family.DETERMINANT:
        return sum(inv)
    raise GridError("the product form has no single gamma")


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)


def classify_exponents(spec: ExponentSpec) -> Classification:
    n = spec.n
    p = list(spec.p)
    if any(not pj > 0 for pj in p):
        return Classification("homogeneity_violation", (), "exponents must be positive")
    inv = [1 / pj for pj in p]
    fam = Family(spec.family)
    if fam == Family.BILINEAR:
        if len(p) != 2:
            raise GridError("bilinear form takes exponents (p, q)")
        if spec.gamma is None or not _close(spec.gamma, n * sum(inv)):
            return Classification("homogeneity_violation", (),
                                  f"gamma must equal n(1/p+1/q) = {n * sum(inv)!r}")
        bad = tuple(j + 1 for j, pj in enumerate(p) if math.isinf(pj))
        if bad:
            return Classification(
                "boundary_violation", bad,
                "an L-infinity endpoint fails: f_N = (1+|s|)^(-n/p) on 1<=|s|<=N with "
                "g = indicator of |t|<=1 keeps the sup at 1 while the norm diverges")
        return Classification("admissible")
    if fam == Family.DETERMINANT:
        if len(p) != n + 1:
            raise GridError(f"determinant form in R^{n} takes {n + 1} exponents")
        if spec.gamma is None or not _close(spec.gamma, sum(inv)):
            return Classification("homogeneity_violation", (),
                                  f"gamma must equal sum 1/p_j = {sum(inv)!r}")
        bad = tuple(j + 1 for j, x in enumerate(inv) if not x < spec.gamma / n
                    or _close(x, spec.gamma / n))
        if bad:
            return Classification("boundary_violation", bad, "need 1/p_j < gamma/n")
        return Classification("admissible")
    if spec.r is None:
        raise GridError("product form needs r")
    N = len(p)
    r = _check_r(spec.r, N)
    total = sum(r[i, j] for i in range(N) for j in range(i + 1, N)) / n
    if not _close(sum(inv), total):
        return Classification("homogeneity_violation", (),
                              f"sum 1/p_j must equal (1/n) sum_(i<j) r_ij = {total!r}")
    bad = []
    for j in range(N):
        lim = sum(r[i, j] for i in range(N) if i != j) / n
        if not inv[j] < lim or _close(inv[j], lim):
            bad.append(j + 1)
    if bad:
        return Classification("boundary_violation", tuple(bad),
                              "need 1/p_j < (1/n) sum_(i!=j) r_ij")
    return Classification("admissible")
