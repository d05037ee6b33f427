"""Ellipsoid k-content, curvature probes for measures, determinant sublevel sets."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .gridfn import GridError
from .supfunc import gram_det

INF = math.inf
LENGTH_RANGE = (1e-3, 1e3)


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    center: np.ndarray
    axes: np.ndarray  # rows are the orthonormal directions
    lengths: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        A = np.atleast_2d(np.asarray(self.axes, dtype=float))
        L = np.asarray(self.lengths, dtype=float)
        n = c.size
        if A.shape != (n, n) or L.shape != (n,):
            raise GridError("need n axes and n lengths in R^n")
        if not np.allclose(A @ A.T, np.eye(n), atol=1e-10):
            raise GridError("axes must be orthonormal")
        if np.any(np.isnan(L)) or np.any(L < 0):
            raise GridError("lengths must be nonnegative")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "axes", A)
        object.__setattr__(self, "lengths", L)

    @property
    def dim(self) -> int:
        return self.center.size

    @classmethod
    def axis_aligned(cls, lengths, center=None) -> "Ellipsoid":
        n = len(lengths)
        return cls(np.zeros(n) if center is None else center, np.eye(n), lengths)

    def contains(self, x: np.ndarray) -> np.ndarray:
        y = (np.atleast_2d(x) - self.center) @ self.axes.T
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(np.isinf(self.lengths), 0.0, (y / self.lengths) ** 2)
            q = np.where((self.lengths == 0) & (y == 0), 0.0, q)
        return np.sum(q, axis=1) <= 1


def k_content(e: Ellipsoid, k: int) -> float:
    """Largest product of k semi-axis lengths; a forced zero beats infinity."""
    if not 1 <= k <= e.dim:
        raise GridError(f"k must be in 1..{e.dim}")
    top = np.sort(e.lengths)[::-1][:k]
    if np.any(top == 0):
        return 0.0
    return float(np.prod(top))


def random_rotation(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def random_ellipsoid(rng: np.random.Generator, n: int, center_scale: float = 1.0) -> Ellipsoid:
    lo, hi = np.log(LENGTH_RANGE)
    lengths = np.exp(rng.uniform(lo, hi, n))
    return Ellipsoid(rng.uniform(-center_scale, center_scale, n), random_rotation(rng, n), lengths)


# ------------------------------------------------------------------ measures

class Measure(str, Enum):
    LEBESGUE = "lebesgue"
    LINE = "line"
    SPHERE = "sphere"


def ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def lebesgue_measure(e: Ellipsoid) -> float:
    return ball_volume(e.dim) * float(np.prod(e.lengths))


def line_measure(e: Ellipsoid) -> float:
    """Length of the chord cut by the ellipsoid from the first coordinate axis."""
    # points t*e_1: quadratic a t^2 + b t + c <= 0 in ellipsoid coordinates
    d = e.axes[:, 0]
    y0 = -e.axes @ e.center
    inv = np.where(e.lengths > 0, 1 / np.where(e.lengths > 0, e.lengths, 1) ** 2, np.inf)
    if np.any(np.isinf(inv) & ((np.abs(d) > 0) | (y0 != 0))):
        # a zero length whose direction meets the line cuts it to at most a point
        return 0.0
    inv = np.where(np.isinf(inv), 0.0, inv)
    a = float(np.sum(d * d * inv))
    b = float(2 * np.sum(d * y0 * inv))
    c = float(np.sum(y0 * y0 * inv)) - 1
    if a == 0:
        return INF if c <= 0 else 0.0
    disc = b * b - 4 * a * c
    return math.sqrt(disc) / a if disc > 0 else 0.0


def sphere_measure(e: Ellipsoid, rng: np.random.Generator, samples: int = 20000) -> float:
    """Monte Carlo surface measure of the unit sphere S^{n-1} (n = 2, 3) inside the ellipsoid.

    Samples are drawn uniformly on the spherical cap that contains the
    ellipsoid's bounding ball, so thin ellipsoids still get hits.
    """
    n = e.dim
    if n not in (2, 3):
        raise GridError("sphere probes support n = 2 or 3")
    R = float(np.max(e.lengths))
    c = e.center
    rc = float(np.linalg.norm(c))
    if rc == 0 or not math.isfinite(R):
        cosb = -1.0
    else:
        cosb = max(-1.0, min(1.0, (1 + rc * rc - R * R) / (2 * rc)))
    if cosb >= 1.0:
        return 0.0
    axis = np.eye(n)[-1] if rc == 0 else c / rc
    if n == 2:
        beta = math.acos(cosb)
        th = rng.uniform(-beta, beta, samples)
        base = math.atan2(axis[1], axis[0])
        u = np.stack([np.cos(base + th), np.sin(base + th)], axis=1)
        cap = 2 * beta
    else:
        z = rng.uniform(cosb, 1.0, samples)
        phi = rng.uniform(0, 2 * math.pi, samples)
        s = np.sqrt(1 - z * z)
        local = np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)
        # rotate e_3 onto the cap axis
        frame = np.linalg.qr(np.column_stack([axis, np.eye(3)]))[0][:, :3]
        frame = frame * np.sign(frame[:, 0] @ axis)
        u = local @ np.column_stack([frame[:, 1], frame[:, 2], axis]).T
        cap = 2 * math.pi * (1 - cosb)
    return cap * float(np.mean(e.contains(u)))


@dataclass
class ProbeReport:
    measure: str
    k: int
    alpha: float
    max_ratio: float
    witness: dict
    verdict: str
    growth: float

    def to_dict(self) -> dict:
        return {"measure": self.measure, "k": self.k, "alpha": self.alpha,
                "max_ratio": self.max_ratio, "witness": self.witness, "verdict": self.verdict}


def _witness_family(measure: Measure, n: int, k: int, alpha: float, t: float) -> Ellipsoid:
    """Adversarial ellipsoids indexed by a scale t in (0, 1]; t -> 0 stresses the bound."""
    if measure == Measure.LINE:
        # thin sliver along the line: chord length fixed, thickness t
        return Ellipsoid.axis_aligned([1.0] + [t] * (n - 1))
    if measure == Measure.SPHERE:
        # tangent cap: along the sphere t, across t^2
        lengths = [t] * (n - 1) + [t * t]
        center = np.zeros(n)
        center[-1] = 1.0
        return Ellipsoid.axis_aligned(lengths, center)
    # Lebesgue: degenerate-in-the-smallest-directions family
    return Ellipsoid.axis_aligned([1.0] * k + [t] * (n - k))


def _mu(measure: Measure, e: Ellipsoid, rng, samples: int) -> float:
    if measure == Measure.LEBESGUE:
        return lebesgue_measure(e)
    if measure == Measure.LINE:
        return line_measure(e)
    return sphere_measure(e, rng, samples)


def _ratio(mu: float, content: float, alpha: float) -> float:
    if mu == 0:
        return 0.0
    if content == 0:
        return INF
    return mu / content ** alpha


def curvature_probe(measure, k: int, alpha: float, trials: int = 1000, n: int = 2,
                    seed: int = 0, samples: int = 20000, growth_factor: float = 10.0) -> ProbeReport:
    """Estimate sup mu(B)/|B|_k^alpha over random and adversarial ellipsoids.

    The verdict is "unbounded" when the ratio along the witness family grows by
    more than `growth_factor` over six decades of scale while increasing at
    every step, and "bounded" otherwise.
    """
    measure = Measure(measure)
    if trials < 1:
        raise GridError("need at least one trial")
    if not 1 <= k <= n:
        raise GridError("need 1 <= k <= n")
    best, witness = 0.0, {}
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        e = random_ellipsoid(rng, n, center_scale=1.5 if measure == Measure.SPHERE else 1.0)
        r = _ratio(_mu(measure, e, rng, samples), k_content(e, k), alpha)
        if r > best:
            best = r
            witness = {"source": "random", "trial": trial, "center": e.center.tolist(),
                       "axes": e.axes.tolist(), "lengths": e.lengths.tolist()}
    ts = 10.0 ** -np.arange(0, 7, dtype=float)
    fam = []
    for i, t in enumerate(ts):
        rng = np.random.default_rng([seed, trials + i])
        e = _witness_family(measure, n, k, alpha, t)
        fam.append(_ratio(_mu(measure, e, rng, samples), k_content(e, k), alpha))
    fam = np.array(fam)
    growth = float(fam[-1] / fam[0]) if fam[0] > 0 else INF
    increasing = bool(np.all(np.diff(fam) > 0))
    unbounded = increasing and growth > growth_factor
    if fam.max() > best:
        i = int(np.argmax(fam))
        e = _witness_family(measure, n, k, alpha, ts[i])
        best = float(fam.max())
        witness = {"source": "family", "scale": float(ts[i]), "center": e.center.tolist(),
                   "axes": e.axes.tolist(), "lengths": e.lengths.tolist()}
    witness["family_ratios"] = fam.tolist()
    return ProbeReport(measure.value, k, alpha, best, witness,
                       "unbounded" if unbounded else "bounded", growth)


# ------------------------------------------------------- determinant sups

def ellipsoid_det_sup(e: Ellipsoid, k: int, samples: int = 2000, seed: int = 0) -> tuple[float, float]:
    """Max of det(0, x_1..x_k) over points of a centred ellipsoid, and its ratio to |B|_k.

    Candidates are all k-subsets of the signed axis vertices plus random
    boundary points (the determinant is maximized on the boundary).
    """
    n = e.dim
    if not 1 <= k <= n <= 3:
        raise GridError("need 1 <= k <= n <= 3")
    if np.any(np.isinf(e.lengths)):
        raise GridError("infinite lengths are not allowed here")
    if not np.allclose(e.center, 0):
        raise GridError("ellipsoid must be centred at the origin")
    verts = np.concatenate([e.axes * e.lengths[:, None], -e.axes * e.lengths[:, None]])
    best = 0.0
    for combo in itertools.combinations(range(len(verts)), k):
        best = max(best, gram_det(np.vstack([verts[list(combo)], np.zeros(n)])))
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((samples, k, n))
    u /= np.linalg.norm(u, axis=2, keepdims=True)
    pts = (u * e.lengths) @ e.axes
    A = pts
    G = A @ np.swapaxes(A, 1, 2)
    dets = np.sqrt(np.clip(np.linalg.det(G), 0, None))
    best = max(best, float(dets.max(initial=0.0)))
    content = k_content(e, k)
    return best, best / content if content > 0 else INF


# ------------------------------------------------------ sublevel measures

@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    @property
    def measure(self) -> float:
        return ball_volume(len(self.center)) * self.radius ** len(self.center)

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        n = len(self.center)
        u = rng.standard_normal((m, n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        r = self.radius * rng.uniform(0, 1, m) ** (1 / n)
        return np.asarray(self.center) + u * r[:, None]


@dataclass(frozen=True)
class SublevelEstimate:
    value: float
    stderr: float
    fraction: float
    total: float


def sublevel_tuple_measure(sets, delta: float, samples: int = 10**6, seed: int = 0,
                           base=None, chunk: int = 1 << 18) -> SublevelEstimate:
    """Monte Carlo product measure of {(y_1, y_2) in E_1 x E_2 : det(y_1, y_2, base) < delta}.

    `base` is the apex of the simplex, the origin by default.
    """
    sets = list(sets)
    if len(sets) != 2 or any(len(b.center) != 2 for b in sets):
        raise GridError("only two balls in the plane are supported")
    if not delta > 0:
        raise GridError("delta must be positive")
    total = math.prod(b.measure for b in sets)
    if total == 0:
        raise GridError("sets must have positive measure")
    apex = np.zeros(2) if base is None else np.asarray(base, dtype=float)
    hits = 0
    done = 0
    i = 0
    while done < samples:
        m = min(chunk, samples - done)
        rng = np.random.default_rng([seed, i])
        u = sets[0].sample(rng, m) - apex
        v = sets[1].sample(rng, m) - apex
        det = np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
        hits += int(np.count_nonzero(det < delta))
        done += m
        i += 1
    frac = hits / samples
    se = math.sqrt(frac * (1 - frac) / samples)
    return SublevelEstimate(total * frac, total * se, frac, total)
