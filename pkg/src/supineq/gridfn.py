"""Nonnegative piecewise-constant functions on uniform grids over boxes."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

DEFAULT_GRIDS = {
    1: (((-50.0, 50.0),), (4096,)),
    2: (((-10.0, 10.0), (-10.0, 10.0)), (256, 256)),
}


class GridError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values are stored as an n-d array; JSON and `flat` use row-major order.

    `formula` optionally carries the continuous function the grid was sampled
    from, so oracles can integrate it independently of the grid.
    """

    box: tuple[tuple[float, float], ...]
    shape: tuple[int, ...]
    values: np.ndarray
    name: str | None = None
    formula: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        shape = tuple(int(m) for m in self.shape)
        if len(box) not in (1, 2) or len(box) != len(shape):
            raise GridError("dimension must be 1 or 2 and match shape")
        for lo, hi in box:
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise GridError(f"bad box side ({lo}, {hi})")
        if any(m < 1 for m in shape):
            raise GridError("shape entries must be positive")
        vals = np.array(self.values, dtype=float).reshape(shape)
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise GridError("values must be finite and nonnegative")
        vals.setflags(write=False)
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def widths(self) -> np.ndarray:
        return np.array([(hi - lo) / m for (lo, hi), m in zip(self.box, self.shape)])

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.widths))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def axis_centers(self, axis: int) -> np.ndarray:
        lo, hi = self.box[axis]
        m = self.shape[axis]
        return lo + (np.arange(m) + 0.5) * (hi - lo) / m

    def centers(self) -> np.ndarray:
        """Cell centers as an (M, n) array in row-major cell order."""
        axes = [self.axis_centers(a) for a in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.reshape(-1) for g in mesh], axis=1)

    def unravel(self, flat_index: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(flat_index, self.shape))

    def with_values(self, values, name: str | None = None, **meta) -> "GridFunction":
        return GridFunction(self.box, self.shape, values, name=name or self.name,
                            meta={**self.meta, **meta})

    def scaled(self, c: float) -> "GridFunction":
        return GridFunction(self.box, self.shape, c * self.values, name=self.name,
                            formula=None if self.formula is None else _scale(self.formula, c),
                            meta=dict(self.meta))

    def to_dict(self) -> dict:
        d = {
            "dim": self.dim,
            "box": [list(b) for b in self.box],
            "shape": list(self.shape),
            "values": [float(v) for v in self.flat],
        }
        if self.name is not None:
            d["name"] = self.name
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "GridFunction":
        try:
            dim = int(d["dim"])
            box = [tuple(b) for b in d["box"]]
            shape = [int(m) for m in d["shape"]]
            values = np.asarray(d["values"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise GridError(f"malformed grid function: {exc}") from exc
        if dim != len(box) or dim != len(shape):
            raise GridError("dim does not match box/shape")
        if values.size != int(np.prod(shape)):
            raise GridError("values length does not match shape")
        return cls(tuple(box), tuple(shape), values, name=d.get("name"))

    @classmethod
    def from_json(cls, text: str) -> "GridFunction":
        return cls.from_dict(json.loads(text))


def _scale(func, c):
    return lambda x: c * func(x)


def default_grid(n: int):
    if n not in DEFAULT_GRIDS:
        raise GridError(f"no default grid for n={n}")
    return DEFAULT_GRIDS[n]


def _outer_corners(gf_box, shape):
    """Corner of each cell farthest from the origin, as an (M, n) array."""
    cols = []
    for (lo, hi), m in zip(gf_box, shape):
        edges = np.linspace(lo, hi, m + 1)
        a, b = edges[:-1], edges[1:]
        cols.append(np.where(np.abs(a) > np.abs(b), a, b))
    mesh = np.meshgrid(*cols, indexing="ij")
    return np.stack([g.reshape(-1) for g in mesh], axis=1)


def from_function(func: Callable[[np.ndarray], np.ndarray], box, shape,
                  name: str | None = None, sample: str = "center", **meta) -> GridFunction:
    """Sample `func` (taking an (M, n) array of points) onto a grid.

    sample="center" evaluates at cell centers. sample="outer" evaluates at the
    cell corner farthest from the origin, which is the cell infimum for radially
    nonincreasing functions, so the grid function lies below `func`.
    """
    box = tuple(tuple(b) for b in box)
    shape = tuple(shape)
    probe = GridFunction(box, shape, np.zeros(shape))
    if sample == "center":
        pts = probe.centers()
    elif sample == "outer":
        pts = _outer_corners(box, shape)
    else:
        raise GridError(f"unknown sampling rule {sample!r}")
    vals = np.asarray(func(pts), dtype=float).reshape(shape)
    return GridFunction(box, shape, vals, name=name, formula=func,
                        meta={"sample": sample, **meta})


def indicator_box(box, shape, region, name: str | None = None) -> GridFunction:
    """Indicator of the closed axis-parallel box `region`, sampled at centers."""
    region = np.asarray(region, dtype=float)

    def chi(x):
        inside = np.all((x >= region[:, 0]) & (x <= region[:, 1]), axis=1)
        return inside.astype(float)

    return from_function(chi, box, shape, name=name)


def evaluate(f: GridFunction, points: np.ndarray) -> np.ndarray:
    """Piecewise-constant lookup at arbitrary points; zero outside the box."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    idx = []
    inside = np.ones(len(pts), dtype=bool)
    for a, ((lo, hi), m) in enumerate(zip(f.box, f.shape)):
        x = pts[:, a]
        ok = np.isfinite(x) & (x >= lo) & (x <= hi)
        i = np.floor((np.where(ok, x, lo) - lo) / (hi - lo) * m).astype(np.int64)
        idx.append(np.clip(i, 0, m - 1))
        inside &= ok
    out = f.values[tuple(idx)]
    return np.where(inside, out, 0.0)


def _check_p(p: float) -> float:
    p = float(p)
    if not math.isfinite(p) or p <= 0:
        raise GridError(f"exponent must be finite and positive, got {p}")
    return p


def lp_norm(f: GridFunction, p: float) -> float:
    p = _check_p(p)
    v = f.flat
    m = v.max(initial=0.0)
    if m == 0:
        return 0.0
    # factor out the max so large p does not overflow
    return float(m * (f.cell_volume * np.sum((v / m) ** p)) ** (1 / p))


def linf_norm(f: GridFunction) -> float:
    return float(f.flat.max(initial=0.0))


def distribution_function(f: GridFunction, lam: float) -> float:
    """Measure of {f > lam}."""
    return f.cell_volume * int(np.count_nonzero(f.flat > lam))


def weak_lp_quasinorm(f: GridFunction, p: float) -> float:
    """sup over beta of beta * |{f >= beta}|^(1/p), evaluated at the jumps."""
    p = _check_p(p)
    v = np.sort(f.flat[f.flat > 0])[::-1]
    if v.size == 0:
        return 0.0
    # for each distinct value, count cells with value >= it
    distinct, first = np.unique(-v, return_index=True)
    counts = np.r_[first[1:], v.size]
    return float(np.max(-distinct * (f.cell_volume * counts) ** (1 / p)))


@dataclass(frozen=True)
class DistributionSample:
    level: float
    measure: float


def distribution_samples(f: GridFunction) -> list[DistributionSample]:
    """m_f just below each distinct positive level and at every level, ascending."""
    levels = np.unique(np.r_[0.0, f.flat])
    return [DistributionSample(float(l), distribution_function(f, l)) for l in levels]


def interpolation_bound(f: GridFunction, p: float, m: float) -> float:
    """Right side of the weak-type interpolation estimate for the Lp norm, 0 < m < p."""
    if not 0 < m < p:
        raise GridError("need 0 < m < p")
    return ((p / (p - m)) ** (1 / p) * weak_lp_quasinorm(f, m) ** (m / p)
            * linf_norm(f) ** (1 - m / p))


def same_grid(f: GridFunction, g: GridFunction) -> bool:
    return f.box == g.box and f.shape == g.shape


def grid_like(box: Sequence, shape: Sequence) -> GridFunction:
    return GridFunction(tuple(box), tuple(shape), np.zeros(tuple(shape)))
