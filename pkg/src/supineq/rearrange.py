"""Symmetric decreasing rearrangement, Steiner symmetrization, sumset sups."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .gridfn import GridError, GridFunction


def _radial_order(shape: Sequence[int], widths: Sequence[float]) -> np.ndarray:
    """Flat cell indices of a centered grid sorted by distance from the origin.

    Ties go to the lexicographically smaller index. Offsets are built from odd
    integers so mirror-image cells get bit-identical distances.
    """
    sq = np.zeros(tuple(shape))
    for a, (m, w) in enumerate(zip(shape, widths)):
        k = (2 * np.arange(m) + 1 - m).astype(float) * (w / 2)
        s = [1] * len(shape)
        s[a] = m
        sq = sq + (k * k).reshape(s)
    flat = sq.reshape(-1)
    return np.lexsort((np.arange(flat.size), flat))


def _centered_box(shape, widths):
    return tuple((-m * w / 2, m * w / 2) for m, w in zip(shape, widths))


def symmetric_rearrange(f: GridFunction, refine: int = 1) -> GridFunction:
    """Grid-level f*: the largest values go to the cells nearest the origin.

    The output keeps cell volume and count on a box centred at 0. With
    refine=r > 1 (1-D only) every cell is split into r equal parts; r=2 makes
    the result the exact rearrangement of f, since centred intervals of any
    whole number of original cells are then representable.
    """
    if refine != 1:
        if f.dim != 1:
            raise GridError("refinement is only supported in one dimension")
        return steiner_symmetrize(f, 1, refine=refine)
    widths = f.widths
    order = _radial_order(f.shape, widths)
    vals = np.empty(f.size)
    vals[order] = np.sort(f.flat, kind="stable")[::-1]
    return GridFunction(_centered_box(f.shape, widths), f.shape, vals,
                        name=f.name and f"{f.name}*", meta={"rearranged": True})


def steiner_symmetrize(f: GridFunction, axis: int, refine: int = 1) -> GridFunction:
    """Rearrange every 1-D slice along `axis` (1-based) symmetrically."""
    if not 1 <= axis <= f.dim:
        raise GridError(f"axis {axis} out of range for dimension {f.dim}")
    if refine < 1:
        raise GridError("refine must be a positive integer")
    a = axis - 1
    m = f.shape[a] * refine
    w = f.widths[a] / refine
    slices = np.moveaxis(np.asarray(f.values), a, -1)
    if refine > 1:
        slices = np.repeat(slices, refine, axis=-1)
    order = _radial_order((m,), (w,))
    out = np.empty_like(slices)
    out[..., order] = -np.sort(-slices, axis=-1, kind="stable")
    vals = np.moveaxis(out, -1, a)
    shape = list(f.shape)
    shape[a] = m
    box = list(f.box)
    box[a] = (-m * w / 2, m * w / 2)
    return GridFunction(tuple(box), tuple(shape), vals, name=f.name,
                        meta={"steiner_axis": axis})


def steiner_sweep(f: GridFunction, axes: Sequence[int]) -> GridFunction:
    """Apply R_j for j in `axes`, left to right."""
    for j in axes:
        f = steiner_symmetrize(f, j)
    return f


def decreasing_profile(f: GridFunction, t: float) -> float:
    """f_*(t) = inf{lam > 0 : m_f(lam) <= t}."""
    if t < 0:
        raise GridError("t must be nonnegative")
    v = np.sort(f.flat[f.flat > 0])[::-1]
    i = int(np.floor(t / f.cell_volume))
    return float(v[i]) if i < v.size else 0.0


def is_radially_nonincreasing(f: GridFunction) -> bool:
    order = _radial_order(f.shape, f.widths)
    v = f.flat[order]
    return bool(np.all(np.diff(v) <= 0))


@dataclass(frozen=True)
class IntervalUnion:
    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ivs = sorted((float(a), float(b)) for a, b in self.intervals)
        for a, b in ivs:
            if not a < b:
                raise GridError(f"degenerate interval [{a}, {b}]")
        merged: list[list[float]] = []
        for a, b in ivs:
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        object.__setattr__(self, "intervals", tuple((a, b) for a, b in merged))

    @property
    def measure(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    def endpoints(self) -> np.ndarray:
        return np.array(self.intervals, dtype=float).reshape(-1)

    def rearranged(self) -> "IntervalUnion":
        h = self.measure / 2
        return IntervalUnion(((-h, h),))

    def to_json(self) -> str:
        return json.dumps({"intervals": [list(iv) for iv in self.intervals]})

    @classmethod
    def from_json(cls, text: str) -> "IntervalUnion":
        return cls(tuple(tuple(iv) for iv in json.loads(text)["intervals"]))


def sumset_linear_sup(sets: Sequence[IntervalUnion], coeffs: Sequence[float]) -> float:
    """Exact sup of |sum a_j x_j| over x_j in A_j.

    The linear form is separable, so its max and min over the product are
    sums of per-set extremes, each attained at an endpoint.
    """
    if len(sets) == 0:
        raise GridError("need at least one set")
    if len(sets) != len(coeffs):
        raise GridError("one coefficient per set")
    hi = lo = 0.0
    for A, a in zip(sets, coeffs):
        e = a * A.endpoints()
        hi += e.max()
        lo += e.min()
    return float(max(hi, -lo))
