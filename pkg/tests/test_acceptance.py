"""Acceptance checks, one per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` or `python tests/test_acceptance.py`.
"""

import contextlib
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import example_fn  # noqa: E402

from supineq import cases, conformal, curvature  # noqa: E402
from supineq.cli import main as cli_main  # noqa: E402
from supineq.gridfn import GridFunction, default_grid, from_function, lp_norm  # noqa: E402
from supineq.rearrange import IntervalUnion, sumset_linear_sup, symmetric_rearrange  # noqa: E402
from supineq.supfunc import (ExponentSpec, Family, bilinear_sup, gram_det,  # noqa: E402
                             hadamard_check)
from supineq.symmetrize import bilinear_iterate, ratio  # noqa: E402


def check_1():
    box, shape = default_grid(1)
    t0 = time.perf_counter()
    h = cases.extremizer("bilinear-rn", 2, 1, box, shape)
    r = ratio([h, h], ExponentSpec(Family.BILINEAR, 1, (2.0, 2.0), 1.0))
    dt = time.perf_counter() - t0
    ok = 0.98 * math.pi <= r <= 1.02 * math.pi and dt < 10
    return ok, f"ratio = {r:.6f} = {r / math.pi:.5f} pi, {dt:.2f} s"


def check_2():
    worst = 0.0
    for p in (1, 2, 4):
        m = cases.sharp_constant("multilinear-rn", p, 1).value
        b = cases.sharp_constant("bilinear-rn", p, 1).value
        ref = math.pi ** (2 / p)
        worst = max(worst, abs(m - b) / ref, abs(m - ref) / ref, abs(b - ref) / ref)
    return worst <= 4 * np.finfo(float).eps, f"max relative gap {worst:.2e} over p in (1, 2, 4)"


def check_3():
    box, shape = default_grid(1)
    f = from_function(lambda x: ((x[:, 0] >= 1) & (x[:, 0] <= 3)).astype(float), box, shape)
    res = bilinear_iterate(f, 2.0, max_iter=50, tol=1e-2)
    n0 = res.trace[0].norm
    norm_dev = max(abs(t.norm - n0) / n0 for t in res.trace)
    sups = [t.sup for t in res.trace]
    rises = max(b - a for a, b in zip(sups, sups[1:]))
    ok = res.converged and norm_dev <= 1e-3 and rises <= 1e-6
    dists = [t.dist for t in res.trace]
    return ok, (f"converged={res.converged} (final dist {dists[-1]:.4f}, min {min(dists):.4f}), "
                f"norm drift {norm_dev:.1e}, largest sup rise {rises:.2e}")


def check_4():
    rng = np.random.default_rng(4)
    violations, worst = 0, -math.inf
    for trial in range(1000):
        dim = 1 if trial % 4 else 2
        side = int(rng.integers(3, 25 if dim == 1 else 7))
        box = ((-2.0, 2.0),) * dim
        shape = (side,) * dim
        fv = rng.random(shape) * (rng.random(shape) < 0.6)
        gv = rng.random(shape) * (rng.random(shape) < 0.6)
        f, g = GridFunction(box, shape, fv), GridFunction(box, shape, gv)
        fs, gs = symmetric_rearrange(f), symmetric_rearrange(g)
        for gamma in (0.5, 1.0, 2.0):
            before = bilinear_sup(f, g, gamma, "upper").upper
            after = bilinear_sup(fs, gs, gamma, "upper").upper
            worst = max(worst, after - before)
            if after > before * (1 + 1e-12):
                violations += 1
    return violations == 0, f"{violations} violations in 3000 comparisons (max after-before {worst:.2e})"


def check_5():
    f = example_fn()
    a = bilinear_sup(f, f, 1.0, "upper").upper
    fs = symmetric_rearrange(f)
    b = bilinear_sup(fs, fs, 1.0, "upper").upper
    return a == 32.0 and b == 32.0, f"sup(f) = {a!r}, sup(f*) = {b!r}"


def check_6():
    rec = cases.endpoint_counterexample_bilinear(N=(10, 100, 1000), p=2)
    ok = rec.sup_max <= 1 + 1e-9 and rec.slope_error <= 0.05
    return ok, f"max sup {rec.sup_max!r}, slope {rec.fitted_slope:.4f} vs 2 ({rec.slope_error:.2%})"


def _bump(x):
    r2 = np.sum((x - 0.2) ** 2, axis=1)
    return np.where(r2 < 1, np.exp(-1 / np.maximum(1 - r2, 1e-300)), 0.0)


def check_7():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(10_000, 2)) * 2
    y = rng.normal(size=(10_000, 2)) * 2
    d = np.linalg.norm(x - y, axis=1)
    chordal = np.max(conformal.chordal_identity_check(x, y) / d)
    keep = (np.abs(np.sum(x * x, 1) - 1) > 1e-2) & (np.abs(np.sum(y * y, 1) - 1) > 1e-2)
    lorentz = np.max(conformal.hyperbolic_distance_identity(x[keep], y[keep]) / d[keep])
    det_res = 0.0
    for pts in rng.normal(size=(10_000, 3, 2)):
        w = np.prod(np.sqrt(1 + np.sum(pts * pts, axis=1)))
        flat = gram_det(pts)
        det_res = max(det_res, abs(conformal.det_matrix(conformal.stereo_hemisphere(pts)) * w - flat)
                      / max(flat, 1e-300))
    ident_ok = chordal < 1e-10 and lorentz < 1e-10 and det_res < 1e-10

    # lifts: norms by quadrature on the circle, sups by pairs in both charts
    p = 2.0
    th = np.linspace(-math.pi, math.pi, 400_001)[:-1] + math.pi / 400_000
    s = np.column_stack([np.sin(th), np.cos(th)])
    xs = conformal.stereo_sphere_inverse(s)
    F = conformal.sphere_jacobian(s) ** (1 / p) * _bump(xs)
    sphere_norm = (np.sum(F ** p) * (2 * math.pi / th.size)) ** (1 / p)
    u = np.linspace(-5, 5, 400_001)
    flat_norm = (np.sum(_bump(u[:, None]) ** p) * (u[1] - u[0])) ** (1 / p)
    norm_err = abs(sphere_norm - flat_norm) / flat_norm

    g = from_function(_bump, ((-1.5, 1.5),), (1500,))
    L = conformal.lift_to_sphere(g, p)
    on = g.flat > 0
    V, P = L.values[on], L.points[on]
    lift_sup = max(np.max(V[i] * V * np.linalg.norm(P[i] - P, axis=1)) for i in range(V.size))
    flat_sup = bilinear_sup(g, g, 2 / p, "center").center
    sup_err = abs(lift_sup - flat_sup) / flat_sup
    ok = ident_ok and norm_err < 1e-3 and sup_err < 1e-3
    return ok, (f"chordal {chordal:.1e}, Lorentz {lorentz:.1e}, det {det_res:.1e}; "
                f"lift norm {norm_err:.1e}, lift sup {sup_err:.1e}")


def check_8():
    rng = np.random.default_rng(8)
    pts = rng.normal(size=(100_000, 3, 2))
    bad = sum(not hadamard_check(t) for t in pts)
    u, v = pts[:, 0] - pts[:, 2], pts[:, 1] - pts[:, 2]
    cross = np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
    g = np.array([gram_det(t) for t in pts])
    rel = np.max(np.abs(g - cross) / cross)
    return bad == 0 and rel <= 1e-10, f"{bad} Hadamard violations, gram vs cross max rel {rel:.1e}"


def check_9():
    rng = np.random.default_rng(9)
    violations = 0
    for _ in range(1000):
        sets = []
        for _ in range(int(rng.integers(1, 5))):
            k = int(rng.integers(1, 4))
            a = rng.uniform(-10, 10, k)
            sets.append(IntervalUnion(tuple(zip(a, a + rng.uniform(0.01, 5, k)))))
        coeffs = rng.uniform(-3, 3, len(sets))
        s = sumset_linear_sup(sets, coeffs)
        star = sumset_linear_sup([A.rearranged() for A in sets], coeffs)
        violations += star > s * (1 + 1e-12) + 1e-12
    return violations == 0, f"{violations} violations in 1000 families"


def check_10():
    leb = curvature.curvature_probe("lebesgue", 2, 1.0, trials=1000)
    line = curvature.curvature_probe("line", 2, 1.0, trials=1000)
    worst = 0.0
    rng = np.random.default_rng(10)
    for aspect in (1, 3, 10, 30, 100, 300, 1000):
        e = curvature.Ellipsoid(np.zeros(2), curvature.random_rotation(rng, 2), [aspect, 1.0])
        worst = max(worst, abs(curvature.ellipsoid_det_sup(e, 2)[1] - 1))
    ok = (leb.max_ratio <= math.pi * (1 + 1e-9) and line.verdict == "unbounded"
          and bool(line.witness) and worst <= 1e-6)
    return ok, (f"Lebesgue max {leb.max_ratio / math.pi:.12f} pi; line {line.verdict} "
                f"(growth {line.growth:.1e}); ellipse |ratio-1| <= {worst:.1e}")


def check_11():
    balls = [curvature.Ball((0.0, 0.0), 1.0)] * 2
    rows = []
    for d in (0.1, 0.03, 0.01, 0.003):
        est = curvature.sublevel_tuple_measure(balls, d, samples=10**6, seed=11)
        rows.append((d, est.value / d, est.stderr / d))
    vals = [r[1] for r in rows]
    spread = max(vals) / min(vals)
    text = ", ".join(f"d={d}: {v:.2f}+-{e:.2f}" for d, v, e in rows)
    return spread <= 2, f"measure/delta {text}; spread {spread:.3f}"


def check_12():
    det = cases.boundary_counterexample_det()
    prod = cases.product_counterexample()
    ok = all(r.sup_max <= r.sup_bound * (1 + 1e-9) and r.slope_error <= 0.05 for r in (det, prod))
    return ok, (f"det: sup {det.sup_max:.5f} <= {det.sup_bound}, slope err {det.slope_error:.2%}; "
                f"product: sup {prod.sup_max:.5f} <= {prod.sup_bound}, slope err {prod.slope_error:.2%}")


def check_13(tmp: Path | None = None):
    import tempfile
    tmp = Path(tempfile.mkdtemp()) if tmp is None else tmp
    box, shape = default_grid(1)
    h = cases.extremizer("bilinear-rn", 2, 1)
    f = from_function(lambda x: ((x[:, 0] >= 1) & (x[:, 0] <= 3)).astype(float), box, shape)
    sq = from_function(lambda x: np.exp(-np.sum(x * x, axis=1)), ((-2, 2), (-2, 2)), (12, 12))
    for name, fn in (("h", h), ("f", f), ("sq", sq)):
        (tmp / f"{name}.json").write_text(fn.to_json())
    runs = [
        ["verify", "bilinear", "--f", str(tmp / "f.json"), "--g", str(tmp / "h.json"), "--mode", "upper"],
        ["verify", "bilinear", "--f", str(tmp / "h.json"), "--mode", "lower"],
        ["verify", "det", "--fs"] + [str(tmp / "sq.json")] * 3 + ["--p", "3", "--mode", "center"],
        ["verify", "product", "--fs"] + [str(tmp / "f.json")] * 3
        + ["--p-list", "1", "1", "1", "--r", "[[0,1,1],[1,0,1],[1,1,0]]"],
    ]
    same = 0
    for argv in runs:
        outs = []
        for t in ("1", "8"):
            buf = io.StringIO()
            with contextlib.redirect_stdout(buf):
                cli_main(argv + ["--threads", t])
            outs.append(buf.getvalue().encode())
        same += outs[0] == outs[1] and len(outs[0]) > 0
    return same == len(runs), f"{same}/{len(runs)} verify reports byte-identical at 1 and 8 threads"


CHECKS = {
    1: ("sharp bilinear constant n=1 p=2", check_1),
    2: ("n=1 cross-family identity", check_2),
    3: ("competing-symmetries convergence", check_3),
    4: ("rearrangement monotonicity", check_4),
    5: ("equality example sups = 32", check_5),
    6: ("endpoint divergence", check_6),
    7: ("conformal invariance", check_7),
    8: ("Hadamard inequality", check_8),
    9: ("sumset sup under rearrangement", check_9),
    10: ("curvature probes", check_10),
    11: ("sublevel scaling", check_11),
    12: ("boundary counterexamples", check_12),
    13: ("determinism across thread counts", check_13),
}


def line(k: int, ok: bool, detail: str) -> str:
    return f"{'PASS' if ok else 'FAIL'} [{k:2d}] {CHECKS[k][0]}: {detail}"


@pytest.mark.parametrize("k", sorted(CHECKS))
def test_criterion(k, capsys):
    ok, detail = CHECKS[k][1]()
    with capsys.disabled():
        print("\n" + line(k, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for k in sorted(CHECKS):
        ok, detail = CHECKS[k][1]()
        failed += not ok
        print(line(k, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
