import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from supineq.curvature import (Ball, Ellipsoid, curvature_probe, ellipsoid_det_sup, k_content,
                               line_measure, random_rotation, sphere_measure,
                               sublevel_tuple_measure)
from supineq.gridfn import GridError

INF = math.inf


def test_k_content_examples():
    assert k_content(Ellipsoid.axis_aligned([1, 1, 1]), 2) == 1
    assert k_content(Ellipsoid.axis_aligned([1, 3, 2]), 2) == 6
    assert k_content(Ellipsoid.axis_aligned([INF, 0, 0]), 1) == INF
    # the zero is forced into the top two, so it wins over infinity
    assert k_content(Ellipsoid.axis_aligned([INF, 0]), 2) == 0
    with pytest.raises(GridError):
        k_content(Ellipsoid.axis_aligned([1, 1]), 3)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1e3), min_size=3, max_size=3), st.integers(0, 2),
       st.floats(1, 10), st.integers(1, 3))
def test_k_content_is_monotone(lengths, i, grow, k):
    a = Ellipsoid.axis_aligned(lengths)
    bigger = list(lengths)
    bigger[i] *= grow
    assert k_content(Ellipsoid.axis_aligned(bigger), k) >= k_content(a, k)


def test_ellipsoid_validation():
    with pytest.raises(GridError):
        Ellipsoid(np.zeros(2), [[1, 0], [1, 1]], [1, 1])
    with pytest.raises(GridError):
        Ellipsoid.axis_aligned([1, -1])
    e = Ellipsoid(np.zeros(2), random_rotation(np.random.default_rng(0), 2), [2, 0.5])
    np.testing.assert_allclose(e.axes @ e.axes.T, np.eye(2), atol=1e-10)


def test_line_measure_matches_chord_length():
    for a, b, y0 in [(2.0, 1.0, 0.0), (3.0, 0.5, 0.3), (1.0, 1.0, 0.99), (1.0, 1.0, 1.5)]:
        e = Ellipsoid.axis_aligned([a, b], center=[0.7, y0])
        want = 2 * a * math.sqrt(max(1 - y0 ** 2 / b ** 2, 0))
        assert line_measure(e) == pytest.approx(want, rel=1e-12, abs=1e-12)
    assert line_measure(Ellipsoid.axis_aligned([INF, 1.0])) == INF
    # a rotated ellipse: chord of x^2/a^2 + y^2/b^2 <= 1 along a direction at angle th
    th, a, b = 0.4, 2.0, 0.5
    R = np.array([[math.cos(th), math.sin(th)], [-math.sin(th), math.cos(th)]])
    e = Ellipsoid(np.zeros(2), R, [a, b])
    r = 1 / math.sqrt(math.cos(th) ** 2 / a ** 2 + math.sin(th) ** 2 / b ** 2)
    assert line_measure(e) == pytest.approx(2 * r, rel=1e-12)


@pytest.mark.parametrize("r", [0.05, 0.5, 1.2])
def test_sphere_measure_of_a_disc_on_the_circle(r):
    e = Ellipsoid.axis_aligned([r, r], center=[0.0, 1.0])
    got = sphere_measure(e, np.random.default_rng(1), samples=200_000)
    assert got == pytest.approx(4 * math.asin(r / 2), rel=1e-2)


def test_lebesgue_probe_k_equals_n():
    rep = curvature_probe("lebesgue", 2, 1.0, trials=1000)
    assert rep.verdict == "bounded"
    assert rep.max_ratio <= math.pi * (1 + 1e-9)
    # balls attain the bound
    assert rep.max_ratio == pytest.approx(math.pi, rel=1e-12)


def test_lebesgue_probe_k1_alpha2():
    rep = curvature_probe("lebesgue", 1, 2.0, trials=300)
    assert rep.verdict == "bounded" and rep.max_ratio <= math.pi * (1 + 1e-9)


def test_line_probe_k2_is_unbounded_with_witness():
    rep = curvature_probe("line", 2, 1.0, trials=300)
    assert rep.verdict == "unbounded"
    assert rep.witness["source"] == "family"
    lengths = rep.witness["lengths"]
    assert line_measure(Ellipsoid.axis_aligned(lengths)) / k_content(Ellipsoid.axis_aligned(lengths), 2) \
        == pytest.approx(rep.max_ratio)
    assert rep.growth > 1e5


def test_line_probe_k1_is_bounded():
    rep = curvature_probe("line", 1, 1.0, trials=300)
    assert rep.verdict == "bounded" and rep.max_ratio <= 2 * (1 + 1e-9)


def test_sphere_probe_k1_is_bounded():
    rep = curvature_probe("sphere", 1, 1.0, trials=100, samples=5000)
    assert rep.verdict == "bounded"
    assert rep.max_ratio < 2 * math.pi


def test_probe_is_reproducible_and_serializable():
    a = curvature_probe("lebesgue", 2, 1.0, trials=50, seed=3)
    b = curvature_probe("lebesgue", 2, 1.0, trials=50, seed=3)
    assert a.to_dict() == b.to_dict()
    assert set(a.to_dict()) == {"measure", "k", "alpha", "max_ratio", "witness", "verdict"}
    with pytest.raises(GridError):
        curvature_probe("lebesgue", 3, 1.0)
    with pytest.raises(ValueError):
        curvature_probe("cantor", 1, 1.0)


@pytest.mark.parametrize("aspect", [1, 10, 100, 1000])
def test_ellipse_det_sup_equals_area_content(aspect):
    rng = np.random.default_rng(aspect)
    a = 0.7
    e = Ellipsoid(np.zeros(2), random_rotation(rng, 2), [a * aspect, a])
    best, ratio = ellipsoid_det_sup(e, 2)
    # max of ab|sin(phi - theta)| over the boundary
    assert best == pytest.approx(a * a * aspect, rel=1e-6)
    assert ratio == pytest.approx(1.0, abs=1e-6)


def test_det_sup_examples():
    assert ellipsoid_det_sup(Ellipsoid.axis_aligned([1.0, 1.0]), 1)[0] == pytest.approx(1.0)
    e = Ellipsoid(np.zeros(3), random_rotation(np.random.default_rng(2), 3), [3.0, 2.0, 1.0])
    best, ratio = ellipsoid_det_sup(e, 2)
    assert best == pytest.approx(6.0) and ratio == pytest.approx(1.0)
    with pytest.raises(GridError):
        ellipsoid_det_sup(Ellipsoid.axis_aligned([INF, 1.0]), 1)
    with pytest.raises(GridError):
        ellipsoid_det_sup(Ellipsoid.axis_aligned([1.0, 1.0], center=[1, 0]), 1)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([1, 2]))
def test_det_sup_never_exceeds_content(seed, k):
    rng = np.random.default_rng(seed)
    lengths = np.exp(rng.uniform(-3, 3, 2))
    e = Ellipsoid(np.zeros(2), random_rotation(rng, 2), lengths)
    _, ratio = ellipsoid_det_sup(e, k, samples=500, seed=seed)
    assert ratio <= 1 + 1e-9


UNIT = [Ball((0.0, 0.0), 1.0), Ball((0.0, 0.0), 1.0)]


def test_sublevel_everything_below_a_large_delta():
    est = sublevel_tuple_measure(UNIT, 2.0, samples=10_000)
    assert est.fraction == 1.0 and est.value == pytest.approx(math.pi ** 2) and est.stderr == 0.0


def test_sublevel_monotone_in_delta():
    vals = [sublevel_tuple_measure(UNIT, d, samples=100_000, seed=4).value
            for d in (0.003, 0.01, 0.03, 0.1, 0.3, 1.0)]
    assert vals == sorted(vals)


def test_sublevel_small_delta_matches_strip_area():
    # for fixed u the set {v : |det(u, v)| < d} is a strip of width 2d/|u|, area about 4d/|u|;
    # integrating over the unit disc gives 8 pi d
    d = 0.003
    est = sublevel_tuple_measure(UNIT, d, samples=400_000, seed=5)
    assert est.value == pytest.approx(8 * math.pi * d, abs=4 * est.stderr + 0.03 * 8 * math.pi * d)


def test_sublevel_moves_with_its_base():
    v = (2.0, -1.0)
    shifted = [Ball(v, 1.0), Ball((v[0] + 0.5, v[1]), 0.7)]
    here = [Ball((0.0, 0.0), 1.0), Ball((0.5, 0.0), 0.7)]
    a = sublevel_tuple_measure(here, 0.05, samples=50_000, seed=9)
    b = sublevel_tuple_measure(shifted, 0.05, samples=50_000, seed=9, base=v)
    assert b.value == pytest.approx(a.value, rel=1e-2)


def test_sublevel_errors():
    with pytest.raises(GridError):
        sublevel_tuple_measure(UNIT, 0.0)
    with pytest.raises(GridError):
        sublevel_tuple_measure(UNIT[:1], 0.1)
    with pytest.raises(GridError):
        sublevel_tuple_measure([Ball((0.0, 0.0), 0.0)] * 2, 0.1)
