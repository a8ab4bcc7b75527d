import math

import numpy as np
import pytest

from ctrkit.errors import DomainError, FitError
from ctrkit.shape import (CenterlineSamples, CircularArc, PlanarShape,
                          arc_length, arc_length_quad, curvature,
                          fit_centerline, solve_x_min)


def circle_samples(radius, x_max, step=0.25):
    xs = np.linspace(0.0, x_max, int(round(x_max / step)) + 1)
    ys = np.sqrt(radius * radius - xs * xs) - radius
    return CenterlineSamples(np.column_stack([xs, ys]))


# ---------------------------------------------------------------- fitting
def test_fit_straight_line_gives_zero_coefficients():
    xs = np.linspace(0.0, 29.0, 40)
    samples = CenterlineSamples(np.column_stack([xs, np.zeros_like(xs)]))
    shape = fit_centerline(samples, degree=4)
    assert np.abs(shape.coefficients).max() < 1e-12
    assert shape.arc_total == pytest.approx(shape.x_max_total, abs=1e-9)


def test_fit_recovers_exact_quartic():
    coeffs = np.array([0.3, -0.02, 4e-3, -6e-4, 1.2e-5])
    xs = np.linspace(0.0, 25.0, 5)   # 5 exact samples pin a quartic
    ys = np.polynomial.polynomial.polyval(xs, coeffs)
    shape = fit_centerline(CenterlineSamples(np.column_stack([xs, ys])), 4)
    assert np.abs(shape.coefficients - coeffs).max() < 1e-9


def test_fit_circle_average_curvature_within_1pct():
    # an arc of 29 mm on a 33.4 mm circle; a quartic cannot hold the
    # pointwise curvature, but the arc-averaged curvature comes out right
    radius, arc = 33.4, 29.0
    x_max = radius * math.sin(arc / radius)
    shape = fit_centerline(circle_samples(radius, x_max), degree=4)
    kappas, dss = shape.segment_grid(0.0, shape.x_max_total, 400)
    mean_kappa = np.dot(kappas, dss) / dss.sum()
    assert mean_kappa == pytest.approx(1.0 / radius, rel=0.01)


def test_fit_circle_pointwise_curvature_needs_higher_degree():
    radius, arc = 33.4, 29.0
    x_max = radius * math.sin(arc / radius)
    shape = fit_centerline(circle_samples(radius, x_max), degree=10)
    xs = np.linspace(0.0, x_max, 400)
    rel = np.abs(shape.curvature(xs) * radius - 1.0)
    assert rel.max() < 0.01


def test_fit_errors():
    with pytest.raises(FitError):
        fit_centerline(CenterlineSamples([[0, 0], [1, 0], [2, 0]]), degree=4)
    with pytest.raises(FitError):
        CenterlineSamples([[0, 0], [0, 1], [1, 0]])   # x not increasing
    with pytest.raises(FitError):
        fit_centerline(CenterlineSamples([[0, 0], [1, 0], [2, 0]]), degree=1)


# -------------------------------------------------------------- curvature
def test_curvature_straight_is_zero():
    shape = PlanarShape([0.0, 0.0, 0.0], 29.0)
    assert curvature(shape, 10.0) == 0.0


def test_curvature_circle_sign_and_value():
    arc = CircularArc(20.0, 25.0)
    assert curvature(arc, 5.0) == pytest.approx(0.05, abs=1e-15)


def test_curvature_parabola_at_origin():
    shape = PlanarShape([0.0, 0.0, 0.001], 29.0)    # f = 0.001 x^2
    assert curvature(shape, 0.0) == pytest.approx(-0.002, abs=1e-15)


def test_curvature_domain_error():
    shape = PlanarShape([0.0, 0.0, 0.001], 29.0)
    with pytest.raises(DomainError):
        curvature(shape, 30.0)
    with pytest.raises(DomainError):
        curvature(shape, -1.0)


# -------------------------------------------------------------- arc length
def test_arc_length_straight():
    shape = PlanarShape([0.0, 0.0, 0.0], 29.0)
    assert arc_length(shape, 3.0, 10.0) == pytest.approx(7.0, abs=1e-12)


def test_arc_length_quarter_circle():
    arc = CircularArc(20.0, 20.0 * math.pi / 2 * 0.999)
    # nearly the full quarter: analytic arc length
    x = 20.0 * math.sin(math.pi / 2 * 0.999)
    assert arc.arc_length(0.0, x) == pytest.approx(20.0 * math.pi / 2 * 0.999,
                                                   rel=1e-12)


def test_arc_length_additivity(demo_shape):
    full = arc_length(demo_shape, 0.0, demo_shape.x_max_total)
    xs = np.linspace(0.0, demo_shape.x_max_total, 101)
    parts = sum(arc_length(demo_shape, float(a), float(b))
                for a, b in zip(xs[:-1], xs[1:]))
    assert abs(full - parts) < 1e-8


def test_arc_length_matches_adaptive_quadrature(demo_shape):
    rng = np.random.default_rng(7)
    for _ in range(20):
        a, b = np.sort(rng.uniform(0.0, demo_shape.x_max_total, 2))
        assert arc_length(demo_shape, a, b) == pytest.approx(
            arc_length_quad(demo_shape, a, b), abs=1e-10)


def test_arc_length_reversed_bounds(demo_shape):
    with pytest.raises(DomainError):
        arc_length(demo_shape, 10.0, 3.0)


def test_arc_length_at_least_chord(demo_shape):
    rng = np.random.default_rng(3)
    for _ in range(50):
        a, b = np.sort(rng.uniform(0.0, demo_shape.x_max_total, 2))
        assert arc_length(demo_shape, a, b) >= (b - a) - 1e-12


# -------------------------------------------------------------- solve_x_min
def test_solve_x_min_boundaries(demo_shape):
    assert solve_x_min(demo_shape, 0.0) == demo_shape.x_max_total
    assert solve_x_min(demo_shape, demo_shape.arc_total) == 0.0


def test_solve_x_min_straight_tube():
    shape = PlanarShape([0.0, 0.0, 0.0], 29.0)
    assert solve_x_min(shape, 10.0) == pytest.approx(19.0, abs=1e-9)


def test_solve_x_min_roundtrip(demo_shape):
    rng = np.random.default_rng(11)
    for s in rng.uniform(0.0, demo_shape.arc_total, 100):
        x = solve_x_min(demo_shape, float(s))
        resid = abs(arc_length(demo_shape, x, demo_shape.x_max_total) - s)
        assert resid < 1e-8


def test_solve_x_min_out_of_range(demo_shape):
    with pytest.raises(DomainError):
        solve_x_min(demo_shape, demo_shape.arc_total + 1.0)


# ------------------------------------------------------------------- I/O
def test_samples_csv_roundtrip(tmp_path):
    samples = circle_samples(33.4, 25.0, step=1.0)
    path = tmp_path / "centerline.csv"
    samples.to_csv(path)
    back = CenterlineSamples.from_csv(path)
    assert np.allclose(back.points, samples.points)


def test_samples_csv_requires_header(tmp_path):
    path = tmp_path / "noheader.csv"
    path.write_text("0.0,0.0\n1.0,0.1\n2.0,0.3\n")
    with pytest.raises(FitError):
        CenterlineSamples.from_csv(path)


def test_shape_json_roundtrip(tmp_path, demo_shape):
    path = tmp_path / "shape.json"
    demo_shape.to_json(path)
    back = PlanarShape.from_json(path)
    assert np.array_equal(back.coefficients, demo_shape.coefficients)
    assert back.x_max_total == demo_shape.x_max_total
    assert back.arc_total == pytest.approx(demo_shape.arc_total, abs=1e-12)


def test_shape_invariants():
    with pytest.raises(DomainError):
        PlanarShape([0.0, 1.0], 10.0)     # degree < 2
    with pytest.raises(DomainError):
        PlanarShape([0.0, 0.0, 0.01], -5.0)
