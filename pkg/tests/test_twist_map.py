import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from braidflow.generating_function import GeneratorShape, g_eval
from braidflow.twist_map import (
    Annulus,
    AnnulusError,
    MapPoint,
    SolverError,
    forward_xy,
    half_twist_map,
    half_twist_xy,
    jacobian_det_xy,
    map_backward,
    map_forward,
    map_iterate,
    region_of,
    solve_backward,
    solve_forward,
    solve_monotone,
)

EPS = 0.6 / 9
SHAPE = GeneratorShape(16, EPS, 1 / 6)
ANN = Annulus(-3.0, 3.0)


def test_annulus_validation():
    with pytest.raises(ValueError):
        Annulus(0.1, 0.5)
    assert Annulus().contains(0.5) and not Annulus().contains(0.6)


def test_rotation_zone_example():
    sh = GeneratorShape(8, 0.05)
    z = map_forward(sh, Annulus(), MapPoint(0.02, 0.0))
    assert z.x_lift == pytest.approx(0.019615706, abs=1e-9)
    assert z.y == pytest.approx(-0.003901806, abs=1e-9)


def test_shear_zone_example():
    z = map_forward(SHAPE, ANN, MapPoint(0.7, 0.1))
    assert z.x_lift == pytest.approx(0.7 + 0.1 * SHAPE.sin_theta, abs=1e-15)
    assert z.y == 0.1


def test_regions():
    assert region_of(SHAPE, 1 / 6, 1 / 6) == "rotation"
    assert region_of(SHAPE, 0.7, 0.7) == "shear"
    r = math.sqrt(1.5 * EPS / 2)
    assert region_of(SHAPE, 1 / 6 + r, 1 / 6 + r) == "blend"


def test_outside_annulus():
    with pytest.raises(AnnulusError):
        map_forward(SHAPE, Annulus(), MapPoint(0.0, 0.9))


@settings(max_examples=60, deadline=None)
@given(st.floats(-1.0, 2.0), st.floats(-0.4, 0.4))
def test_generating_equations_hold(x, y):
    X, Y = forward_xy(SHAPE, x, y)
    p = g_eval(SHAPE, x - SHAPE.center, X - SHAPE.center)
    assert -p.g_x == pytest.approx(y, abs=1e-11)
    assert p.g_X == pytest.approx(float(Y), abs=1e-11)


@settings(max_examples=60, deadline=None)
@given(st.floats(-1.0, 2.0), st.floats(-0.4, 0.4))
def test_inverse(x, y):
    X, Y = forward_xy(SHAPE, x, y)
    xb, yb = forward_xy(SHAPE, X, Y, inverse=True)
    assert xb == pytest.approx(x, abs=1e-11)
    assert yb == pytest.approx(y, abs=1e-11)


def test_lift_equivariance():
    x = np.linspace(0, 1, 40)
    y = np.linspace(-0.3, 0.3, 40)
    X0, Y0 = forward_xy(SHAPE, x, y)
    X1, Y1 = forward_xy(SHAPE, x + 1, y)
    assert np.allclose(X1 - X0, 1.0, atol=1e-12) and np.allclose(Y1, Y0, atol=1e-12)


def test_fast_paths_match_solver():
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 1, 300)
    y = rng.uniform(-0.4, 0.4, 300)
    Xf, Yf = forward_xy(SHAPE, x, y)
    Xs, Ys = solve_forward(SHAPE, x, y)
    assert np.max(np.abs(Xf - Xs)) < 1e-12 and np.max(np.abs(Yf - Ys)) < 1e-12
    xb, yb = solve_backward(SHAPE, Xf, Yf)
    assert np.max(np.abs(xb - x)) < 1e-12


def test_negative_rotation_undoes_positive_in_disc():
    neg = GeneratorShape(16, EPS, 1 / 6, sign=-1)
    x = np.array([1 / 6 + 0.05, 1 / 6 - 0.02])
    y = np.array([0.0, 0.03])
    xb, yb = forward_xy(neg, *forward_xy(SHAPE, x, y))
    assert np.allclose(xb, x, atol=1e-12) and np.allclose(yb, y, atol=1e-12)


def test_area_preserving():
    rng = np.random.default_rng(2)
    x = rng.uniform(0, 1, 200)
    y = rng.uniform(-0.4, 0.4, 200)
    det = jacobian_det_xy(lambda a, b: forward_xy(SHAPE, a, b), ANN, x, y)
    assert np.max(np.abs(det - 1)) < 1e-6


def test_twist_condition_q16():
    rng = np.random.default_rng(3)
    x = rng.uniform(0, 1, 500)
    y = rng.uniform(-0.4, 0.4, 500)
    h = 1e-6
    dX = (forward_xy(SHAPE, x, y + h)[0] - forward_xy(SHAPE, x, y - h)[0]) / (2 * h)
    assert np.all(dX > 0)


def test_half_twist_swaps():
    c, d = 1 / 6, 1 / 6
    a = half_twist_map(SHAPE, ANN, MapPoint(c - d, 0.0))
    b = half_twist_map(SHAPE, ANN, MapPoint(c + d, 0.0))
    assert a.x_lift == pytest.approx(c + d, abs=1e-9) and abs(a.y) < 1e-9
    assert b.x_lift == pytest.approx(c - d, abs=1e-9) and abs(b.y) < 1e-9
    spect = half_twist_map(SHAPE, ANN, MapPoint(2 / 3, 0.0))
    assert spect.x_lift == 2 / 3 and spect.y == 0.0


def test_half_twist_inverse():
    x, y = half_twist_xy(SHAPE, np.array([0.1, 0.3]), np.array([0.05, -0.02]))
    xb, yb = half_twist_xy(SHAPE, x, y, inverse=True)
    assert np.allclose(xb, [0.1, 0.3], atol=1e-10) and np.allclose(yb, [0.05, -0.02], atol=1e-10)


def test_iterate_and_backward():
    orbit = map_iterate(SHAPE, ANN, MapPoint(0.2, 0.1), 5)
    assert len(orbit) == 6
    back = map_backward(SHAPE, ANN, orbit[1])
    assert back.x_lift == pytest.approx(0.2, abs=1e-12)
    with pytest.raises(ValueError):
        map_iterate(SHAPE, ANN, MapPoint(0.2, 0.1), -1)


def test_solver_reports_failure():
    def func(w, idx):
        return np.full(idx.shape, np.nan), np.ones(idx.shape)
    with pytest.raises(SolverError):
        solve_monotone(func, np.zeros(2), -np.ones(2), np.ones(2), maxiter=5)


def test_solver_bisection_fallback():
    # cubic with tiny derivative near the root: Newton steps leave the bracket
    def func(w, idx):
        return w**3 - 0.001, 3 * w**2
    root = solve_monotone(func, np.array([0.0]), np.array([-1.0]), np.array([1.0]))
    assert root[0] == pytest.approx(0.1, abs=1e-12)
