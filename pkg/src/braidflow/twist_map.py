"""The twist map ψ generated by a :class:`GeneratorShape`.

ψ(x, y) = (X, Y) is defined implicitly by -g_x(x, X) = y, Y = g_X(x, X).
Points in the rotation or shear zones take closed-form fast paths; the
rest go through a bracketed Newton solve, which is safe because
X -> -g_x(x, X) is strictly monotone for a certified shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .generating_function import GeneratorShape, bump_gradient_bound, g_eval, nearest_translate


class SolverError(RuntimeError):
    pass


class AnnulusError(ValueError):
    pass


@dataclass(frozen=True)
class Annulus:
    a_bound: float = -0.5
    b_bound: float = 0.5

    def __post_init__(self):
        if not self.a_bound < 0 < self.b_bound:
            raise ValueError(f"need a < 0 < b, got [{self.a_bound}, {self.b_bound}]")

    def contains(self, y) -> np.ndarray:
        y = np.asarray(y)
        return (y >= self.a_bound) & (y <= self.b_bound)


@dataclass(frozen=True)
class MapPoint:
    x_lift: float
    y: float

    def as_tuple(self) -> tuple[float, float]:
        return (self.x_lift, self.y)


def solve_monotone(func, w0, lo, hi, tol=1e-13, maxiter=100):
    """Vectorized safeguarded Newton for increasing scalar equations F(w) = 0.

    ``func(w, mask)`` returns ``(F, F')`` for the entries selected by
    ``mask``. ``lo``/``hi`` must bracket the root (F(lo) <= 0 <= F(hi));
    Newton steps leaving the bracket are replaced by bisection.
    """
    w = np.array(w0, dtype=float, copy=True)
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    active = np.ones(w.shape, dtype=bool)
    for _ in range(maxiter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            return w
        F, dF = func(w[idx], idx)
        wi = w[idx]
        done = F == 0.0
        neg = F < 0
        lo[idx] = np.where(neg, wi, lo[idx])
        hi[idx] = np.where(~neg & ~done, wi, hi[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            step = F / dF
        trial = wi - step
        bad = ~np.isfinite(trial) | (trial <= lo[idx]) | (trial >= hi[idx])
        trial = np.where(bad, 0.5 * (lo[idx] + hi[idx]), trial)
        conv = done | (np.abs(trial - wi) <= tol * (1.0 + np.abs(wi))) | (hi[idx] - lo[idx] <= tol)
        w[idx] = np.where(done, wi, trial)
        active[idx[conv]] = False
    if active.any():
        raise SolverError(
            f"monotone solve did not converge for {int(active.sum())} point(s) in {maxiter} iterations")
    return w


def _zone_t(shape: GeneratorShape, xr, Xr):
    k = nearest_translate(xr, Xr)
    return (xr - k) ** 2 + (Xr - k) ** 2


def region_of(shape: GeneratorShape, x, X):
    """'rotation', 'blend' or 'shear' from t = x~^2 + X~^2 against ε and 2ε."""
    t = _zone_t(shape, np.asarray(x) - shape.center, np.asarray(X) - shape.center)
    out = np.where(t <= shape.eps, "rotation", np.where(t >= 2 * shape.eps, "shear", "blend"))
    return str(out) if out.ndim == 0 else out


def _bracket_halfwidth(shape: GeneratorShape) -> float:
    return abs(shape.sin_theta) * bump_gradient_bound(shape) + 1e-12


def solve_forward(shape: GeneratorShape, x, y):
    """Solve -g_x(x, X) = y for X with the Newton solver only (no fast paths)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    s = shape.sin_theta
    sg = shape.sign
    xr = x - shape.center
    hw = _bracket_halfwidth(shape)

    def func(w, idx):
        p = g_eval(shape, xr[idx], xr[idx] + w)
        return sg * (-p.g_x - y[idx]), -sg * p.g_xX

    w0 = s * y
    w = solve_monotone(func, w0, w0 - hw, w0 + hw)
    X = x + w
    Y = g_eval(shape, xr, X - shape.center).g_X
    return X, Y


def solve_backward(shape: GeneratorShape, X, Y):
    """Solve g_X(x, X) = Y for x with the Newton solver only."""
    X = np.atleast_1d(np.asarray(X, dtype=float))
    Y = np.atleast_1d(np.asarray(Y, dtype=float))
    s = shape.sin_theta
    sg = shape.sign
    Xr = X - shape.center
    hw = _bracket_halfwidth(shape)

    # x = X - w; d/dw g_X(X - w, X) = -g_xX
    def func(w, idx):
        p = g_eval(shape, Xr[idx] - w, Xr[idx])
        return sg * (p.g_X - Y[idx]), -sg * p.g_xX

    w0 = s * Y
    w = solve_monotone(func, w0, w0 - hw, w0 + hw)
    x = X - w
    y = -g_eval(shape, x - shape.center, Xr).g_x
    return x, y


def _fast_paths(shape, x, y, inverse=False):
    """Closed-form images where they are valid; returns (X, Y, known-mask)."""
    c, s = shape.cos_theta, shape.sin_theta
    if inverse:
        s = -s
    xr = x - shape.center
    kx = np.floor(xr + 0.5)
    xt = xr - kx
    # shear candidate: valid iff the pair (x, X) sits outside the bump support
    Xs = x + s * y
    shear_ok = _zone_t(shape, *((xr, Xs - shape.center) if not inverse else (Xs - shape.center, xr))) >= 2 * shape.eps
    Xr_ = shape.center + kx + c * xt + s * y
    Yr_ = -s * xt + c * y
    rot_ok = _zone_t(shape, *((xr, Xr_ - shape.center) if not inverse else (Xr_ - shape.center, xr))) <= shape.eps
    X = np.where(shear_ok, Xs, np.where(rot_ok, Xr_, np.nan))
    Y = np.where(shear_ok, y, np.where(rot_ok, Yr_, np.nan))
    return X, Y, shear_ok | rot_ok


def forward_xy(shape: GeneratorShape, x, y, inverse: bool = False):
    """Vectorized ψ (or ψ^-1 with ``inverse=True``) on arrays of lifted points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape_out = np.broadcast(x, y).shape
    x = np.broadcast_to(x, shape_out).ravel()
    y = np.broadcast_to(y, shape_out).ravel()
    X, Y, known = _fast_paths(shape, x, y, inverse)
    todo = ~known
    if todo.any():
        solver = solve_backward if inverse else solve_forward
        X[todo], Y[todo] = solver(shape, x[todo], y[todo])
    return X.reshape(shape_out), Y.reshape(shape_out)


def _check_annulus(ann: Annulus, y):
    if not np.all(ann.contains(y)):
        raise AnnulusError(f"y outside annulus [{ann.a_bound}, {ann.b_bound}]")


def map_forward(shape: GeneratorShape, ann: Annulus, z: MapPoint) -> MapPoint:
    _check_annulus(ann, z.y)
    X, Y = forward_xy(shape, z.x_lift, z.y)
    return MapPoint(float(X), float(Y))


def map_backward(shape: GeneratorShape, ann: Annulus, z: MapPoint) -> MapPoint:
    _check_annulus(ann, z.y)
    x, y = forward_xy(shape, z.x_lift, z.y, inverse=True)
    return MapPoint(float(x), float(y))


def map_iterate(shape: GeneratorShape, ann: Annulus, z: MapPoint, steps: int) -> list[MapPoint]:
    if steps < 0:
        raise ValueError("steps must be >= 0")
    orbit = [z]
    for _ in range(steps):
        orbit.append(map_forward(shape, ann, orbit[-1]))
    return orbit


def half_twist_map(shape: GeneratorShape, ann: Annulus, z: MapPoint) -> MapPoint:
    """ψ^m with m = 2q: a rotation by sign·π on the exact rotation disc."""
    return map_iterate(shape, ann, z, shape.m_iters)[-1]


def half_twist_xy(shape: GeneratorShape, x, y, inverse: bool = False):
    for _ in range(shape.m_iters):
        x, y = forward_xy(shape, x, y, inverse)
    return x, y


def jacobian_det(shape: GeneratorShape, ann: Annulus, z: MapPoint, h: float = 1e-6) -> float:
    return float(jacobian_det_xy(lambda x, y: forward_xy(shape, x, y), ann, z.x_lift, z.y, h))


def jacobian_det_xy(fmap, ann: Annulus, x, y, h: float = 1e-6):
    """Finite-difference Jacobian determinant of a vectorized map ``fmap(x, y)``.

    Central differences, one-sided in y where the stencil would leave the annulus.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    up = np.minimum(y + h, ann.b_bound)
    dn = np.maximum(y - h, ann.a_bound)
    xs = np.concatenate([x + h, x - h, x, x])
    ys = np.concatenate([y, y, up, dn])
    X, Y = fmap(xs, ys)
    n = x.size
    Xa, Xb, Xc, Xd = np.split(X, 4)
    Ya, Yb, Yc, Yd = np.split(Y, 4)
    dy = (up - dn)
    fx, gx = (Xa - Xb) / (2 * h), (Ya - Yb) / (2 * h)
    fy, gy = (Xc - Xd) / dy, (Yc - Yd) / dy
    det = fx * gy - fy * gx
    return det if n > 1 else det[0]
