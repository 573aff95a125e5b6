"""Integration of Hamilton's equations over a schedule, and strand tracing.

Two ways to produce strand trajectories:

* ``ode``: fixed-step RK4 (or implicit midpoint) on ẋ = H_y, ẏ = -H_x,
  stepping piece by piece so no step straddles a sub-step junction.
* ``isotopy``: exact discrete endpoints from the twist maps, joined by
  straight segments inside each sub-step.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .synthesis import Piece, Schedule, StrandLayout, piece_gradient
from .twist_map import MapPoint, forward_xy


class FlowError(RuntimeError):
    pass


class SeparationError(FlowError):
    pass


@dataclass(frozen=True)
class IntegratorOpts:
    steps_per_substep: int = 200
    method: str = "rk4"           # "rk4" | "midpoint"
    midpoint_tol: float = 1e-14
    midpoint_maxiter: int = 60

    def __post_init__(self):
        if self.method not in ("rk4", "midpoint"):
            raise ValueError(f"unknown integrator {self.method!r}")
        if self.steps_per_substep < 1:
            raise ValueError("steps_per_substep must be positive")


@dataclass
class Trajectory:
    times: np.ndarray     # (T,)
    x: np.ndarray         # (T, P) lifted
    y: np.ndarray         # (T, P)

    def endpoint(self) -> tuple[np.ndarray, np.ndarray]:
        return self.x[-1], self.y[-1]

    def point(self, i: int, j: int = 0) -> MapPoint:
        return MapPoint(float(self.x[i, j]), float(self.y[i, j]))


@dataclass
class StrandSet:
    layout: StrandLayout
    times: np.ndarray     # (T,)
    x: np.ndarray         # (T, n)
    y: np.ndarray         # (T, n)

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,strand,x_lift,y\n")
        for i, t in enumerate(self.times):
            for j in range(self.n):
                buf.write(f"{t:.17g},{j + 1},{self.x[i, j]:.17g},{self.y[i, j]:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, layout: StrandLayout | None = None) -> StrandSet:
        from .synthesis import make_layout

        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames != ["t", "strand", "x_lift", "y"]:
            raise ValueError(f"bad trajectory header: {reader.fieldnames}")
        rows = [(float(r["t"]), int(r["strand"]), float(r["x_lift"]), float(r["y"]))
                for r in reader]
        if not rows:
            raise ValueError("empty trajectory file")
        n = max(r[1] for r in rows)
        times = sorted({r[0] for r in rows})
        index = {t: i for i, t in enumerate(times)}
        x = np.full((len(times), n), np.nan)
        y = np.full((len(times), n), np.nan)
        for t, j, xv, yv in rows:
            x[index[t], j - 1] = xv
            y[index[t], j - 1] = yv
        if np.isnan(x).any():
            raise ValueError("trajectory file has missing rows")
        return cls(layout or make_layout(n), np.array(times), x, y)


# ---------------------------------------------------------------------------
# ODE integration

def _field(piece: Piece, t: float, x, y):
    Hx, Hy = piece_gradient(piece, t, x, y)
    return Hy, -Hx


def _rk4(piece, t, h, x, y):
    k1x, k1y = _field(piece, t, x, y)
    k2x, k2y = _field(piece, t + h / 2, x + h / 2 * k1x, y + h / 2 * k1y)
    k3x, k3y = _field(piece, t + h / 2, x + h / 2 * k2x, y + h / 2 * k2y)
    k4x, k4y = _field(piece, t + h, x + h * k3x, y + h * k3y)
    return (x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x),
            y + h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y))


def _midpoint(piece, t, h, x, y, opts):
    fx, fy = _field(piece, t + h / 2, x, y)
    x1, y1 = x + h * fx, y + h * fy
    for _ in range(opts.midpoint_maxiter):
        fx, fy = _field(piece, t + h / 2, 0.5 * (x + x1), 0.5 * (y + y1))
        xn, yn = x + h * fx, y + h * fy
        delta = max(np.max(np.abs(xn - x1)), np.max(np.abs(yn - y1)))
        x1, y1 = xn, yn
        if delta <= opts.midpoint_tol:
            return x1, y1
    raise FlowError("implicit midpoint iteration did not converge")


def _nominal_substep(sched: Schedule) -> float:
    return 1.0 / sched.m_iters if sched.segments else 1.0


def _piece_steps(piece: Piece, nominal: float, opts: IntegratorOpts) -> int:
    return max(2, math.ceil(opts.steps_per_substep * (piece.t1 - piece.t0) / nominal - 1e-9))


def integrate_points(sched: Schedule, x, y, t0: float = 0.0, t1: float | None = None,
                     opts: IntegratorOpts = IntegratorOpts(), record: bool = True) -> Trajectory:
    """Integrate many points at once from ``t0`` to ``t1`` (defaults to the period)."""
    if t1 is None:
        t1 = sched.period
    if not 0.0 <= t0 <= t1 <= sched.period + 1e-12:
        raise ValueError("integration interval must lie inside [0, period]")
    return _integrate_pieces(sched.pieces, _nominal_substep(sched), x, y, t0, t1, opts, record)


def _integrate_pieces(pieces, nominal, x, y, t0, t1, opts, record):
    x = np.atleast_1d(np.asarray(x, dtype=float)).copy()
    y = np.atleast_1d(np.asarray(y, dtype=float)).copy()
    times, xs, ys = [t0], [x.copy()], [y.copy()]
    for piece in pieces:
        a, b = max(piece.t0, t0), min(piece.t1, t1)
        if b - a <= 1e-15:
            continue
        nsteps = max(1, round(_piece_steps(piece, nominal, opts) * (b - a) / (piece.t1 - piece.t0)))
        h = (b - a) / nsteps
        for i in range(nsteps):
            t = a + i * h
            if opts.method == "rk4":
                x, y = _rk4(piece, t, h, x, y)
            else:
                x, y = _midpoint(piece, t, h, x, y, opts)
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
                raise FlowError(f"non-finite state at t = {t + h}")
            if record:
                times.append(a + (i + 1) * h)
                xs.append(x.copy())
                ys.append(y.copy())
    if not record:
        times, xs, ys = [t0, t1], [xs[0], x], [ys[0], y]
    return Trajectory(np.array(times), np.array(xs), np.array(ys))


def integrate_flow(sched: Schedule, z0: MapPoint, t0: float = 0.0, t1: float | None = None,
                   opts: IntegratorOpts = IntegratorOpts()) -> Trajectory:
    return integrate_points(sched, [z0.x_lift], [z0.y], t0, t1, opts)


def ode_period_map(sched: Schedule, x, y, opts: IntegratorOpts = IntegratorOpts()):
    tr = integrate_points(sched, x, y, 0.0, sched.period, opts, record=False)
    return tr.x[-1], tr.y[-1]


# ---------------------------------------------------------------------------
# discrete isotopy

def piece_map(piece: Piece, x, y):
    """Exact endpoint map of one piece."""
    if piece.kind == "buffer":
        dt = piece.t1 - piece.t0
        return x + 2.0 * piece.direction * piece.coef * y * dt, np.array(y, dtype=float)
    return forward_xy(piece.shape, x, y, inverse=piece.direction < 0)


def displacement_bound(piece: Piece, ymax: float, delta: float) -> float:
    if piece.kind == "buffer":
        return 2.0 * abs(piece.coef) * ymax * (piece.t1 - piece.t0)
    th = abs(piece.shape.theta)
    return math.sin(th) * ymax + 2.0 * delta * math.sin(th / 2.0)


def isotopy_points(sched: Schedule, x, y, samples_per_substep: int = 64,
                   check_displacement: bool = True) -> Trajectory:
    if samples_per_substep < 2:
        raise ValueError("samples_per_substep must be >= 2")
    x = np.atleast_1d(np.asarray(x, dtype=float)).copy()
    y = np.atleast_1d(np.asarray(y, dtype=float)).copy()
    times, xs, ys = [0.0], [x], [y]
    frac = np.arange(1, samples_per_substep + 1) / samples_per_substep
    for piece in sched.pieces:
        x1, y1 = piece_map(piece, x, y)
        if check_displacement:
            ymax = max(np.max(np.abs(y)), np.max(np.abs(y1)))
            step = np.hypot(x1 - x, y1 - y)
            bound = displacement_bound(piece, ymax, sched.layout.delta) + 1e-12
            if np.any(step > bound):
                raise FlowError(
                    f"sub-step displacement {np.max(step):.3g} exceeds bound {bound:.3g}; increase q")
        for f in frac:
            times.append(piece.t0 + f * (piece.t1 - piece.t0))
            xs.append(x + f * (x1 - x))
            ys.append(y + f * (y1 - y))
        x, y = x1, y1
    return Trajectory(np.array(times), np.array(xs), np.array(ys))


def isotopy_sample(sched: Schedule, z0: MapPoint, samples_per_substep: int = 64) -> Trajectory:
    return isotopy_points(sched, [z0.x_lift], [z0.y], samples_per_substep)


def discrete_period_map(sched: Schedule, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    for piece in sched.pieces:
        x, y = piece_map(piece, x, y)
    return x, y


# ---------------------------------------------------------------------------
# strands

MIN_SEPARATION = 1e-4


def min_separation(x: np.ndarray, y: np.ndarray) -> float:
    n = x.shape[1]
    best = math.inf
    for i in range(n):
        for j in range(i + 1, n):
            dx = (x[:, i] - x[:, j] + 0.5) % 1.0 - 0.5
            best = min(best, float(np.min(np.hypot(dx, y[:, i] - y[:, j]))))
    return best


def _check_strands(strands: StrandSet):
    if strands.n > 1:
        sep = min_separation(strands.x, strands.y)
        if sep < MIN_SEPARATION:
            raise SeparationError(f"strands come within {sep:.3g} of each other")
    clearance = 1.0 / max(strands.layout.n, 3)
    jumps = np.hypot(np.diff(strands.x, axis=0), np.diff(strands.y, axis=0))
    if jumps.size and np.max(jumps) > 0.5 * clearance:
        raise FlowError("trajectory samples too coarse for crossing detection")


def trace_strands(sched: Schedule, samples_per_substep: int = 64, method: str = "isotopy",
                  opts: IntegratorOpts = IntegratorOpts(), tol: float = 1e-6) -> StrandSet:
    x0, y0 = sched.layout.marked_points()
    if method == "isotopy":
        tr = isotopy_points(sched, x0, y0, samples_per_substep)
    elif method == "ode":
        tr = integrate_points(sched, x0, y0, 0.0, sched.period, opts)
        iso = isotopy_points(sched, x0, y0, 2, check_displacement=False)
        # compare at piece endpoints, which both time grids contain
        ends = np.array([p.t1 for p in sched.pieces])
        i_ode = np.searchsorted(tr.times, ends - 1e-12)
        i_iso = np.searchsorted(iso.times, ends - 1e-12)
        gap = max(np.max(np.abs(tr.x[i_ode] - iso.x[i_iso])),
                  np.max(np.abs(tr.y[i_ode] - iso.y[i_iso])))
        if gap > tol:
            raise FlowError(f"ode and isotopy strands disagree by {gap:.3g} at sub-step ends")
    else:
        raise ValueError(f"unknown method {method!r}")
    strands = StrandSet(sched.layout, tr.times, tr.x, tr.y)
    _check_strands(strands)
    return strands


@dataclass
class FlowCheckReport:
    passed: bool
    max_error: float
    points: int
    pieces_checked: int
    tolerance: float

    def to_dict(self) -> dict:
        return {"pass": bool(self.passed), "max_error": float(self.max_error),
                "points": self.points, "pieces_checked": self.pieces_checked,
                "tolerance": self.tolerance}


def _representative_pieces(sched: Schedule) -> list[Piece]:
    seen, out = set(), []
    for piece in sched.pieces:
        key = (piece.kind, piece.direction, None if piece.shape is None else piece.shape.center)
        if key not in seen:
            seen.add(key)
            out.append(piece)
    return out


def substep_errors(sched: Schedule, piece: Piece, x, y, opts: IntegratorOpts = IntegratorOpts()):
    """Distance between ODE time-(piece) map and the exact piece map at each point."""
    tr = _integrate_pieces([piece], _nominal_substep(sched), x, y, piece.t0, piece.t1,
                           opts, record=False)
    X, Y = piece_map(piece, np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return np.hypot(tr.x[-1] - X, tr.y[-1] - Y)


def flow_map_check(sched: Schedule, points, opts: IntegratorOpts = IntegratorOpts(),
                   tol: float = 1e-6) -> FlowCheckReport:
    """Compare the ODE map across one sub-step of each kind with the discrete map."""
    if isinstance(points, tuple) and len(points) == 2 and not isinstance(points[0], MapPoint):
        x, y = (np.asarray(v, dtype=float) for v in points)
    else:
        x = np.array([p.x_lift for p in points], dtype=float)
        y = np.array([p.y for p in points], dtype=float)
    worst = 0.0
    pieces = _representative_pieces(sched)
    for piece in pieces:
        worst = max(worst, float(np.max(substep_errors(sched, piece, x, y, opts))))
    return FlowCheckReport(worst <= tol, worst, int(x.size), len(pieces), tol)
