"""Time-periodic Hamiltonians realizing braid words.

Each letter σ_k^{±1} occupies one unit of time, split into m = 2q equal
sub-steps. During a sub-step the flow follows the family of twist maps
generated by

    h_τ(x0, x1) = τ g(x0, x0 + (x1 - x0)/τ),     0 < τ <= 1,

which starts at the identity and ends at ψ. Writing w = (x1 - x0)/τ, the
Hamiltonian generating the family in the τ variable is

    K(τ, X, Y) = w Y - g(X - τw, X + (1 - τ)w),   with g_X(...) = Y fixing w,

and the wall-clock Hamiltonian is K times the rate dτ/dt of the time warp.
Negative letters run the positive letter backwards in time.
"""

from __future__ import annotations

import bisect
import json
import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .braid_algebra import BraidWord, format_word, parse_word
from .generating_function import (
    CertReport,
    GeneratorShape,
    GridSpec,
    _mollifier_b,
    certify_rho,
    certify_twist,
    g_eval,
    nearest_translate,
)
from .twist_map import Annulus, _bracket_halfwidth, solve_monotone

log = logging.getLogger(__name__)

DEFAULT_Q = 8
DEFAULT_FAMILY_TIMES = (0.1, 0.25, 0.5, 0.75, 1.0)


class LayoutError(ValueError):
    pass


class CertificationError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# layout

def boundary_clearance_bound(eps: float, q: int) -> float:
    """Smallest |y| at which the shear image pair (x, x + y sin θ) always misses the bump."""
    return 2.0 * math.sqrt(eps) / abs(math.sin(math.pi / (2 * q)))


@dataclass(frozen=True)
class StrandLayout:
    n: int
    positions: tuple[float, ...]
    centers: tuple[float, ...]
    delta: float
    eps: float
    annulus: Annulus
    auto_annulus: bool = True

    def marked_points(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.positions, dtype=float), np.zeros(self.n)

    def to_dict(self) -> dict:
        return {
            "positions": list(self.positions),
            "centers": list(self.centers),
            "delta": self.delta,
            "eps": self.eps,
            "annulus": [self.annulus.a_bound, self.annulus.b_bound],
        }


def _circle_dist(a: float, b: float) -> float:
    d = (a - b) % 1.0
    return min(d, 1.0 - d)


def _auto_annulus(eps: float, q: int) -> Annulus:
    b = max(0.5, 1.05 * boundary_clearance_bound(eps, q))
    return Annulus(-b, b)


def make_layout(n: int, ann: Annulus | None = None, q: int = DEFAULT_Q) -> StrandLayout:
    """Marked points p_i = (i-1)/N, centers (2k-1)/(2N), δ = 1/(2N), ε = 0.6/N^2.

    N = max(n, 3): two strands use the three-strand spacing. Without an
    explicit annulus, one is sized so the bump clears its boundary for q.
    """
    if n < 2:
        raise LayoutError("need n >= 2")
    N = max(n, 3)
    positions = tuple((i - 1) / N for i in range(1, n + 1))
    centers = tuple((2 * k - 1) / (2 * N) for k in range(1, n))
    delta = 1.0 / (2 * N)
    eps = 0.6 / N**2
    auto = ann is None
    if auto:
        ann = _auto_annulus(eps, q)
    layout = StrandLayout(n, positions, centers, delta, eps, ann, auto)
    check_layout(layout, q)
    return layout


def check_layout(layout: StrandLayout, q: int = DEFAULT_Q) -> None:
    eps, delta = layout.eps, layout.delta
    if 2 * delta**2 > 0.95 * eps:
        raise LayoutError(
            f"swapped strands leave the rotation zone: 2δ² = {2 * delta**2:.4g} > 0.95ε; increase eps")
    for k, c in enumerate(layout.centers, start=1):
        for j, p in enumerate(layout.positions, start=1):
            if j in (k, k + 1):
                continue
            if 2 * _circle_dist(p, c) ** 2 < 2.1 * eps:
                raise LayoutError(
                    f"spectator p_{j} is inside the bump of center c_{k}; use a smaller eps")
    r = math.sqrt(2 * eps)
    if r > 0.45:
        raise LayoutError(f"bump radius {r:.3f} exceeds 0.45; use a smaller eps")
    ann = layout.annulus
    if r > 0.9 * min(-ann.a_bound, ann.b_bound):
        raise LayoutError("annulus too thin for the bump radius")
    need = boundary_clearance_bound(eps, q)
    if min(-ann.a_bound, ann.b_bound) < need:
        raise LayoutError(
            f"annulus boundary |y| < {need:.3f} meets the bump for q = {q}; widen the annulus")


# ---------------------------------------------------------------------------
# time warps

@dataclass(frozen=True)
class WarpSpec:
    kind: str = "smooth_bump"
    eps_tilde: float = 0.05

    def __post_init__(self):
        if self.kind not in ("smooth_bump", "literal_eq17", "none"):
            raise ValueError(f"unknown warp kind {self.kind!r}")
        if self.kind == "literal_eq17" and not 0 < self.eps_tilde < 0.25:
            raise ValueError("eps_tilde must lie in (0, 0.25)")

    @classmethod
    def from_flag(cls, flag: str, eps_tilde: float = 0.05) -> WarpSpec:
        names = {"smooth": "smooth_bump", "eq17": "literal_eq17", "none": "none"}
        return cls(names.get(flag, flag), eps_tilde)


def _warp_integrand(s):
    s = np.asarray(s, dtype=float)
    return _mollifier_b(3.0 * s)[0] * _mollifier_b(3.0 * (1.0 - s))[0]


@lru_cache(maxsize=1)
def _smooth_warp_table(intervals: int = 4096):
    nodes = np.linspace(0.0, 1.0, intervals + 1)
    gl_x, gl_w = np.polynomial.legendre.leggauss(10)
    a, b = nodes[:-1], nodes[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * gl_x[None, :]
    pieces = (_warp_integrand(pts) * gl_w[None, :]).sum(axis=1) * half
    B = np.concatenate([[0.0], np.cumsum(pieces)])
    total = B[-1]
    W = B / total
    W[-1] = 1.0
    dW = _warp_integrand(nodes) / total
    return CubicHermiteSpline(nodes, W, dW), total


def warp_eval(spec: WarpSpec, t):
    """Warp W(t) on one sub-step and its derivative W'(t)."""
    t = np.asarray(t, dtype=float)
    if spec.kind == "smooth_bump":
        spline, total = _smooth_warp_table()
        tc = np.clip(t, 0.0, 1.0)
        W, dW = spline(tc), _warp_integrand(tc) / total
    elif spec.kind == "literal_eq17":
        e = spec.eps_tilde
        W = np.clip((t - e) / (1 - 2 * e), 0.0, 1.0)
        dW = np.where((t >= e) & (t <= 1 - e), 1.0 / (1 - 2 * e), 0.0)
    else:
        W, dW = t.copy(), np.ones_like(t)
    if W.ndim == 0:
        return float(W), float(dW)
    return W, dW


# ---------------------------------------------------------------------------
# the interpolating family

def family_eval(shape: GeneratorShape, t: float, x0, x1):
    """h_t(x0, x1) = t g(x0, x0 + (x1 - x0)/t) with ∂_t, ∂_x0, ∂_x1."""
    if not t > 0:
        raise ValueError("family parameter must be positive")
    x0r = np.asarray(x0, dtype=float) - shape.center
    w = (np.asarray(x1, dtype=float) - np.asarray(x0, dtype=float)) / t
    p = g_eval(shape, x0r, x0r + w)
    h = t * p.g
    dh_dt = p.g - w * p.g_X
    dh_dx0 = t * p.g_x + (t - 1.0) * p.g_X
    dh_dx1 = p.g_X
    return h, dh_dt, dh_dx0, dh_dx1


def family_step_xy(shape: GeneratorShape, t: float, x0, y0):
    """Image of (x0, y0) under the map generated by h_t; used to check the family."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    x0r = x0 - shape.center
    hw = _bracket_halfwidth(shape)
    sg = shape.sign

    # -∂_x0 h = y0, as an equation in w
    def func(w, idx):
        p = g_eval(shape, x0r[idx], x0r[idx] + w)
        F = -(t * p.g_x + (t - 1.0) * p.g_X) - y0[idx]
        dF = -(t * p.g_xX + (t - 1.0) * p.g_XX)
        return sg * F, sg * dF

    w0 = shape.sin_theta * y0
    w = solve_monotone(func, w0, w0 - hw, w0 + hw)
    x1 = x0 + t * w
    y1 = g_eval(shape, x0r, x0r + w).g_X
    return x1, y1


def certify_family_twist(shape: GeneratorShape, t_grid=DEFAULT_FAMILY_TIMES,
                         xy_grid: GridSpec = GridSpec()) -> CertReport:
    """Min of -∂²h_t/∂x0∂x1 over t_grid; passes at >= 0.1/|sin θ|.

    The grid runs over (x0, x0 + (x1 - x0)/t) around the bump, which covers
    every pair (x0, x1) whose value differs from the shear value 1/(t sin θ).
    The implicit solve used by the Hamiltonian needs the t -> 0 limit g_XX
    to stay positive as well; that minimum is recorded and required.
    """
    ts = np.asarray(t_grid, dtype=float)
    if np.any(ts <= 0) or np.any(ts > 1):
        raise ValueError("t_grid must lie in (0, 1]")
    ax = xy_grid.axes()
    xx, uu = np.meshgrid(ax, ax, indexing="ij")
    p = g_eval(shape, xx, uu)
    sg = shape.sign
    best, arg = np.inf, [0.0, 0.0, 0.0]
    for t in ts:
        vals = sg * (-p.g_xX + (1.0 / t - 1.0) * p.g_XX)
        i = np.unravel_index(int(np.argmin(vals)), vals.shape)
        if vals[i] < best:
            best, arg = float(vals[i]), [float(t), float(xx[i]), float(uu[i])]
    min_gXX = float(np.min(sg * p.g_XX))
    threshold = 0.1 / abs(shape.sin_theta)
    return CertReport(
        name="family_twist",
        passed=bool(best >= threshold and min_gXX > 0),
        extremum=best,
        arg_extremum=arg,
        grid={"t": [float(t) for t in ts], "half_width": xy_grid.half_width,
              "points": xy_grid.points, "min_g_XX": min_gXX},
        margin=best - threshold,
        threshold=threshold,
    )


def family_hamiltonian(shape: GeneratorShape, tau: float, X, Y, grad: bool = True):
    """K(τ, X, Y) and optionally (K_X, K_Y), vectorized over points."""
    X = np.atleast_1d(np.asarray(X, dtype=float))
    Y = np.atleast_1d(np.asarray(Y, dtype=float))
    s = shape.sin_theta
    sg = shape.sign
    Xr = X - shape.center
    w = s * Y
    x0 = Xr - tau * w
    k = nearest_translate(x0, x0 + w)
    t_zone = (x0 - k) ** 2 + (x0 + w - k) ** 2
    todo = t_zone < 2 * shape.eps
    if todo.any():
        hw = _bracket_halfwidth(shape)
        Xt, Yt = Xr[todo], Y[todo]

        def func(wv, idx):
            p = g_eval(shape, Xt[idx] - tau * wv, Xt[idx] + (1.0 - tau) * wv)
            F = p.g_X - Yt[idx]
            dF = -tau * p.g_xX + (1.0 - tau) * p.g_XX
            return sg * F, sg * dF

        w0 = w[todo]
        w[todo] = solve_monotone(func, w0, w0 - hw, w0 + hw)
    x0 = Xr - tau * w
    p = g_eval(shape, x0, x0 + w)
    K = w * Y - p.g
    if not grad:
        return K
    A = p.g_x + Y
    Fw = -tau * p.g_xX + (1.0 - tau) * p.g_XX
    ratio = tau * A / Fw
    K_Y = w + ratio
    K_X = -A - ratio * (p.g_xX + p.g_XX)
    return K, K_X, K_Y


# ---------------------------------------------------------------------------
# schedules

@dataclass(frozen=True)
class Segment:
    letter: int          # 1-based position of the letter in the word
    index: int           # generator index k
    sign: int
    shape: GeneratorShape
    sub_step: int        # 1..m
    t0: float
    t1: float
    warp: WarpSpec
    direction: str       # "forward" | "reversed"


@dataclass(frozen=True)
class Piece:
    """A stretch of the timeline with one Hamiltonian formula."""

    t0: float
    t1: float
    kind: str            # "substep" | "buffer"
    direction: int       # +1 forward, -1 reversed
    shape: GeneratorShape | None = None
    warp: str = "none"   # warp kind applied inside a sub-step piece
    coef: float = 0.5    # buffer pieces carry H = direction * coef * y^2


@dataclass
class Schedule:
    word: BraidWord
    layout: StrandLayout
    q: int
    warp: WarpSpec
    segments: list[Segment]
    period: float
    certificates: dict = field(default_factory=dict)
    c0: float = 0.0
    pieces: list[Piece] = field(default_factory=list)

    def __post_init__(self):
        if not self.pieces:
            self.pieces = _build_pieces(self)
        self._starts = [p.t0 for p in self.pieces]

    @property
    def m_iters(self) -> int:
        return 2 * self.q

    def piece_at(self, t: float) -> Piece:
        i = bisect.bisect_right(self._starts, t) - 1
        return self.pieces[min(max(i, 0), len(self.pieces) - 1)]

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "n": self.word.n_strands,
            "word": format_word(self.word),
            "q": self.q,
            "layout": self.layout.to_dict(),
            "warp": {"kind": self.warp.kind, "eps_tilde": self.warp.eps_tilde},
            "period": self.period,
            "segments": [
                {"letter": sg.letter, "index": sg.index, "sign": sg.sign, "t0": sg.t0,
                 "t1": sg.t1, "sub_step": sg.sub_step, "direction": sg.direction}
                for sg in self.segments
            ],
        }

    def to_json(self) -> str:
        return json.dumps(_round17(self.to_dict()), indent=1)


def _round17(obj):
    if isinstance(obj, float):
        return float(f"{obj:.17g}")
    if isinstance(obj, dict):
        return {k: _round17(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round17(v) for v in obj]
    return obj


def _build_pieces(sched: Schedule) -> list[Piece]:
    pieces = []
    m = sched.m_iters
    if not sched.segments:
        return [Piece(0.0, sched.period, "buffer", 1, coef=sched.c0)]
    if sched.warp.kind != "literal_eq17":
        for sg in sched.segments:
            d = 1 if sg.direction == "forward" else -1
            pieces.append(Piece(sg.t0, sg.t1, "substep", d, sg.shape, sched.warp.kind))
        return pieces
    # literal mode: buffers at both ends of every letter, sub-steps squeezed between
    e = sched.warp.eps_tilde
    for letter_start in sorted({sg.t0 for sg in sched.segments if sg.sub_step == 1}):
        first = next(sg for sg in sched.segments if sg.t0 == letter_start and sg.sub_step == 1)
        d = 1 if first.direction == "forward" else -1
        L = (1 - 2 * e) / m
        pieces.append(Piece(letter_start, letter_start + e, "buffer", d))
        for j in range(m):
            a = letter_start + e + j * L
            pieces.append(Piece(a, a + L, "substep", d, first.shape, "none"))
        pieces.append(Piece(letter_start + 1 - e, letter_start + 1, "buffer", d))
    return pieces


@lru_cache(maxsize=32)
def _certify_cached(q: int, eps: float, xi_scale: float = 1.0):
    shape = GeneratorShape(q, eps, 0.0, 1, xi_scale)
    return (certify_rho(shape), certify_twist(shape), certify_family_twist(shape))


def certificates_for(q: int, eps: float, xi_scale: float = 1.0) -> dict[str, CertReport]:
    rho, twist, fam = _certify_cached(q, eps, xi_scale)
    return {"rho": rho, "twist": twist, "family_twist": fam}


def build_schedule(word: BraidWord, layout: StrandLayout, q: int = DEFAULT_Q,
                   warp: WarpSpec = WarpSpec(), max_escalations: int = 3) -> Schedule:
    """One unit of time per letter, m = 2q sub-steps each; q doubles until certified."""
    if word.n_strands != layout.n:
        raise LayoutError(f"word has {word.n_strands} strands, layout has {layout.n}")
    certs = certificates_for(q, layout.eps)
    escalations = 0
    while not all(c.passed for c in certs.values()):
        if escalations == max_escalations:
            failed = [k for k, c in certs.items() if not c.passed]
            raise CertificationError(f"certificates {failed} still fail at q = {q}")
        log.info("certificates fail at q=%d, doubling", q)
        q *= 2
        escalations += 1
        certs = certificates_for(q, layout.eps)
    try:
        check_layout(layout, q)
    except LayoutError:
        if not layout.auto_annulus:
            raise
        layout = replace(layout, annulus=_auto_annulus(layout.eps, q))
        check_layout(layout, q)

    m = 2 * q
    segments = []
    for pos, (k, sign) in enumerate(word.letters):
        shape = GeneratorShape(q, layout.eps, layout.centers[k - 1], 1)
        direction = "forward" if sign > 0 else "reversed"
        for j in range(m):
            segments.append(Segment(pos + 1, k, sign, shape, j + 1,
                                    pos + j / m, pos + (j + 1) / m, warp, direction))
    period = float(max(len(word), 1))
    return Schedule(word, layout, q, warp, segments, period, certs)


def piece_gradient(piece: Piece, t, x, y, value: bool = False):
    """(H_x, H_y) on one piece at wall-clock time t (or (H, H_x, H_y) with ``value``)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    d = piece.direction
    if piece.kind == "buffer":
        H = d * piece.coef * y * y
        Hx, Hy = np.zeros_like(y), 2.0 * d * piece.coef * y
        return (H, Hx, Hy) if value else (Hx, Hy)
    D = piece.t1 - piece.t0
    s = (t - piece.t0) / D
    if d < 0:
        s = 1.0 - s
    tau, dW = warp_eval(WarpSpec(piece.warp), s)
    rate = d * dW / D
    if rate == 0.0:
        z = np.zeros_like(x)
        return (z, z, z) if value else (z, z)
    K, KX, KY = family_hamiltonian(piece.shape, float(tau), x, y)
    if value:
        return rate * K, rate * KX, rate * KY
    return rate * KX, rate * KY


def _wrap_time(sched: Schedule, t: float) -> float:
    t = float(t)
    return t if 0.0 <= t <= sched.period else t % sched.period


def hamiltonian_eval(sched: Schedule, t: float, x, y):
    t = _wrap_time(sched, t)
    H, _, _ = piece_gradient(sched.piece_at(t), t, x, y, value=True)
    return float(H[0]) if np.ndim(x) == 0 and np.ndim(y) == 0 else H


def hamiltonian_gradient(sched: Schedule, t: float, x, y):
    t = _wrap_time(sched, t)
    Hx, Hy = piece_gradient(sched.piece_at(t), t, x, y)
    if np.ndim(x) == 0 and np.ndim(y) == 0:
        return float(Hx[0]), float(Hy[0])
    return Hx, Hy


def schedule_from_dict(data: dict) -> Schedule:
    """Rebuild a schedule from its JSON form (shapes are re-derived, not stored)."""
    n = int(data["n"])
    word = parse_word(data["word"], n)
    a, b = data["layout"]["annulus"]
    layout = make_layout(n, Annulus(a, b), int(data["q"]))
    warp = WarpSpec(data["warp"]["kind"], data["warp"]["eps_tilde"])
    return build_schedule(word, layout, int(data["q"]), warp, max_escalations=0)
