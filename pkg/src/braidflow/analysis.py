"""Dynamical invariants of a compiled braid: the period map, a Burau
lower bound on the dilatation, and a curve-stretching entropy estimate.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .braid_algebra import BraidWord, format_word
from .flow import (
    IntegratorOpts,
    _integrate_pieces,
    _nominal_substep,
    discrete_period_map,
    ode_period_map,
    piece_map,
)
from .synthesis import Schedule
from .twist_map import jacobian_det_xy

log = logging.getLogger(__name__)

DEFAULT_VERTEX_BUDGET = 2_000_000


class VertexBudgetExceeded(RuntimeError):
    pass


def poincare_map(sched: Schedule, method: str = "isotopy", opts: IntegratorOpts = IntegratorOpts()):
    """Return the time-1 map of ``sched`` as a vectorized callable ``(x, y) -> (X, Y)``."""
    if method == "isotopy":
        return lambda x, y: discrete_period_map(sched, x, y)
    if method == "ode":
        return lambda x, y: ode_period_map(sched, x, y, opts)
    raise ValueError(f"unknown method {method!r}")


def _piece_flow(sched: Schedule, piece, method: str, opts: IntegratorOpts):
    if method == "isotopy":
        return lambda x, y: piece_map(piece, x, y)
    nominal = _nominal_substep(sched)

    def run(x, y):
        tr = _integrate_pieces([piece], nominal, x, y, piece.t0, piece.t1, opts, record=False)
        return tr.x[-1], tr.y[-1]
    return run


def period_jacobian_det(sched: Schedule, x, y, method: str = "isotopy",
                        opts: IntegratorOpts = IntegratorOpts(), h: float = 1e-6) -> np.ndarray:
    """det of the period-map Jacobian at each point, as the product of per-piece dets.

    The period map stretches some directions by many orders of magnitude, so
    a difference quotient of the whole map is useless; each piece on its
    own is well conditioned and det is multiplicative along the orbit.
    """
    if method not in ("isotopy", "ode"):
        raise ValueError(f"unknown method {method!r}")
    x = np.atleast_1d(np.asarray(x, dtype=float)).copy()
    y = np.atleast_1d(np.asarray(y, dtype=float)).copy()
    ann = sched.layout.annulus
    det = np.ones_like(x)
    for piece in sched.pieces:
        f = _piece_flow(sched, piece, method, opts)
        det *= np.atleast_1d(jacobian_det_xy(f, ann, x, y, h))
        x, y = f(x, y)
    return det


@dataclass(frozen=True)
class DilatationBound:
    value: float
    matrix: np.ndarray

    @property
    def log_value(self) -> float:
        return math.log(self.value)


def _burau_generator(n: int, i: int, sign: int, t: float = -1.0) -> np.ndarray:
    """Reduced Burau matrix of σ_i^sign, size n-1."""
    d = n - 1
    m = np.eye(d)
    if d == 1:
        m[0, 0] = -t
    else:
        r = i - 1
        m[r, r] = -t
        if r > 0:
            m[r, r - 1] = t
        if r < d - 1:
            m[r, r + 1] = 1.0
    return m if sign > 0 else np.linalg.inv(m)


def burau_matrix(word: BraidWord, t: float = -1.0) -> DilatationBound:
    """Reduced Burau image at ``t`` and its spectral radius (at least 1).

    At t = -1 the spectral radius bounds the dilatation of the braid's
    mapping class from below.
    """
    d = max(word.n_strands - 1, 1)
    mat = np.eye(d)
    if word.n_strands >= 2:
        for i, e in word.letters:
            mat = mat @ _burau_generator(word.n_strands, i, e, t)
    radius = float(np.max(np.abs(np.linalg.eigvals(mat)))) if mat.size else 1.0
    return DilatationBound(max(1.0, radius), mat)


@dataclass
class EntropyReport:
    word: str
    iters: int
    h_max: float
    lengths: list[float]
    entropy: float
    burau_bound: float
    log_burau: float
    fit_window: int
    truncations: int = 0
    unresolved_segments: int = 0
    vertices: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "word": self.word,
            "iters": self.iters,
            "h_max": self.h_max,
            "lengths": self.lengths,
            "log_lengths": [math.log(v) if v > 0 else None for v in self.lengths],
            "entropy": self.entropy,
            "burau_bound": self.burau_bound,
            "log_burau": self.log_burau,
            "fit_window": self.fit_window,
            "truncations": self.truncations,
            "unresolved_segments": self.unresolved_segments,
            "vertices": self.vertices,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def _seg_lengths(x, y):
    # circle metric in x
    dx = (np.diff(x) + 0.5) % 1.0 - 0.5
    return np.hypot(dx, np.diff(y))


def _refine_image(fmap, x, y, h_max, min_spacing, cap):
    """Map the polyline (x, y), subdividing the domain until image segments are <= h_max.

    Segments whose domain spacing is already below ``min_spacing`` are left
    coarse; their count is returned alongside the image.
    """
    X, Y = fmap(x, y)
    while True:
        long_ = _seg_lengths(X, Y) > h_max
        fine = _seg_lengths(x, y) > min_spacing * (1.0 + np.abs(x[:-1]))
        bad = np.nonzero(long_ & fine)[0]
        if bad.size == 0:
            return x, y, X, Y, int(np.count_nonzero(long_))
        if x.size + bad.size > cap:
            raise VertexBudgetExceeded(f"curve refinement needs more than {cap} vertices")
        mx = 0.5 * (x[bad] + x[bad + 1])
        my = 0.5 * (y[bad] + y[bad + 1])
        MX, MY = fmap(mx, my)
        x = np.insert(x, bad + 1, mx)
        y = np.insert(y, bad + 1, my)
        X = np.insert(X, bad + 1, MX)
        Y = np.insert(Y, bad + 1, MY)


def fit_growth(log_lengths, window: int) -> float:
    """Least-squares slope of log length against iteration over the last ``window`` points."""
    v = np.asarray(log_lengths[-window:], dtype=float)
    if v.size < 2:
        return 0.0
    k = np.arange(v.size, dtype=float)
    slope = np.polyfit(k, v, 1)[0]
    return float(max(slope, 0.0)) if abs(slope) > 1e-12 else 0.0


def entropy_estimate(sched: Schedule, iters: int = 14, h_max: float = 0.01,
                     vertex_budget: int = DEFAULT_VERTEX_BUDGET, min_spacing: float = 1e-13,
                     strands: tuple[int, int] = (1, 2), renormalize: bool = False) -> EntropyReport:
    """Estimate topological entropy from the growth of an iterated arc.

    The arc is the straight segment between two marked points on y = 0.
    Exceeding ``vertex_budget`` raises :class:`VertexBudgetExceeded`, unless
    ``renormalize`` is set: then only a leading sub-arc, sized so its next
    image should fit the budget, is carried forward and the discarded
    length is kept as a log factor. Reported lengths are always those of
    the full iterate. Domain segments shorter than ``min_spacing`` cannot
    be split in floating point; they are kept and counted as unresolved.
    """
    if iters < 2:
        raise ValueError("iters must be >= 2")
    if not 0 < h_max <= 0.05:
        raise ValueError("h_max must lie in (0, 0.05]")
    layout = sched.layout
    n = layout.n
    if n < 2:
        raise ValueError("entropy needs at least two strands")
    a, b = strands
    if not (1 <= a <= n and 1 <= b <= n and a != b):
        raise ValueError(f"strand pair {strands} invalid for n = {n}")
    xa, xb = layout.positions[a - 1], layout.positions[b - 1]
    pts = max(2, int(math.ceil(abs(xb - xa) / h_max)) + 1)
    x = np.linspace(xa, xb, pts)
    y = np.zeros_like(x)
    fmap = poincare_map(sched)

    log_scale = 0.0
    log_lengths: list[float] = []
    vertices: list[int] = []
    truncations = 0
    unresolved = 0
    cap = 4 * vertex_budget if renormalize else vertex_budget
    growth = 1.0
    for it in range(iters):
        while True:
            before = x.size
            try:
                _, _, X, Y, coarse = _refine_image(fmap, x, y, h_max, min_spacing, cap)
                break
            except VertexBudgetExceeded:
                if not renormalize or x.size < 32:
                    raise
                # shorten the domain arc; its length is known exactly
                seg = _seg_lengths(x, y)
                keep = x.size // 8
                log_scale += math.log(seg.sum()) - math.log(seg[:keep - 1].sum())
                x, y = x[:keep].copy(), y[:keep].copy()
                truncations += 1
        x, y = X, Y
        growth = max(1.0, x.size / before)
        unresolved += coarse
        seg = _seg_lengths(x, y)
        total = float(seg.sum())
        log_lengths.append(log_scale + math.log(total))
        vertices.append(int(x.size))
        log.debug("iterate %d: %d vertices, log length %.6f", it + 1, x.size, log_lengths[-1])
        if renormalize and x.size > vertex_budget // growth:
            keep = max(16, int(vertex_budget / (2 * growth)))
            kept = float(seg[:keep - 1].sum())
            x, y = x[:keep].copy(), y[:keep].copy()
            log_scale += math.log(total) - math.log(kept)
            truncations += 1
    window = int(math.ceil(iters / 2))
    ent = fit_growth(log_lengths, window)
    bound = burau_matrix(sched.word)
    return EntropyReport(
        word=format_word(sched.word),
        iters=iters,
        h_max=h_max,
        lengths=[math.exp(v) for v in log_lengths],
        entropy=ent,
        burau_bound=bound.value,
        log_burau=bound.log_value,
        fit_window=window,
        truncations=truncations,
        unresolved_segments=unresolved,
        vertices=vertices,
    )
