"""Localized-rotation generating function and its twist certificates.

A generator shape is the generating function

    g(x, X) = (x - X)^2 / (2 sin θ) - 1/2 Σ_k P((x-k)^2 + (X-k)^2),

with P(t) = t ρ(t) and ρ = ξ c_ε a flat-topped bump. Inside t ≤ ε it
generates the rigid rotation by θ, outside t ≥ 2ε the pure shear
(x, y) -> (x + y sin θ, y). Coordinates handed to :func:`g_eval` are taken
relative to the shape center; the translate k is the nearest one.

All evaluators accept numpy arrays and broadcast.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import expit


@dataclass(frozen=True)
class MollifierValue:
    value: np.ndarray | float
    d1: np.ndarray | float
    d2: np.ndarray | float


def _mollifier_a(t):
    t = np.asarray(t, dtype=float)
    pos = t > 0
    ts = np.where(pos, t, 1.0)
    a = np.where(pos, np.exp(-1.0 / ts), 0.0)
    d1 = np.where(pos, a / ts**2, 0.0)
    d2 = np.where(pos, a * (1.0 / ts**4 - 2.0 / ts**3), 0.0)
    return a, d1, d2


def _mollifier_b(t):
    # b = 1 / (1 + exp(phi)), phi = 1/t - 1/(1-t) on (0, 1)
    t = np.asarray(t, dtype=float)
    inside = (t > 0) & (t < 1)
    ts = np.where(inside, t, 0.5)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        phi = 1.0 / ts - 1.0 / (1.0 - ts)
        dphi = -1.0 / ts**2 - 1.0 / (1.0 - ts) ** 2
        ddphi = 2.0 / ts**3 - 2.0 / (1.0 - ts) ** 3
        b = expit(-phi)
        bb = b * expit(phi)
        d1 = -bb * dphi
        d2 = -d1 * (1.0 - 2.0 * b) * dphi - bb * ddphi
    # bb underflows to 0 long before dphi overflows; derivatives are flat there
    live = inside & (bb > 0) & np.isfinite(d2)
    value = np.where(inside, b, np.where(t >= 1, 1.0, 0.0))
    d1 = np.where(live, d1, 0.0)
    d2 = np.where(live, d2, 0.0)
    return value, d1, d2


def _mollifier_c(t, eps):
    v, d1, d2 = _mollifier_b(2.0 - np.asarray(t, dtype=float) / eps)
    return v, -d1 / eps, d2 / eps**2


def mollifier_eval(kind: str, t, eps: float | None = None) -> MollifierValue:
    """Evaluate a(t), b(t) or c_ε(t) with first and second derivatives."""
    if kind == "a":
        out = _mollifier_a(t)
    elif kind == "b":
        out = _mollifier_b(t)
    elif kind in ("c", "c_eps"):
        if eps is None or eps <= 0:
            raise ValueError("c_eps needs eps > 0")
        out = _mollifier_c(t, eps)
    else:
        raise ValueError(f"unknown mollifier {kind!r}")
    if np.ndim(t) == 0:
        out = tuple(float(v) for v in out)
    return MollifierValue(*out)


@dataclass(frozen=True)
class GeneratorShape:
    """One localized rotation by ``sign * pi / (2q)``.

    ``xi_scale`` multiplies ξ and exists only to build deliberately broken
    shapes for certificate tests.
    """

    q: int
    eps: float
    center: float = 0.0
    sign: int = 1
    xi_scale: float = 1.0

    def __post_init__(self):
        if self.q < 3:
            raise ValueError(f"subdivision q must be >= 3, got {self.q}")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if math.sqrt(2 * self.eps) >= 0.5:
            raise ValueError(
                f"bump radius sqrt(2 eps) = {math.sqrt(2 * self.eps):.3f} must stay below 1/2")

    @property
    def theta(self) -> float:
        return self.sign * math.pi / (2 * self.q)

    @property
    def sin_theta(self) -> float:
        return math.sin(self.theta)

    @property
    def cos_theta(self) -> float:
        return math.cos(self.theta)

    @property
    def xi(self) -> float:
        return self.xi_scale * math.tan(self.theta / 2)

    @property
    def m_iters(self) -> int:
        return 2 * self.q

    def with_center(self, center: float) -> GeneratorShape:
        return GeneratorShape(self.q, self.eps, center, self.sign, self.xi_scale)


def rho_eval(shape: GeneratorShape, t) -> MollifierValue:
    v, d1, d2 = _mollifier_c(t, shape.eps)
    xi = shape.xi
    out = (xi * v, xi * d1, xi * d2)
    if np.ndim(t) == 0:
        out = tuple(float(v) for v in out)
    return MollifierValue(*out)


def _bump_profile(shape: GeneratorShape, t):
    """P(t) = t ρ(t) and its first two derivatives."""
    v, d1, d2 = _mollifier_c(t, shape.eps)
    xi = shape.xi
    rho, rho1, rho2 = xi * v, xi * d1, xi * d2
    return t * rho, rho + t * rho1, 2.0 * rho1 + t * rho2


@dataclass(frozen=True)
class GPartials:
    g: np.ndarray
    g_x: np.ndarray
    g_X: np.ndarray
    g_xx: np.ndarray
    g_xX: np.ndarray
    g_XX: np.ndarray


def nearest_translate(x, X):
    """Integer k minimizing (x-k)^2 + (X-k)^2."""
    return np.floor(0.5 * (np.asarray(x) + np.asarray(X)) + 0.5)


def g_eval(shape: GeneratorShape, x, X) -> GPartials:
    """g and its partials; ``x``, ``X`` are lifted and relative to the center."""
    x = np.asarray(x, dtype=float)
    X = np.asarray(X, dtype=float)
    s = shape.sin_theta
    k = nearest_translate(x, X)
    u = x - k
    v = X - k
    t = u * u + v * v
    P, P1, P2 = _bump_profile(shape, t)
    d = x - X
    out = GPartials(
        g=d * d / (2 * s) - 0.5 * P,
        g_x=d / s - u * P1,
        g_X=-d / s - v * P1,
        g_xx=1.0 / s - P1 - 2.0 * u * u * P2,
        g_xX=-1.0 / s - 2.0 * u * v * P2,
        g_XX=1.0 / s - P1 - 2.0 * v * v * P2,
    )
    if out.g.ndim == 0:
        out = GPartials(*(float(a) for a in asdict(out).values()))
    return out


def g_translate_sum(shape: GeneratorShape, x, X, kmax: int = 2):
    """g with the translate sum written out over |k| <= kmax (no nearest-image shortcut)."""
    x = np.asarray(x, dtype=float)
    X = np.asarray(X, dtype=float)
    s = shape.sin_theta
    total = (x - X) ** 2 / (2 * s)
    base = np.floor(0.5 * (x + X))
    for dk in range(-kmax, kmax + 1):
        k = base + dk
        t = (x - k) ** 2 + (X - k) ** 2
        total = total - 0.5 * _bump_profile(shape, t)[0]
    return total


# ---------------------------------------------------------------------------
# certificates

@dataclass
class CertReport:
    name: str
    passed: bool
    extremum: float
    arg_extremum: list[float]
    grid: dict
    margin: float
    threshold: float = field(default=0.0)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": bool(self.passed),
            "extremum": float(self.extremum),
            "arg_extremum": [float(a) for a in self.arg_extremum],
            "grid": self.grid,
            "margin": float(self.margin),
            "threshold": float(self.threshold),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


TwistReport = CertReport


@dataclass(frozen=True)
class GridSpec:
    half_width: float = 0.5
    points: int = 201

    def axes(self):
        return np.linspace(-self.half_width, self.half_width, self.points)


def certify_rho(shape: GeneratorShape, grid_points: int = 4000) -> CertReport:
    """Sup over t in (0, 2ε] of 2t |ρ'' t/2 + ρ'| |sin θ|; passes below 1.

    This bounds |g_xX + 1/sin θ| |sin θ| from above, so a pass implies
    g_xX has the sign of -1/sin θ everywhere.
    """
    if grid_points < 100:
        raise ValueError("grid_points must be >= 100")
    t = np.linspace(0.0, 2 * shape.eps, grid_points + 1)[1:]
    r = rho_eval(shape, t)
    vals = 2 * t * np.abs(0.5 * r.d2 * t + r.d1) * abs(shape.sin_theta)
    i = int(np.argmax(vals))
    sup = float(vals[i])
    return CertReport(
        name="rho",
        passed=sup < 1.0,
        extremum=sup,
        arg_extremum=[float(t[i])],
        grid={"t_max": 2 * shape.eps, "points": grid_points},
        margin=1.0 - sup,
        threshold=1.0,
    )


def certify_twist(shape: GeneratorShape, grid: GridSpec = GridSpec()) -> CertReport:
    """Grid minimum of -sign(θ) g_xX around the bump; passes at >= 0.5/|sin θ|."""
    if grid.points < 200:
        raise ValueError("twist grid needs at least 200 points per axis")
    ax = grid.axes()
    xx, XX = np.meshgrid(ax, ax, indexing="ij")
    vals = -shape.sign * g_eval(shape, xx, XX).g_xX
    i = np.unravel_index(int(np.argmin(vals)), vals.shape)
    low = float(vals[i])
    threshold = 0.5 / abs(shape.sin_theta)
    return CertReport(
        name="twist",
        passed=low >= threshold,
        extremum=low,
        arg_extremum=[float(xx[i]), float(XX[i])],
        grid={"half_width": grid.half_width, "points": grid.points},
        margin=low - threshold,
        threshold=threshold,
    )


@lru_cache(maxsize=64)
def bump_gradient_bound(shape: GeneratorShape) -> float:
    """Upper bound for sqrt(t) |P'(t)|, i.e. for the bump part of g_x and g_X."""
    t = np.linspace(0.0, 2 * shape.eps, 20001)
    _, P1, _ = _bump_profile(shape, t)
    return 1.25 * float(np.max(np.sqrt(t) * np.abs(P1))) + 1e-12
