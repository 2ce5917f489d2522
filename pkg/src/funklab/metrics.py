"""Funk, reverse-Funk and Hilbert distances, Finsler norms, curve lengths and
outward Funk balls inside a planar convex body."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import GeometryError, NotInteriorError, SupportBody2, TWO_PI, unit, unit_perp
from .numerics import QuadratureSpec, integrate_1d

KINDS = ("funk", "reverse_funk", "hilbert")
_EDGE = 1e-9


@dataclass(frozen=True)
class FunkContext:
    L: SupportBody2
    chart: str = "standard"


@dataclass(frozen=True)
class Polyline:
    points: np.ndarray
    closed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "points", np.atleast_2d(np.asarray(self.points, dtype=float)))


@dataclass(frozen=True)
class ParamCurve:
    """Curve t -> gamma(t) on [t0, t1] with velocity; closed curves use the periodic rule."""
    position: Callable
    velocity: Callable
    t0: float = 0.0
    t1: float = TWO_PI
    closed: bool = True


def _ctx(ctx):
    return ctx if isinstance(ctx, FunkContext) else FunkContext(ctx)


def _check_interior(L, pts):
    pts = np.atleast_2d(pts)
    g = L.gauge_from(np.zeros_like(pts) + L.steiner_point, pts - L.steiner_point)
    if np.any(g >= 1.0):
        raise NotInteriorError("point is not interior to the ambient body")


def funk_distance(L: SupportBody2, x, y):
    """d^F(x, y) = log(t_b / (t_b - 1)) with x + t_b (y - x) the forward exit."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_interior(L, np.stack(np.broadcast_arrays(x, y)).reshape(-1, 2))
    v = y - x
    zero = np.linalg.norm(v, axis=-1) == 0
    v = np.where(zero[..., None], np.array([1e-9, 0.0]), v)  # any short vector; result is masked
    g = L.gauge_from(x, v)
    # t_b = 1/g, so t_b/(t_b-1) = 1/(1-g)
    d = -np.log1p(-g)
    return np.where(zero, 0.0, d) if np.ndim(d) else (0.0 if zero else float(d))


def distance(ctx, kind: str, x, y):
    L = _ctx(ctx).L
    if kind == "funk":
        return funk_distance(L, x, y)
    if kind == "reverse_funk":
        return funk_distance(L, y, x)
    if kind == "hilbert":
        return 0.5 * (funk_distance(L, x, y) + funk_distance(L, y, x))
    raise ValueError(f"unknown metric kind {kind!r}; choose from {KINDS}")


def funk_norm(ctx, x, v):
    """Finsler norm phi(x, v) = ||v||_{L - x} = 1 / (exit time along v)."""
    L = _ctx(ctx).L
    x = np.asarray(x, dtype=float)
    _check_interior(L, x.reshape(-1, 2))
    return L.gauge_from(x, np.asarray(v, dtype=float))


def _norm_kind(L, kind, x, v):
    if kind == "funk":
        return L.gauge_from(x, v)
    if kind == "reverse_funk":
        return L.gauge_from(x, -v)
    raise ValueError(kind)


def curve_length(ctx, kind: str, curve, n: int = 256, spec: QuadratureSpec | None = None):
    """Length of a polyline or parametrized curve in the chosen metric.

    Hilbert length is the mean of the funk and reverse-funk lengths.
    Closed parametrized curves use the periodic trapezoid rule with n nodes;
    open ones use adaptive Gauss-Kronrod.
    """
    L = _ctx(ctx).L
    if kind == "hilbert":
        return 0.5 * (curve_length(ctx, "funk", curve, n, spec)
                      + curve_length(ctx, "reverse_funk", curve, n, spec))
    if kind not in KINDS:
        raise ValueError(f"unknown metric kind {kind!r}")
    if isinstance(curve, Polyline):
        P = curve.points
        if curve.closed:
            P = np.vstack([P, P[:1]])
        _check_interior(L, P)
        a, b = P[:-1], P[1:]
        if kind == "reverse_funk":
            a, b = b, a
        return float(np.sum(funk_distance(L, a, b)))
    if isinstance(curve, SupportBody2):
        curve = boundary_curve(curve)
    if not isinstance(curve, ParamCurve):
        raise TypeError("curve must be a Polyline, ParamCurve or SupportBody2 boundary")

    def integrand(t):
        X = curve.position(t)
        V = curve.velocity(t)
        if np.any(L.gauge_from(np.zeros_like(X) + L.steiner_point, X - L.steiner_point) > 1 - _EDGE):
            raise NotInteriorError("curve touches the boundary of the ambient body")
        return _norm_kind(L, kind, X, V)

    if curve.closed:
        t = curve.t0 + (curve.t1 - curve.t0) * np.arange(n) / n
        return float(np.sum(integrand(t)) * (curve.t1 - curve.t0) / n)
    return integrate_1d(integrand, curve.t0, curve.t1, spec or QuadratureSpec(1e-12, 1e-11))


def boundary_curve(K: SupportBody2) -> ParamCurve:
    """The boundary of a smooth body parametrized by its normal angle."""
    return ParamCurve(K.boundary, K.boundary_derivative, 0.0, TWO_PI, True)


def circle_curve(radius: float, center=(0.0, 0.0)) -> ParamCurve:
    c = np.asarray(center, dtype=float)
    return ParamCurve(lambda t: c + radius * unit(t), lambda t: radius * unit_perp(t))


def push_curve(g, curve: ParamCurve) -> ParamCurve:
    """Image of a parametrized curve under a projective map."""
    return ParamCurve(lambda t: g.apply(curve.position(t)),
                      lambda t: g.push_vectors(curve.position(t), curve.velocity(t)),
                      curve.t0, curve.t1, curve.closed)


def funk_ball(ctx, q, r: float) -> SupportBody2:
    """Outward Funk ball q + (1 - e^-r)(L - q)."""
    L = _ctx(ctx).L
    q = np.asarray(q, dtype=float)
    _check_interior(L, q.reshape(1, 2))
    if r < 0:
        raise ValueError("radius must be nonnegative")
    return L.homothet(q, -np.expm1(-r))
