"""Shared numerical kernels: adaptive quadrature, root finding, Richardson
extrapolation, counter-based Monte Carlo streams and a cyclic-coordinate
maximizer."""

from __future__ import annotations

import heapq
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar


class QuadratureWarning(UserWarning):
    """Raised (as a warning) when the subdivision budget runs out."""


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    intervals: int
    converged: bool

    def __float__(self):
        return self.value


# Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
_XK = np.array([
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245, 0.405845151377397166906606412076961,
    0.586087235467691130294144845693013, 0.741531185599394439863864773280788,
    0.864864423359769072789712788640926, 0.949107912342758524526189684047851,
    0.991455371120812639206854697526329])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970])
_WG = np.zeros(15)
_WG[1::2] = [0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
             0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
             0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
             0.129484966168869693270611432679082]


def _gk15(f, a, b):
    c, r = 0.5 * (a + b), 0.5 * (b - a)
    y = np.asarray(f(c + r * _XK), dtype=float)
    k = r * (_WK @ y)
    g = r * (_WG @ y)
    return k, abs(k - g)


def integrate_1d(f: Callable, a: float, b: float, spec: QuadratureSpec | None = None,
                 full_output: bool = False):
    """Adaptive Gauss-Kronrod (7/15) quadrature with bisection of the worst interval.

    ``f`` is called with a numpy array of 15 abscissae and must return the
    same number of values.  When the subdivision budget is exhausted a
    QuadratureWarning carries the best estimate and its error bound.
    """
    spec = spec or QuadratureSpec()
    if not a < b:
        if a == b:
            return QuadResult(0.0, 0.0, 0, True) if full_output else 0.0
        raise ValueError("integrate_1d needs a < b")
    v, e = _gk15(f, a, b)
    heap = [(-e, a, b, v, e)]
    total, err = v, e
    n = 1
    while err > max(spec.abs_tol, spec.rel_tol * abs(total)):
        if n >= spec.max_subdivisions:
            warnings.warn(f"quadrature budget exhausted: estimate {total!r}, error bound {err:.3e}",
                          QuadratureWarning, stacklevel=2)
            res = QuadResult(float(total), float(err), n, False)
            return res if full_output else res.value
        _, lo, hi, v0, e0 = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        total += v1 + v2 - v0
        err += e1 + e2 - e0
        heapq.heappush(heap, (-e1, lo, mid, v1, e1))
        heapq.heappush(heap, (-e2, mid, hi, v2, e2))
        n += 1
    # resum to drop accumulated cancellation from the running updates
    total = float(sum(item[3] for item in sorted(heap, key=lambda t: t[1])))
    err = float(sum(item[4] for item in heap))
    res = QuadResult(total, err, n, True)
    return res if full_output else res.value


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0):
    """Nodes and weights of the n-point Gauss-Legendre rule on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def find_root(f: Callable[[float], float], bracket: Sequence[float], tol: float = 1e-12,
              maxiter: int = 200) -> float:
    a, b = float(bracket[0]), float(bracket[1])
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if not np.isfinite(fa) or not np.isfinite(fb) or fa * fb > 0:
        raise ValueError(f"invalid bracket [{a}, {b}]: f values {fa}, {fb}")
    return float(brentq(f, a, b, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=maxiter))


@dataclass(frozen=True)
class RichardsonResult:
    value: float
    spread: float
    reliable: bool
    extrapolants: tuple


def richardson_limit(samples, order: float = 1.0, tol: float = 5e-3) -> RichardsonResult:
    """Extrapolate v(eps) to eps -> 0 assuming v = v0 + c1*eps**order + c2*eps**(order+1) + ...

    Adjacent pairs give first-level extrapolants (the eps**order term
    removed); their spread measures consistency.  The returned value removes
    the next power as well, using the three smallest eps.
    """
    pts = sorted(((float(e), float(v)) for e, v in samples), key=lambda t: -t[0])
    if len(pts) < 3:
        raise ValueError("richardson_limit needs at least 3 samples")
    eps = np.array([p[0] for p in pts])
    val = np.array([p[1] for p in pts])
    r1 = (eps[:-1] / eps[1:]) ** order
    first = (r1 * val[1:] - val[:-1]) / (r1 - 1)
    r2 = (eps[:-2] / eps[1:-1]) ** (order + 1)
    second = (r2 * first[1:] - first[:-1]) / (r2 - 1)
    value = float(second[-1])
    tail = first[-3:]
    spread = float(tail.max() - tail.min())
    scale = max(abs(value), 1e-300)
    diffs = np.diff(first)
    monotone = bool(np.all(diffs >= 0) or np.all(diffs <= 0))
    reliable = spread <= tol * scale and (monotone or spread <= 1e-12 * scale + 1e-300)
    return RichardsonResult(value, spread, bool(reliable), tuple(float(x) for x in first))


class RngStream:
    """Counter-based random stream keyed by (seed, stream).

    Blocks are addressed by index, so any partition of the sample range
    into blocks reproduces the same numbers.
    """

    BLOCK = 1 << 16

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed) & (2**64 - 1)
        self.stream = int(stream) & (2**64 - 1)

    def block(self, index: int) -> np.random.Generator:
        bitgen = np.random.Philox(key=[self.seed, self.stream])
        # each block owns 2**40 draws of the counter space
        bitgen.advance(int(index) << 40)
        return np.random.Generator(bitgen)

    def uniform(self, n: int, dim: int = 1, block_size: int | None = None) -> np.ndarray:
        bs = block_size or self.BLOCK
        out = np.empty((n, dim))
        for b, start in enumerate(range(0, n, bs)):
            m = min(bs, n - start)
            out[start:start + m] = self.block(b).random((m, dim))
        return out

    def normal(self, n: int, dim: int = 1, block_size: int | None = None) -> np.ndarray:
        bs = block_size or self.BLOCK
        out = np.empty((n, dim))
        for b, start in enumerate(range(0, n, bs)):
            m = min(bs, n - start)
            out[start:start + m] = self.block(b).standard_normal((m, dim))
        return out


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n: int


def monte_carlo(f: Callable[[np.ndarray], np.ndarray], rng: RngStream, n: int, dim: int,
                batches: int = 16) -> MCEstimate:
    """Mean of f over uniform samples in [0,1]^dim with batch-means standard error."""
    u = rng.uniform(n, dim)
    vals = np.asarray(f(u), dtype=float)
    parts = np.array_split(vals, batches)
    means = np.array([p.mean() for p in parts])
    return MCEstimate(float(vals.mean()), float(means.std(ddof=1) / np.sqrt(batches)), n)


def cyclic_coordinate_max(f: Callable[[np.ndarray], float], x0, step: float | Sequence[float],
                          sweeps: int = 50, tol: float = 1e-10):
    """Maximize f by golden-section line searches along each coordinate in turn.

    Each line search is restricted to [x_i - step_i, x_i + step_i].
    Returns (x, f(x), number of sweeps used).
    """
    x = np.array(x0, dtype=float)
    steps = np.broadcast_to(np.asarray(step, dtype=float), x.shape).copy()
    best = f(x)
    for sweep in range(1, sweeps + 1):
        prev = best
        for i in range(x.size):
            def g(t, i=i):
                y = x.copy()
                y[i] = t
                return -f(y)
            r = minimize_scalar(g, bounds=(x[i] - steps[i], x[i] + steps[i]), method="bounded",
                                options={"xatol": tol})
            if -r.fun > best:
                x[i] = r.x
                best = -r.fun
        if abs(best - prev) <= tol * max(1.0, abs(best)):
            return x, best, sweep
    return x, best, sweeps
