"""Generalized (location-scale) Student t marginals and the probability integral transform."""
from dataclasses import dataclass
import math

import numpy as np
from scipy import stats

from .errors import ConvergenceError

CF_MAXITER = 500
CF_EPS = 4 * np.finfo(float).eps
_TINY = 1e-300


@dataclass(frozen=True)
class GenTParams:
    """Location `a`, scale `b` > 0 and degrees of freedom `c` > 0."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError(f"scale must be positive, got {self.b}")
        if not self.c > 0:
            raise ValueError(f"degrees of freedom must be positive, got {self.c}")


#: Marginal fits for the four bearing channels (1, 3, 5, 7), in column order.
BEARING_MARGINALS = (
    GenTParams(-0.119, 0.0877, 16.0),
    GenTParams(-0.116, 0.0905, 26.8),
    GenTParams(-0.115, 0.103, 8.28),
    GenTParams(-0.116, 0.0743, 4.73),
)


def _betacf(a, b, x):
    """Modified Lentz evaluation of the incomplete beta continued fraction."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _TINY, _TINY, d)
    d = 1.0 / d
    h = d.copy()
    for m in range(1, CF_MAXITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        h = h * d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = h * delta
        if np.all(np.abs(delta - 1.0) < CF_EPS):
            return h
    raise ConvergenceError("incomplete beta continued fraction did not converge")


def betainc(a, b, x, y=None):
    """Regularized incomplete beta ``I_x(a, b)`` for scalar `a`, `b` > 0.

    `y` may carry a precomputed ``1 - x`` to avoid cancellation near 1.
    The fraction is evaluated directly below ``x = (a + 1) / (a + b + 2)``
    and through ``1 - I_{1-x}(b, a)`` above it.
    """
    x = np.asarray(x, dtype=float)
    y = 1.0 - x if y is None else np.asarray(y, dtype=float)
    if np.any(x < 0) or np.any(x > 1):
        raise ValueError("x must lie in [0, 1]")
    x, y = np.broadcast_arrays(x, y)
    out = np.empty(x.shape)
    flat_x = x.reshape(-1)
    flat_y = y.reshape(-1)
    res = out.reshape(-1)
    edge0 = flat_x <= 0
    edge1 = flat_y <= 0
    inner = ~(edge0 | edge1)
    res[edge0] = 0.0
    res[edge1] = 1.0
    if np.any(inner):
        xi = flat_x[inner]
        yi = flat_y[inner]
        lbeta = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        front = np.exp(lbeta + a * np.log(xi) + b * np.log(yi))
        direct = xi < (a + 1.0) / (a + b + 2.0)
        val = np.empty(xi.shape)
        if np.any(direct):
            val[direct] = front[direct] * _betacf(a, b, xi[direct]) / a
        if np.any(~direct):
            val[~direct] = 1.0 - front[~direct] * _betacf(b, a, yi[~direct]) / b
        res[inner] = val
    return out[()] if out.ndim == 0 else out


def _standardize(p, x):
    return (np.asarray(x, dtype=float) - p.a) / p.b


def gent_pdf(p, x):
    """Density ``[1 + ((x-a)/(b sqrt c))^2]^{-(c+1)/2} / (b sqrt(c) B(c/2, 1/2))``."""
    c = p.c
    log_norm = (
        math.log(p.b) + 0.5 * math.log(c)
        + math.lgamma(c / 2) + math.lgamma(0.5) - math.lgamma((c + 1) / 2)
    )
    t = _standardize(p, x)
    out = np.exp(-(c + 1) / 2 * np.log1p(t * t / c) - log_norm)
    return out[()] if np.ndim(out) == 0 else out


def gent_cdf(p, x):
    """Distribution function through ``I_{c/(c+t^2)}(c/2, 1/2)``."""
    t = np.asarray(_standardize(p, x), dtype=float)
    c = p.c
    t2 = t * t
    xb = c / (c + t2)
    yb = t2 / (c + t2)
    tail = 0.5 * betainc(c / 2.0, 0.5, xb, yb)
    out = np.where(t > 0, 1.0 - tail, tail)
    return out[()] if out.ndim == 0 else out


def gent_quantile(p, q, tol=1e-12, maxiter=200):
    """Inverse of :func:`gent_cdf` by safeguarded Newton on a bracket.

    The start is the normal quantile scaled by `b`; the bracket is widened
    geometrically until it straddles `q`.
    """
    q = np.asarray(q, dtype=float)
    if np.any(q <= 0) or np.any(q >= 1):
        raise ValueError("quantile levels must lie strictly inside (0, 1)")
    shape = q.shape
    q = q.reshape(-1)
    x = p.a + p.b * stats.norm.ppf(q)
    lo = np.full(q.shape, p.a - p.b)
    hi = np.full(q.shape, p.a + p.b)
    for _ in range(2000):
        low_bad = gent_cdf(p, lo) > q
        high_bad = gent_cdf(p, hi) < q
        if not (low_bad.any() or high_bad.any()):
            break
        span = hi - lo
        lo = np.where(low_bad, lo - span, lo)
        hi = np.where(high_bad, hi + span, hi)
    x = np.clip(x, lo, hi)
    for _ in range(maxiter):
        resid = gent_cdf(p, x) - q
        done = np.abs(resid) <= tol
        if done.all():
            out = x.reshape(shape)
            return out[()] if out.ndim == 0 else out
        lo = np.where(resid < 0, x, lo)
        hi = np.where(resid > 0, x, hi)
        cand = x - resid / gent_pdf(p, x)
        ok = (cand > lo) & (cand < hi)
        new = np.where(ok, cand, 0.5 * (lo + hi))
        x = np.where(done, x, new)
    raise ConvergenceError("generalized-t quantile did not converge")


def pit(data, params):
    """Map each raw column through its marginal distribution function."""
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2:
        raise ValueError("data must be an (n, d) matrix")
    if len(params) != arr.shape[1]:
        raise ValueError(
            f"{len(params)} marginal parameter sets for {arr.shape[1]} columns"
        )
    return np.column_stack([gent_cdf(p, arr[:, j]) for j, p in enumerate(params)])


def pit_ranks(data):
    """Rank-based pseudo-observations ``rank / (n + 1)`` (average ranks for ties)."""
    arr = np.asarray(data, dtype=float)
    return stats.rankdata(arr, axis=0) / (arr.shape[0] + 1.0)
