"""Sequential conditional-inversion sampling and the Rosenblatt transform.

Given the first ``l - 1`` coordinates, the conditional law of coordinate
``l`` has the cubic distribution function

    F(t) = t + delta1 * Phi_1(t) + delta2 * Phi_2(t),

whose coefficients are the ratios of the prefix sums of the coefficients
touching ``l`` to the prefix density. Sampling inverts ``F`` at uniform
draws; the Rosenblatt transform evaluates it at the observed coordinate.
"""
from dataclasses import dataclass

import numpy as np

from .basis import _cap_phi_raw, _phi_raw, _as_unit
from .errors import ConvergenceError, DomainError, SingularPrefixError
from .model import _require_model
from .params import canonical_masks, popcount

PREFIX_EPS = 1e-12
CLAMP_EPS = 1e-15
INVERT_TOL = 1e-12
INVERT_MAXITER = 200


def substream(seed, *key):
    """Independent generator for ``(seed, key...)``.

    Each key tuple gets its own Philox counter stream, so replications can be
    scheduled on any number of workers and still draw the same numbers.
    """
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ConditionalCoeffs:
    """Coefficients of the conditional cubic; scalars or equal-shape arrays."""

    delta1: object
    delta2: object


@dataclass(frozen=True, eq=False)
class SampleBatch:
    n: int
    d: int
    rows: np.ndarray
    seed: int
    model_hash: str
    stream: tuple = ()


class _PrefixSystem:
    """Per-position coefficient vectors for the conditional cubics.

    For the coordinate at 0-based position ``l`` and every subset ``S`` of
    the prefix ``{0, .., l-1}`` (as a bitmask) it stores the numerator
    weights ``lambda_{S + {l}}`` and the prefix-density weights
    ``lambda_S`` (``|S| >= 2``).
    """

    def __init__(self, params):
        self.params = params
        self.d = params.d
        pos = {m: i for i, m in enumerate(canonical_masks(self.d))}
        vals = params.values
        self.num = [None]
        self.den = [None]
        for l in range(1, self.d):
            size = 1 << l
            num = np.zeros((2, size))
            den = np.zeros((2, size))
            for s in range(1, size):
                num[:, s] = vals[:, pos[s | (1 << l)]]
                if popcount(s) >= 2:
                    den[:, s] = vals[:, pos[s]]
            self.num.append(num)
            self.den.append(den)

    def coefficients(self, tables, l, strict):
        """Deltas at position `l` given prefix product tables for both orders."""
        c = 1.0 + tables[0] @ self.den[l][0] + tables[1] @ self.den[l][1]
        bad = c <= PREFIX_EPS if strict else np.abs(c) <= PREFIX_EPS
        if np.any(bad):
            row = int(np.flatnonzero(bad)[0])
            raise SingularPrefixError(
                f"prefix density {c[row]!r} at row {row}, coordinate {l + 1}"
            )
        d1 = (tables[0] @ self.num[l][0]) / c
        d2 = (tables[1] @ self.num[l][1]) / c
        return d1, d2


def _extend(tables, column):
    return [
        np.concatenate([t, t * _phi_raw(k, column)[:, None]], axis=1)
        for k, t in zip((1, 2), tables)
    ]


def conditional_coeffs(m, prefix, ell):
    """Conditional cubic coefficients of coordinate `ell` (1-based, >= 2).

    Parameters
    ----------
    m : CopulaModel
    prefix : array_like, shape (ell - 1,) or (n, ell - 1)
        Conditioning values of coordinates ``1 .. ell - 1``.
    ell : int

    Raises
    ------
    SingularPrefixError
        If the prefix density is at most ``1e-12``.
    """
    _require_model(m)
    if not 2 <= ell <= m.d:
        raise ValueError(f"ell must lie in 2..{m.d}, got {ell}")
    pre = _as_unit(prefix)
    single = pre.ndim == 1
    pre = np.atleast_2d(pre)
    if pre.shape[1] != ell - 1:
        raise ValueError(f"prefix must have {ell - 1} coordinates")
    system = _PrefixSystem(m.params)
    tables = [np.ones((pre.shape[0], 1)), np.ones((pre.shape[0], 1))]
    for j in range(ell - 1):
        tables = _extend(tables, pre[:, j])
    d1, d2 = system.coefficients(tables, ell - 1, m.checked)
    if single:
        return ConditionalCoeffs(float(d1[0]), float(d2[0]))
    return ConditionalCoeffs(d1, d2)


def _cubic(d1, d2, t):
    return t + d1 * _cap_phi_raw(1, t) + d2 * _cap_phi_raw(2, t)


def _cubic_slope(d1, d2, t):
    return 1.0 + d1 * _phi_raw(1, t) + d2 * _phi_raw(2, t)


def conditional_cdf(c, t):
    """Evaluate the conditional cubic at `t` in [0, 1].

    Equal to ``2 sqrt5 D2 t^3 + (sqrt3 D1 - 3 sqrt5 D2) t^2 + (1 - sqrt3 D1 + sqrt5 D2) t``.
    """
    t = _as_unit(t)
    out = _cubic(np.asarray(c.delta1, float), np.asarray(c.delta2, float), t)
    return out[()] if np.ndim(out) == 0 else out


def _invert(d1, d2, v, tol=INVERT_TOL, maxiter=INVERT_MAXITER):
    """Vectorised safeguarded Newton on the sign-change bracket [0, 1].

    ``F(0) = 0`` and ``F(1) = 1`` always bracket a root of ``F - v``; Newton
    steps are accepted only while they stay inside the shrinking bracket and
    halve the residual fast enough, otherwise the bracket is bisected.
    """
    d1, d2, v = np.broadcast_arrays(
        np.asarray(d1, float), np.asarray(d2, float), np.asarray(v, float)
    )
    lo = np.zeros(v.shape)
    hi = np.ones(v.shape)
    t = v.copy()
    dx_old = np.ones(v.shape)
    for _ in range(maxiter):
        resid = _cubic(d1, d2, t) - v
        done = np.abs(resid) <= tol
        if done.all():
            return t
        lo = np.where(resid < 0, t, lo)
        hi = np.where(resid > 0, t, hi)
        slope = _cubic_slope(d1, d2, t)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = resid / slope
        cand = t - step
        newton_ok = (
            (slope > 0)
            & (cand > lo)
            & (cand < hi)
            & (np.abs(2.0 * resid) <= np.abs(dx_old * slope))
        )
        mid = 0.5 * (lo + hi)
        new_t = np.where(newton_ok, cand, mid)
        dx_old = np.where(done, dx_old, np.abs(new_t - t))
        t = np.where(done, t, new_t)
    resid = np.abs(_cubic(d1, d2, t) - v)
    worst = int(np.argmax(resid)) if resid.ndim else 0
    raise ConvergenceError(
        f"conditional inversion missed tolerance {tol:g} (residual "
        f"{float(np.max(resid)):.3g} at element {worst}) after {maxiter} iterations"
    )


def invert_conditional(c, v):
    """Solve ``conditional_cdf(c, t) = v`` for ``t`` in [0, 1].

    Raises
    ------
    ConvergenceError
        If the residual tolerance ``1e-12`` is not reached.
    """
    v = np.asarray(v, float)
    if np.any(v < 0) or np.any(v > 1) or np.any(np.isnan(v)):
        raise DomainError("v must lie in [0, 1]")
    out = _invert(c.delta1, c.delta2, v)
    return out[()] if out.ndim == 0 else out


def inverse_rosenblatt(m, v):
    """Map rows of uniforms `v` to copula draws by sequential inversion."""
    _require_model(m)
    v = _as_unit(v)
    single = v.ndim == 1
    v = np.atleast_2d(v)
    if v.shape[1] != m.d:
        raise ValueError(f"expected {m.d} columns")
    n = v.shape[0]
    system = _PrefixSystem(m.params)
    u = np.empty_like(v)
    u[:, 0] = v[:, 0]
    tables = _extend([np.ones((n, 1)), np.ones((n, 1))], u[:, 0])
    for l in range(1, m.d):
        d1, d2 = system.coefficients(tables, l, m.checked)
        u[:, l] = _invert(d1, d2, v[:, l])
        if l + 1 < m.d:
            tables = _extend(tables, u[:, l])
    return u[0] if single else u


def rosenblatt(m, u):
    """Forward Rosenblatt transform of a point or rows of `u`.

    Coordinates are clamped to ``[1e-15, 1 - 1e-15]`` first. Under the true
    model the output columns are independent uniforms.
    """
    _require_model(m)
    u = _as_unit(u)
    single = u.ndim == 1
    u = np.clip(np.atleast_2d(u), CLAMP_EPS, 1.0 - CLAMP_EPS)
    if u.shape[1] != m.d:
        raise ValueError(f"expected {m.d} columns")
    n = u.shape[0]
    system = _PrefixSystem(m.params)
    out = np.empty_like(u)
    out[:, 0] = u[:, 0]
    tables = _extend([np.ones((n, 1)), np.ones((n, 1))], u[:, 0])
    for l in range(1, m.d):
        d1, d2 = system.coefficients(tables, l, m.checked)
        out[:, l] = _cubic(d1, d2, u[:, l])
        if l + 1 < m.d:
            tables = _extend(tables, u[:, l])
    return out[0] if single else out


def sample(m, n, seed, stream=()):
    """Draw `n` i.i.d. points from `m`.

    Parameters
    ----------
    m : CopulaModel
    n : int
    seed : int
        Unsigned 64-bit seed.
    stream : tuple of int, optional
        Substream key, e.g. ``(size_index, replication)`` in Monte Carlo
        studies. The output depends only on ``(m, n, seed, stream)``.

    Returns
    -------
    SampleBatch
    """
    _require_model(m)
    if int(n) < 1:
        raise ValueError("n must be at least 1")
    rng = substream(seed, *stream)
    v = rng.random((int(n), m.d))
    try:
        rows = inverse_rosenblatt(m, v)
    except (ConvergenceError, SingularPrefixError) as exc:
        raise type(exc)(f"replication {stream}: {exc}") from exc
    return SampleBatch(int(n), m.d, rows, int(seed), m.params.digest(), tuple(stream))


def empirical_copula(data, points):
    """Empirical distribution of `data` rows evaluated at `points`."""
    data = np.asarray(data, float)
    points = np.atleast_2d(points)
    return np.array([np.mean(np.all(data <= p, axis=1)) for p in points])
