"""Shifted Legendre basis on [0, 1] and its integral tables.

``phi(1, x)`` and ``phi(2, x)`` are the first two orthonormal shifted
Legendre polynomials; ``cap_phi`` are their antiderivatives vanishing at
both ends of the unit interval.
"""
import numpy as np

from .errors import DomainError

SQRT3 = np.sqrt(3.0)
SQRT5 = np.sqrt(5.0)

#: sup |phi_k| on [0, 1], attained at the endpoints
SUP_PHI = {1: SQRT3, 2: SQRT5}

DOMAIN_TOL = 1e-12


def _check_order(k):
    if k not in (1, 2):
        raise ValueError(f"basis order must be 1 or 2, got {k!r}")


def _as_unit(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < -DOMAIN_TOL) or np.any(x > 1 + DOMAIN_TOL) or np.any(np.isnan(x)):
        raise DomainError("argument outside [0, 1]")
    return np.clip(x, 0.0, 1.0)


def phi(k, x):
    """Shifted Legendre function of order `k` evaluated at `x` in [0, 1].

    Parameters
    ----------
    k : {1, 2}
        Polynomial order.
    x : float or array_like
        Evaluation points.

    Returns
    -------
    float or ndarray
        ``sqrt(3)(2x - 1)`` for ``k = 1`` and ``sqrt(5)(6x^2 - 6x + 1)`` for
        ``k = 2``.
    """
    _check_order(k)
    x = _as_unit(x)
    if k == 1:
        out = SQRT3 * (2.0 * x - 1.0)
    else:
        out = SQRT5 * (6.0 * x * x - 6.0 * x + 1.0)
    return out[()] if out.ndim == 0 else out


def cap_phi(k, x):
    """Antiderivative of ``phi(k, .)`` with ``cap_phi(k, 0) = cap_phi(k, 1) = 0``."""
    _check_order(k)
    x = _as_unit(x)
    if k == 1:
        out = SQRT3 * (x * x - x)
    else:
        out = SQRT5 * ((2.0 * x - 3.0) * x * x + x)
    return out[()] if out.ndim == 0 else out


def _phi_raw(k, x):
    # unchecked variants for hot loops that already validated their input
    if k == 1:
        return SQRT3 * (2.0 * x - 1.0)
    return SQRT5 * (6.0 * x * x - 6.0 * x + 1.0)


def _cap_phi_raw(k, x):
    if k == 1:
        return SQRT3 * (x * x - x)
    return SQRT5 * ((2.0 * x - 3.0) * x * x + x)


# Integral tables over [0, 1]:
#   pair(r, z)      = int phi_r phi_z       (orthonormality)
#   triple(k, r, z) = int phi_k phi_r phi_z
TRIPLE_222 = 2.0 * SQRT5 / 7.0
TRIPLE_112 = 2.0 / SQRT5


def pair_integral(r, z):
    return 1.0 if r == z else 0.0


def triple_integral(k, r, z):
    """Integral of ``phi_k phi_r phi_z`` over the unit interval."""
    orders = sorted((k, r, z))
    if orders == [2, 2, 2]:
        return TRIPLE_222
    if orders == [1, 1, 2]:
        return TRIPLE_112
    return 0.0
