"""Independent numerical oracles used across the test suite.

These avoid the package's product tables and closed forms: the density is
rebuilt from its definition as a plain sum over subsets, and expectations
are tensor Gauss-Legendre sums, exact for polynomials of the degrees used.
"""
import itertools

import numpy as np

S3 = np.sqrt(3.0)
S5 = np.sqrt(5.0)


def phi_ref(k, x):
    x = np.asarray(x, dtype=float)
    return S3 * (2 * x - 1) if k == 1 else S5 * (6 * x * x - 6 * x + 1)


def cap_phi_ref(k, x):
    x = np.asarray(x, dtype=float)
    return S3 * (x * x - x) if k == 1 else S5 * (2 * x**3 - 3 * x**2 + x)


def gl_nodes(m):
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


def grid(d, m):
    """All points and weights of the ``m``-node tensor rule on ``[0,1]^d``."""
    x, w = gl_nodes(m)
    pts = np.array(list(itertools.product(x, repeat=d)))
    wts = np.prod(np.array(list(itertools.product(w, repeat=d))), axis=1)
    return pts, wts


def density_ref(entries, d, u):
    """``1 + sum lambda prod phi`` from a ``{(k, members): value}`` dict."""
    u = np.atleast_2d(u)
    out = np.ones(u.shape[0])
    for (k, members), lam in entries.items():
        term = np.full(u.shape[0], lam)
        for m in members:
            term = term * phi_ref(k, u[:, m - 1])
        out += term
    return out


def entries_of(p):
    """Convert a ParamVector to ``{(k, tuple of 1-based members): value}``."""
    out = {}
    for (k, mask), v in p.items():
        members = tuple(i + 1 for i in range(p.d) if mask >> i & 1)
        out[(k, members)] = v
    return out


def expect(p, func, m=5):
    """``E[func(U)]`` under the copula with coefficients `p`."""
    pts, wts = grid(p.d, m)
    return float(np.sum(wts * density_ref(entries_of(p), p.d, pts) * func(pts)))


def random_valid_params(rng, d, fill=0.95):
    """Random coefficients scaled so the constraint sum equals `fill`."""
    from extfgm.params import ParamVector, constraint_sum

    p = ParamVector.from_flat(d, rng.uniform(-1, 1, size=2 * (2**d - d - 1)))
    return ParamVector(d, p.values * (fill / constraint_sum(p)))
