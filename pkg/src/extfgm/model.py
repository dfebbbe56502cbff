"""Density, distribution function and marginals of the extended FGM copula."""
import logging

import numpy as np

from .basis import _cap_phi_raw, _phi_raw, _as_unit
from .errors import InvalidParametersError
from .params import (
    ParamVector,
    canonical_masks,
    check_validity,
    indices_from_mask,
    mask_from_indices,
    n_subsets,
    popcount,
)

logger = logging.getLogger(__name__)


def product_table(factors):
    """All subset products of per-coordinate factors.

    Parameters
    ----------
    factors : ndarray, shape (n, d)

    Returns
    -------
    ndarray, shape (n, 2^d)
        Column ``mask`` holds ``prod_{i in mask} factors[:, i]``; column 0 is 1.
    """
    n, d = factors.shape
    table = np.ones((n, 1))
    for i in range(d):
        table = np.concatenate([table, table * factors[:, i : i + 1]], axis=1)
    return table


def mixed_product_table(inside, outside):
    """Column ``mask``: product of `inside` over members and `outside` over the rest."""
    n, d = inside.shape
    table = np.ones((n, 1))
    for i in range(d):
        table = np.concatenate(
            [table * outside[:, i : i + 1], table * inside[:, i : i + 1]], axis=1
        )
    return table


def basis_features(u, d):
    """Per-order matrices of ``prod_{m in M} phi_k(u_m)`` in canonical column order.

    Returns a tuple ``(F1, F2)`` each of shape ``(n, 2^d - d - 1)``.
    """
    cols = np.array(canonical_masks(d))
    return tuple(product_table(_phi_raw(k, u))[:, cols] for k in (1, 2))


def _as_points(u, d):
    arr = _as_unit(u)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != d:
        raise ValueError(f"expected points of dimension {d}, got {arr.shape[1]}")
    return arr, single


def density_values(params, u):
    """Density of `params` at rows of `u` without any validity requirement."""
    pts, single = _as_points(u, params.d)
    f1, f2 = basis_features(pts, params.d)
    out = 1.0 + f1 @ params.values[0] + f2 @ params.values[1]
    return out[0] if single else out


class CopulaModel:
    """An extended FGM copula with a validated parameter vector.

    Parameters
    ----------
    params : ParamVector
        Coefficients; validated on construction.

    Raises
    ------
    InvalidParametersError
        If `params` fails the sufficient validity constraint.

    Notes
    -----
    :meth:`unchecked` builds a model from a vector that fails the
    constraint. Its density may dip below zero, so sampling then follows
    the bracketed root-finding procedure literally rather than drawing from
    a genuine copula.
    """

    def __init__(self, params):
        if not isinstance(params, ParamVector):
            raise TypeError("params must be a ParamVector")
        self.params = params.validate()
        self.checked = True

    @classmethod
    def unchecked(cls, params, quiet=False):
        obj = cls.__new__(cls)
        res = check_validity(params)
        if not res.valid and not quiet:
            logger.warning(
                "building an unchecked model whose constraint sum is %.4g", res.total
            )
        obj.params = params.validate() if res.valid else params
        obj.checked = res.valid
        return obj

    @classmethod
    def independence(cls, d):
        return cls(ParamVector.zeros(d))

    @property
    def d(self):
        return self.params.d

    def __repr__(self):
        return f"CopulaModel(d={self.d}, active={self.params.n_active()}, checked={self.checked})"

    def density(self, u):
        return density(self, u)

    def cdf(self, u):
        return cdf(self, u)


def _require_model(m):
    if not isinstance(m, CopulaModel):
        raise TypeError("expected a CopulaModel")
    if not m.params.validated and m.checked:
        raise InvalidParametersError("model parameters are not validated")


def density(m, u):
    """Copula density at a point or at each row of an ``(n, d)`` array."""
    _require_model(m)
    return density_values(m.params, u)


def cdf(m, u):
    """Copula distribution function at a point or at each row of `u`."""
    _require_model(m)
    p = m.params
    pts, single = _as_points(u, p.d)
    cols = np.array(canonical_masks(p.d))
    out = np.prod(pts, axis=1)
    for k in (1, 2):
        table = mixed_product_table(_cap_phi_raw(k, pts), pts)
        out = out + table[:, cols] @ p.values[k - 1]
    return out[0] if single else out


def subvector_params(params, keep):
    """Coefficients of the marginal law of the variables in mask `keep`.

    Only coefficients whose subset lies inside `keep` survive, with indices
    relabelled to ``1..|keep|`` in increasing order.
    """
    size = popcount(keep)
    if size < 2:
        raise ValueError("a marginal copula needs at least two variables")
    if keep >> params.d:
        raise ValueError(f"mask {keep} has bits beyond dimension {params.d}")
    members = indices_from_mask(keep)
    relabel = {old: new for new, old in enumerate(members, start=1)}
    sub_masks = canonical_masks(size)
    vals = np.zeros((2, n_subsets(size)))
    for j, m in enumerate(canonical_masks(params.d)):
        if m & ~keep:
            continue
        new = mask_from_indices(relabel[i] for i in indices_from_mask(m))
        vals[:, sub_masks.index(new)] = params.values[:, j]
    return ParamVector(size, vals, validated=params.validated)


def subvector_model(m, keep):
    """Marginal copula model of the variables selected by mask `keep`."""
    _require_model(m)
    sub = subvector_params(m.params, keep)
    return CopulaModel(sub) if m.checked else CopulaModel.unchecked(sub)
