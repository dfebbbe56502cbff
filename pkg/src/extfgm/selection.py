"""Likelihood scores, p-value model reduction and Rosenblatt goodness of fit."""
from dataclasses import dataclass
import math

import numpy as np
from scipy import special

from .errors import NonPositiveDensityError
from .estimation import estimate_params
from .model import CopulaModel, density_values
from .params import ParamVector
from .sampling import rosenblatt


def _params_of(m):
    return m.params if isinstance(m, CopulaModel) else m


def loglik(m, data):
    """Sum of log densities of the rows of `data`.

    `m` may be a model or a bare (possibly unvalidated) parameter vector.

    Raises
    ------
    NonPositiveDensityError
        Naming the first row where the density is not strictly positive.
    """
    p = _params_of(m)
    dens = np.atleast_1d(density_values(p, np.atleast_2d(data)))
    bad = np.flatnonzero(~(dens > 0))
    if bad.size:
        raise NonPositiveDensityError(int(bad[0]), float(dens[bad[0]]))
    return float(np.sum(np.log(dens)))


@dataclass(frozen=True)
class ModelScore:
    loglik: float
    p_active: int
    n: int
    aic: float
    bic: float

    @classmethod
    def from_loglik(cls, ll, p_active, n):
        aic = -2.0 * ll + 2.0 * p_active
        bic = -2.0 * ll + p_active * math.log(n)
        return cls(ll, p_active, n, aic, bic)


def score(m, data):
    """Log-likelihood with AIC and BIC; parameters counted as nonzero entries."""
    p = _params_of(m)
    data = np.atleast_2d(data)
    return ModelScore.from_loglik(loglik(p, data), p.n_active(), data.shape[0])


def reduce_model(res, alpha=0.05, mode="pvalue", refit_data=None):
    """Sparse parameter vector derived from an estimation result.

    Parameters
    ----------
    res : EstimationResult
    alpha : float
        Coefficients whose two-sided p-value exceeds `alpha` are zeroed
        (``mode="pvalue"``).
    mode : {"pvalue", "classical"}
        ``"classical"`` keeps every first-order estimate and zeroes the
        second-order block instead.
    refit_data : array_like, optional
        Re-estimate the surviving coefficients on these observations rather
        than keeping the values of `res`.
    """
    p = res.params_hat
    if mode == "classical":
        keep = np.zeros_like(p.values, dtype=bool)
        keep[0] = True
    elif mode == "pvalue":
        keep = (res.pvalues <= alpha).reshape(p.values.shape)
    else:
        raise ValueError("mode must be 'pvalue' or 'classical'")
    values = p.values
    if refit_data is not None:
        values = estimate_params(refit_data).params_hat.values
    return ParamVector(p.d, np.where(keep, values, 0.0))


def ks_uniform(x):
    """One-sample KS statistic against U(0, 1) with its asymptotic p-value."""
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    i = np.arange(1, n + 1)
    stat = max(np.max(i / n - x), np.max(x - (i - 1) / n))
    return float(stat), float(special.kolmogorov(math.sqrt(n) * stat))


@dataclass(frozen=True, eq=False)
class GofReport:
    statistics: np.ndarray
    pvalues: np.ndarray
    level: float
    n: int

    @property
    def rejected(self):
        return self.pvalues <= self.level

    @property
    def passed(self):
        return not bool(np.any(self.rejected))


def gof(m, data, level=0.01):
    """KS uniformity test on each coordinate of the Rosenblatt transform."""
    r = rosenblatt(m, data)
    results = [ks_uniform(r[:, j]) for j in range(r.shape[1])]
    stats_ = np.array([s for s, _ in results])
    pvals = np.array([p for _, p in results])
    return GofReport(stats_, pvals, level, r.shape[0])


def deviation_curve(r):
    """Sorted values with ``ECDF - u`` for each column of transformed data.

    Returns an array of shape ``(n, 2 * d)`` holding ``(u_j, dev_j)`` pairs.
    """
    r = np.atleast_2d(np.asarray(r, dtype=float))
    n = r.shape[0]
    ecdf = np.arange(1, n + 1) / n
    cols = []
    for j in range(r.shape[1]):
        s = np.sort(r[:, j])
        cols.extend([s, ecdf - s])
    return np.column_stack(cols)
