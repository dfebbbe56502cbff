"""Subset masks and the parameter vector of the extended FGM copula.

A variable subset ``M`` of ``{1, ..., d}`` is an integer bitmask with bit
``i - 1`` set when variable ``i`` belongs to ``M``. Parameters are indexed
by ``(k, mask)`` with ``k`` in ``{1, 2}`` and ``popcount(mask) >= 2``.

The canonical order sorts by ``k``, then by subset size, then
lexicographically by the sorted member list, so that for ``d = 4`` the pairs
come out as 12, 13, 14, 23, 24, 34.
"""
from dataclasses import dataclass, field
from functools import lru_cache
import hashlib
from itertools import combinations

import numpy as np

from .basis import SQRT3, SQRT5
from .errors import InvalidParametersError

MAX_DIM = 16
VALIDITY_TOL = 1e-12


def popcount(mask):
    return bin(mask).count("1")


def mask_from_indices(indices):
    """Bitmask of a collection of 1-based variable indices."""
    mask = 0
    for i in indices:
        if i < 1:
            raise ValueError(f"variable indices are 1-based, got {i}")
        mask |= 1 << (i - 1)
    return mask


def indices_from_mask(mask):
    """Sorted 1-based variable indices contained in `mask`."""
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def mask_label(mask, d=None):
    """Compact label such as ``"12"``, or ``"1_10_11"`` once indices exceed 9."""
    idx = indices_from_mask(mask)
    if (d is not None and d > 9) or any(i > 9 for i in idx):
        return "_".join(str(i) for i in idx)
    return "".join(str(i) for i in idx)


def parse_mask_label(label):
    """Inverse of :func:`mask_label`; also accepts ``1-2`` and ``{1,2}``."""
    label = label.strip().strip("{}")
    for sep in ("_", "-", ","):
        if sep in label:
            return mask_from_indices(int(t) for t in label.split(sep) if t)
    return mask_from_indices(int(ch) for ch in label)


def _check_dim(d):
    if not isinstance(d, (int, np.integer)) or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d!r}")
    if d > MAX_DIM:
        raise ValueError(f"dimension {d} exceeds the supported maximum {MAX_DIM}")


@lru_cache(maxsize=None)
def canonical_masks(d):
    """Tuple of all masks with at least two members, in canonical order."""
    _check_dim(d)
    out = []
    for size in range(2, d + 1):
        for combo in combinations(range(1, d + 1), size):
            out.append(mask_from_indices(combo))
    return tuple(out)


@lru_cache(maxsize=None)
def _mask_position(d):
    return {m: i for i, m in enumerate(canonical_masks(d))}


@lru_cache(maxsize=None)
def _mask_sizes(d):
    return np.array([popcount(m) for m in canonical_masks(d)])


def n_subsets(d):
    """Number of subsets with at least two members: ``2^d - d - 1``."""
    return 2**d - d - 1


def canonical_order(d):
    """List of ``(k, mask)`` pairs in canonical flat order."""
    return [(k, m) for k in (1, 2) for m in canonical_masks(d)]


@dataclass(frozen=True)
class Validity:
    """Outcome of the sufficient validity check.

    ``margin`` is ``1 - total`` for a valid vector and ``excess`` is
    ``total - 1`` for an invalid one; the other field is ``None``.
    """

    valid: bool
    total: float
    margin: float = None
    excess: float = None


@dataclass(frozen=True, eq=False)
class ParamVector:
    """Coefficients of the extended FGM copula.

    Parameters
    ----------
    d : int
        Dimension.
    values : ndarray, shape (2, 2^d - d - 1)
        Row ``k - 1`` holds the order-``k`` coefficients in canonical mask
        order.
    validated : bool
        True once the vector has passed :func:`check_validity`. Estimated
        vectors are left unvalidated.
    """

    d: int
    values: np.ndarray = field(repr=False)
    validated: bool = False

    def __post_init__(self):
        _check_dim(self.d)
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.shape != (2, n_subsets(self.d)):
            raise ValueError(
                f"expected values of shape {(2, n_subsets(self.d))}, got {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("parameter values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    # construction ---------------------------------------------------------
    @classmethod
    def zeros(cls, d):
        return cls(d, np.zeros((2, n_subsets(d))))

    @classmethod
    def from_flat(cls, d, flat, validated=False):
        flat = np.asarray(flat, dtype=float)
        return cls(d, flat.reshape(2, n_subsets(d)), validated=validated)

    @classmethod
    def from_dict(cls, d, entries):
        """Build from a mapping ``{(k, mask): value}``; missing entries are 0."""
        vals = np.zeros((2, n_subsets(d)))
        pos = _mask_position(d)
        for (k, mask), v in entries.items():
            if k not in (1, 2):
                raise ValueError(f"order must be 1 or 2, got {k}")
            if mask not in pos:
                raise ValueError(f"mask {mask} is not a subset of size >= 2 for d={d}")
            vals[k - 1, pos[mask]] = v
        return cls(d, vals)

    # access ---------------------------------------------------------------
    @property
    def size(self):
        return self.values.size

    def index(self, k, mask):
        """Position of ``(k, mask)`` in the flat vector."""
        return (k - 1) * n_subsets(self.d) + _mask_position(self.d)[mask]

    def get(self, k, mask):
        pos = _mask_position(self.d).get(mask)
        if pos is None:
            if popcount(mask) < 2 or mask >> self.d:
                raise KeyError(mask)
        return float(self.values[k - 1, pos])

    def __getitem__(self, key):
        k, mask = key
        return self.get(k, mask)

    def to_flat(self):
        return self.values.reshape(-1).copy()

    def to_dict(self):
        return {key: float(v) for key, v in zip(canonical_order(self.d), self.to_flat())}

    def items(self):
        return zip(canonical_order(self.d), self.to_flat())

    def replace(self, entries=None, validated=False):
        """Copy with some ``(k, mask)`` entries overwritten."""
        vals = self.values.copy()
        pos = _mask_position(self.d)
        for (k, mask), v in (entries or {}).items():
            vals[k - 1, pos[mask]] = v
        return ParamVector(self.d, vals, validated=validated)

    def scaled(self, factor):
        return ParamVector(self.d, self.values * factor)

    def with_order_zeroed(self, k):
        vals = self.values.copy()
        vals[k - 1] = 0.0
        return ParamVector(self.d, vals)

    def n_active(self):
        """Count of strictly nonzero coefficients."""
        return int(np.count_nonzero(self.values))

    # validity -------------------------------------------------------------
    def validate(self):
        """Return a validated copy, raising if the constraint fails."""
        if self.validated:
            return self
        res = check_validity(self)
        if not res.valid:
            raise InvalidParametersError(
                f"constraint sum {res.total:.17g} exceeds 1 by {res.excess:.3g}"
            )
        return ParamVector(self.d, self.values, validated=True)

    def digest(self):
        """SHA-256 of the dimension and the 17-digit decimal coefficients."""
        text = f"d={self.d};" + ",".join(f"{v:.17g}" for v in self.to_flat())
        return hashlib.sha256(text.encode()).hexdigest()

    def __eq__(self, other):
        if not isinstance(other, ParamVector):
            return NotImplemented
        return self.d == other.d and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.d, self.values.tobytes()))


def constraint_sum(p):
    """``sum_M sqrt(3)^|M| |lambda1_M| + sqrt(5)^|M| |lambda2_M|``."""
    sizes = _mask_sizes(p.d)
    w1 = SQRT3**sizes
    w2 = SQRT5**sizes
    return float(np.sum(w1 * np.abs(p.values[0])) + np.sum(w2 * np.abs(p.values[1])))


def check_validity(p):
    """Evaluate the sufficient constraint that keeps the density nonnegative.

    Never raises; sums up to ``1 + 1e-12`` are accepted to absorb rounding.
    """
    total = constraint_sum(p)
    if total <= 1.0 + VALIDITY_TOL:
        return Validity(True, total, margin=1.0 - total)
    return Validity(False, total, excess=total - 1.0)


def project_to_valid(p):
    """Shrink all coefficients proportionally until the constraint holds.

    Signs and ratios are preserved; a vector that is already valid is
    returned unchanged (but flagged as validated).
    """
    total = constraint_sum(p)
    if total <= 1.0:
        return ParamVector(p.d, p.values, validated=True)
    return ParamVector(p.d, p.values / total).validate()


def simulation_params():
    """The d = 4 coefficient vector of the reference simulation study.

    It does not satisfy the validity constraint; build models from it with
    :meth:`CopulaModel.unchecked`.
    """
    lam1 = [0.05, -0.05, 0.05, -0.05, 0.05, -0.05, 0.05, -0.05, 0.05, -0.05, 0.02]
    lam2 = [-0.05, 0.05, -0.05, 0.05, -0.05, 0.05, -0.05, 0.05, -0.05, 0.05, -0.025]
    return ParamVector(4, np.array([lam1, lam2]))
