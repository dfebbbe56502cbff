import numpy as np
from numpy.testing import assert_allclose
import pytest
from hypothesis import given, strategies as st

from extfgm.errors import InvalidParametersError
from extfgm.params import (
    ParamVector,
    canonical_masks,
    canonical_order,
    check_validity,
    constraint_sum,
    mask_from_indices,
    mask_label,
    n_subsets,
    parse_mask_label,
    project_to_valid,
    simulation_params,
)


def test_canonical_order_d4():
    labels = [mask_label(m) for m in canonical_masks(4)]
    assert labels == ["12", "13", "14", "23", "24", "34", "123", "124", "134", "234", "1234"]
    order = canonical_order(4)
    assert len(order) == 22
    assert order[0] == (1, 0b11) and order[11] == (2, 0b11)


@pytest.mark.parametrize("d", [2, 3, 5, 8])
def test_parameter_count(d):
    assert len(canonical_order(d)) == 2 ** (d + 1) - 2 * d - 2
    assert n_subsets(d) == 2**d - d - 1


def test_mask_helpers():
    assert mask_from_indices([1, 3]) == 0b101
    assert parse_mask_label("13") == 0b101
    assert parse_mask_label("{1,3}") == 0b101
    assert parse_mask_label("1_10") == (1 | 1 << 9)
    assert mask_label(1 | 1 << 9, 10) == "1_10"


@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_flat_round_trip(d, seed):
    rng = np.random.default_rng(seed)
    flat = rng.normal(size=2 * n_subsets(d))
    p = ParamVector.from_flat(d, flat)
    assert ParamVector.from_flat(d, p.to_flat()) == p
    assert ParamVector.from_dict(d, p.to_dict()) == p


def test_values_are_read_only():
    p = ParamVector.zeros(3)
    with pytest.raises(ValueError):
        p.values[0, 0] = 1.0


def test_zero_vector_valid():
    res = check_validity(ParamVector.zeros(4))
    assert res.valid and res.margin == 1.0


def test_boundary_pair_is_valid_with_zero_margin():
    p = ParamVector.from_dict(2, {(1, 0b11): 1 / 3})
    res = check_validity(p)
    assert res.valid
    assert_allclose(res.margin, 0.0, atol=1e-15)


def test_simulation_vector_fails_constraint():
    # Pairs contribute 6 * 0.05 * (3 + 5), triples 4 * 0.05 * (3^1.5 + 5^1.5),
    # the full set 0.02 * 9 + 0.025 * 25.
    p = simulation_params()
    expected = 2.4 + 0.2 * (3**1.5 + 5**1.5) + 0.18 + 0.625
    assert_allclose(constraint_sum(p), expected, rtol=1e-14)
    res = check_validity(p)
    assert not res.valid
    assert_allclose(res.excess, expected - 1, rtol=1e-14)
    with pytest.raises(InvalidParametersError):
        p.validate()


def test_validity_tolerance():
    p = ParamVector.from_dict(2, {(1, 0b11): (1 + 5e-13) / 3})
    assert check_validity(p).valid
    q = ParamVector.from_dict(2, {(1, 0b11): (1 + 1e-9) / 3})
    assert not check_validity(q).valid


def test_projection_preserves_signs():
    p = simulation_params()
    q = project_to_valid(p)
    assert q.validated
    assert_allclose(constraint_sum(q), 1.0, rtol=1e-12)
    assert np.array_equal(np.sign(q.values), np.sign(p.values))
    small = ParamVector.from_dict(2, {(2, 0b11): 0.1})
    assert project_to_valid(small) == small


def test_digest_and_equality():
    a = simulation_params()
    b = ParamVector.from_flat(4, a.to_flat())
    assert a.digest() == b.digest() and hash(a) == hash(b)
    assert a.digest() != a.scaled(0.5).digest()


def test_rejects_bad_shapes():
    with pytest.raises(ValueError):
        ParamVector(3, np.zeros((2, 3)))
    with pytest.raises(ValueError):
        ParamVector.from_dict(3, {(1, 0b001): 0.1})
    with pytest.raises(ValueError):
        ParamVector(1, np.zeros((2, 0)))
