import numpy as np
from numpy.testing import assert_array_equal
import pytest

from extfgm.estimation import plug_in_covariance
from extfgm.experiments import (
    StudySpec,
    _task,
    replicate,
    run_chi2_calibration,
    run_consistency,
    run_coverage,
    run_covariance,
    run_study,
)
from extfgm.errors import InvalidParametersError
from extfgm.params import ParamVector, simulation_params
from oracles import random_valid_params


def small_model(seed=0, d=3):
    return random_valid_params(np.random.default_rng(seed), d)


def test_spec_validation():
    p = small_model()
    with pytest.raises(ValueError):
        StudySpec(p, replications=0)
    with pytest.raises(ValueError):
        StudySpec(p, sizes=(1,))
    with pytest.raises(ValueError):
        StudySpec(p, which="bogus")
    with pytest.raises(InvalidParametersError):
        run_consistency(StudySpec(simulation_params(), sizes=(10,)))


def test_signature_tracks_configuration():
    p = small_model()
    a = StudySpec(p, sizes=(10, 20), seed=1)
    assert a.signature() == StudySpec(p, sizes=[10, 20], seed=1).signature()
    assert a.signature() != StudySpec(p, sizes=(10, 20), seed=2).signature()


def test_consistency_null_model():
    spec = StudySpec(ParamVector.zeros(4), sizes=(10_000,), seed=3)
    table = run_consistency(spec)
    assert table.values.shape == (22, 1)
    assert np.max(np.abs(table.values)) <= 0.05


def test_consistency_theory_band():
    p = small_model(1, d=4)
    n = 100_000
    table = run_consistency(StudySpec(p, sizes=(n,), seed=4))
    sd = np.sqrt(np.diag(plug_in_covariance(p).matrix) / n)
    inside = np.abs(table.values[:, 0] - p.to_flat()) <= 4 * sd
    assert inside.mean() >= 0.95


def test_workers_do_not_change_results():
    spec = StudySpec(small_model(2), sizes=(200,), replications=30, seed=9, which="coverage")
    task = _task(spec, "estimate", 0)
    assert_array_equal(replicate(task, 30, workers=1), replicate(task, 30, workers=3))


def test_checkpoint_resume(tmp_path):
    spec = StudySpec(small_model(3), sizes=(100,), replications=250, seed=5, which="coverage")
    task = _task(spec, "estimate", 0)
    path = str(tmp_path / "ck.npz")
    full = replicate(task, 250, checkpoint=path, signature=spec.signature())
    saved = np.load(path)
    assert saved["rows"].shape[0] == 250
    # truncate to the first checkpoint and resume
    np.savez(path, rows=full[:100], signature=spec.signature())
    resumed = replicate(task, 250, checkpoint=path, signature=spec.signature())
    assert_array_equal(resumed, full)
    # a different signature ignores the stale file
    np.savez(path, rows=np.zeros((100, full.shape[1])), signature="other")
    assert_array_equal(replicate(task, 250, checkpoint=path, signature=spec.signature()), full)


def test_coverage_null_model():
    spec = StudySpec(ParamVector.zeros(3), sizes=(500,), replications=1000, seed=6, which="coverage")
    cov = run_coverage(spec).values[:, 0]
    assert np.all((cov >= 93) & (cov <= 97))


def test_coverage_half_level():
    p = ParamVector.from_dict(2, {(1, 0b11): 0.2, (2, 0b11): 0.05})
    spec = StudySpec(p, sizes=(500,), replications=1000, alpha=0.5, seed=7, which="coverage")
    cov = run_coverage(spec).values[:, 0]
    assert np.all(np.abs(cov - 50) <= 5)


def test_coverage_monotone_in_level():
    p = small_model(4, d=2)
    means = []
    for alpha in (0.3, 0.1, 0.01):
        spec = StudySpec(p, sizes=(300,), replications=300, alpha=alpha, seed=8, which="coverage")
        means.append(run_coverage(spec).values.mean())
    assert means[0] <= means[1] <= means[2]


def test_covariance_study_small():
    p = small_model(5, d=2)
    spec = StudySpec(p, sizes=(1000,), replications=2000, seed=10, which="covariance")
    out = run_covariance(spec)
    assert out.monte_carlo.shape == (2, 2)
    assert out.max_abs_deviation <= 0.1


def test_chi2_requires_zero_block():
    spec = StudySpec(small_model(6), sizes=(100,), which="chi2-calibration")
    with pytest.raises(ValueError):
        run_chi2_calibration(spec)


def test_chi2_alpha_zero():
    p = small_model(7).with_order_zeroed(2)
    spec = StudySpec(p, sizes=(200,), replications=100, alpha=0.0, seed=1, which="chi2-calibration")
    out = run_chi2_calibration(spec)
    assert out.rejection_rates[0] == 0.0 and out.df == 4


def test_chi2_power():
    p = simulation_params().with_order_zeroed(2).replace({(2, 0b11): 0.1})
    spec = StudySpec(
        p, sizes=(2000,), replications=200, seed=2, which="chi2-calibration",
        allow_invalid=True, power=True,
    )
    assert run_study(spec).rejection_rates[0] > 0.5
