import dataclasses
import math

import numpy as np
from numpy.testing import assert_allclose
import pytest
from scipy import stats

from extfgm.errors import NonPositiveDensityError
from extfgm.estimation import estimate_params
from extfgm.model import CopulaModel
from extfgm.params import ParamVector, simulation_params
from extfgm.sampling import sample
from extfgm.selection import (
    ModelScore,
    deviation_curve,
    gof,
    ks_uniform,
    loglik,
    reduce_model,
    score,
)
from oracles import random_valid_params


def pair(lam):
    return ParamVector.from_dict(2, {(1, 0b11): lam})


def test_loglik_independence_is_zero():
    u = np.random.default_rng(0).random((20, 3))
    assert loglik(CopulaModel.independence(3), u) == 0.0


def test_loglik_midpoint_row():
    p = random_valid_params(np.random.default_rng(1), 3).with_order_zeroed(2)
    assert loglik(p, [[0.5, 0.5, 0.5]]) == 0.0


def test_loglik_hand_value():
    ll = loglik(CopulaModel(pair(0.3)), [[1.0, 1.0], [0.0, 0.0]])
    assert_allclose(ll, 2 * math.log(1.9), rtol=1e-15)
    assert_allclose(ll, 1.2837, atol=1e-4)


def test_loglik_nonpositive_density_names_row():
    p = simulation_params()
    data = np.array([[0.3, 0.4, 0.5, 0.6], [0.0, 0.0, 0.0, 1.0]])
    with pytest.raises(NonPositiveDensityError) as info:
        loglik(p, data)
    assert info.value.row == 1


def test_score_formulas():
    u = sample(CopulaModel(pair(0.3)), 400, 3).rows
    s = score(CopulaModel(pair(0.3)), u)
    assert s.p_active == 1 and s.n == 400
    assert_allclose(s.aic, -2 * s.loglik + 2)
    assert_allclose(s.bic, -2 * s.loglik + math.log(400))
    assert_allclose(s.bic - s.aic, s.p_active * (math.log(400) - 2))
    zero = score(ParamVector.zeros(2), u)
    assert zero.aic == 0.0 and zero.p_active == 0


def test_score_from_loglik():
    s = ModelScore.from_loglik(90.775, 10, 2156)
    assert_allclose(s.aic, -161.55)


def _result(seed=4, n=3000):
    p = ParamVector.from_dict(3, {(1, 0b011): 0.2, (2, 0b101): 0.08})
    return estimate_params(sample(CopulaModel(p), n, seed).rows)


def test_reduce_model_rule():
    res = _result()
    red = reduce_model(res, 0.05)
    keep = res.pvalues <= 0.05
    assert np.array_equal(red.to_flat() != 0, keep)
    assert np.array_equal(red.to_flat()[keep], res.params_hat.to_flat()[keep])
    assert red.get(1, 0b011) != 0.0


def test_reduce_model_all_dropped():
    res = estimate_params(sample(CopulaModel.independence(3), 50, 2).rows)
    assert np.all(res.pvalues > 1e-6)
    assert reduce_model(res, 1e-6) == ParamVector.zeros(3)


def test_reduce_model_idempotent():
    res = _result()
    red = reduce_model(res, 0.05)
    # re-reducing with the same p-values changes nothing
    assert reduce_model(dataclasses.replace(res, params_hat=red), 0.05) == red


def test_classical_mode():
    res = _result()
    cl = reduce_model(res, mode="classical")
    assert not np.any(cl.values[1])
    assert np.array_equal(cl.values[0], res.params_hat.values[0])


def test_refit():
    res = _result()
    data = sample(CopulaModel.independence(3), 500, 9).rows
    red = reduce_model(res, 0.05, refit_data=data)
    new = estimate_params(data).params_hat
    keep = res.pvalues <= 0.05
    assert np.array_equal(red.to_flat()[keep], new.to_flat()[keep])


def test_ks_against_scipy():
    x = np.random.default_rng(5).random(2000)
    d, p = ks_uniform(x)
    ref = stats.kstest(x, "uniform", method="asymp")
    assert_allclose(d, ref.statistic, rtol=1e-14)
    assert_allclose(p, stats.kstwobign.sf(math.sqrt(2000) * d), rtol=1e-12)


def test_gof_power():
    model = CopulaModel(pair(0.3))
    data = sample(CopulaModel.independence(2), 5000, 21).rows
    assert gof(model, data).pvalues[1] < 0.01


def test_gof_calibration_all_coordinates():
    m = CopulaModel(random_valid_params(np.random.default_rng(6), 4))
    seeds = 300
    passed = sum(gof(m, sample(m, 5000, s).rows, level=0.01).passed for s in range(seeds))
    # the exact pass probability for four independent tests at 1% is 0.99^4 = 0.961
    assert passed / seeds >= 0.93


def test_gof_rejection_rate_at_five_percent():
    m = CopulaModel(random_valid_params(np.random.default_rng(7), 2))
    pv = np.array([gof(m, sample(m, 1000, s).rows).pvalues for s in range(500)])
    rates = np.mean(pv <= 0.05, axis=0)
    assert np.all((rates >= 0.02) & (rates <= 0.09))


def test_ks_statistic_mean_under_null():
    m = CopulaModel.independence(2)
    n = 2000
    stat = np.array([gof(m, sample(m, n, s).rows).statistics for s in range(300)])
    # E sup|B| = sqrt(pi / 2) ln 2
    assert_allclose(stat.mean() * math.sqrt(n), math.sqrt(math.pi / 2) * math.log(2), rtol=0.05)


def test_deviation_curve():
    r = np.array([[0.2, 0.9], [0.6, 0.1]])
    out = deviation_curve(r)
    assert_allclose(out, [[0.2, 0.3, 0.1, 0.4], [0.6, 0.4, 0.9, 0.1]])


def test_report_flags():
    m = CopulaModel.independence(3)
    rep = gof(m, sample(m, 500, 1).rows, level=1.0)
    assert not rep.passed and rep.rejected.all()
    assert np.all((rep.pvalues >= 0) & (rep.pvalues <= 1))
