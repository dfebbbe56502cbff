"""
Moment estimates, intervals and the second-order test
=====================================================

Each coefficient is the mean of a product of basis functions, so the
estimates are sample averages. Their joint limit covariance is available
in closed form.
"""
import numpy as np

from extfgm import (
    CopulaModel,
    ParamVector,
    confidence_intervals,
    estimate_params,
    plug_in_covariance,
    sample,
    test_lambda2_zero,
)
from extfgm.io import param_label

truth = ParamVector.from_dict(3, {(1, 0b011): 0.2, (2, 0b101): 0.06})
data = sample(CopulaModel(truth), 4000, seed=1).rows

res = estimate_params(data)
lo, hi = confidence_intervals(res, alpha=0.05)
print(f"{'parameter':>12} {'truth':>7} {'estimate':>9} {'95% CI':>20} {'p':>7}")
for i, (k, mask, est, se, pv) in enumerate(res.rows()):
    print(f"{param_label(k, mask, 3):>12} {truth.get(k, mask):7.3f} {est:9.4f} "
          f"[{lo[i]:8.4f}, {hi[i]:8.4f}] {pv:7.3f}")

# the plug-in covariance at the truth; the first-order pair block
sigma = plug_in_covariance(truth)
print("covariance block (order 1):\n", np.round(sigma.block(1, 1), 4))

out = test_lambda2_zero(res)
print(f"second-order test: T = {out.statistic:.2f}, df = {out.df}, p = {out.pvalue:.4f}")
