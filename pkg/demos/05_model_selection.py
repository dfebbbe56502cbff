"""
Model reduction and information criteria
========================================

Coefficients with large p-values are set to zero, and the sparse model is
compared with the full fit and the first-order-only fit by AIC and BIC.
"""
from extfgm import CopulaModel, ParamVector, estimate_params, gof, reduce_model, sample, score
from extfgm.errors import NonPositiveDensityError
from extfgm.params import check_validity, project_to_valid

truth = ParamVector.from_dict(4, {
    (1, 0b0011): 0.1, (1, 0b0110): -0.08, (1, 0b1100): 0.05,
    (2, 0b0101): 0.03, (2, 0b1001): 0.03,
})
data = sample(CopulaModel(truth), 2156, seed=11).rows
res = estimate_params(data)

fits = {
    "first-order only": reduce_model(res, mode="classical"),
    "full": res.params_hat,
    "reduced": reduce_model(res, alpha=0.05),
}
for name, p in fits.items():
    try:
        s = score(p, data)
        print(f"{name:>16}: {s.p_active:2d} params, AIC {s.aic:8.2f}, BIC {s.bic:8.2f}")
    except NonPositiveDensityError as exc:
        print(f"{name:>16}: {exc}")

reduced = fits["reduced"]
print("reduced model keeps:", [key for key, v in reduced.to_dict().items() if v])

# goodness of fit needs a valid model; shrink if the estimate overshoots
if not check_validity(reduced).valid:
    reduced = project_to_valid(reduced)
report = gof(CopulaModel(reduced), data, level=0.01)
print("Rosenblatt KS p-values:", report.pvalues.round(3), "pass" if report.passed else "reject")
