"""G-estimators of the saturated structural nested direct effect model.

Model: E(Y^{ar} - Y^{0r}) = upsilon0 * a(1-r) + upsilon1 * a r. The two
components of the estimating function decouple, so each parameter is the
root of a scalar linear equation and is solved in closed form. upsilon0 is
the hypothetical estimand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import TrialDataset
from .errors import (
    EmptyArmError,
    EmptyStratumError,
    EstimationError,
    ExtremeWeightsError,
    ZeroDenominatorError,
)
from .formulas import ModelFormula, design_matrix
from .linalg_glm import FittedLinearModel, FittedLogisticModel, logistic_fit, ols_fit

MIN_FITTED_PROB = 1e-6
_ZERO = 1e-12


@dataclass(frozen=True)
class SndeResult:
    upsilon0: float
    upsilon1_value: float | None
    method: str
    propensity_model: FittedLogisticModel | None = None
    outcome_model_R0: FittedLinearModel | None = None
    outcome_model_R1: FittedLinearModel | None = None
    upsilon1_error: EstimationError | None = None

    @property
    def upsilon1(self) -> float:
        """Effect with the ICE fixed to one; raises when it is not estimable."""
        if self.upsilon1_error is not None:
            raise self.upsilon1_error
        return self.upsilon1_value


def _ratio(num: float, den: float, what: str) -> float:
    if abs(den) <= _ZERO * max(1.0, abs(num)):
        raise ZeroDenominatorError(f"{what}: denominator {den:.3g}")
    return num / den


def _centred_treatment(ds: TrialDataset) -> np.ndarray:
    if ds.n1 == 0 or ds.n0 == 0:
        raise EmptyArmError(f"arm sizes n1={ds.n1}, n0={ds.n0}")
    return ds.a - ds.a.mean()


def snde_ipw(ds: TrialDataset, propensity_formula: ModelFormula | None = None) -> SndeResult:
    """Inverse-probability-of-ICE-status weighted G-estimator.

    Solves sum_i w_i (A_i - mean A) 1{R_i=r} (Y_i - upsilon_r A_i) = 0 for
    r = 0, 1 with w_i = 1 / P(R = R_i | A_i, L1_i). When no record has an
    ICE the fitted P(R=0 | .) is identically one and the weights are constant.
    """
    formula = propensity_formula or ModelFormula.propensity(l0=False)
    ac = _centred_treatment(ds)
    pmodel = None
    if np.all(ds.r == 0):
        prob_observed = np.ones(ds.n)
    else:
        x, spec = design_matrix(formula, ds)
        pmodel = logistic_fit(x, ds.r, design=spec)
        p1 = pmodel.predict(x)
        prob_observed = np.where(ds.r == 1, p1, 1.0 - p1)
    if prob_observed.min() < MIN_FITTED_PROB:
        raise ExtremeWeightsError(f"min fitted probability {prob_observed.min():.3g}")
    w = 1.0 / prob_observed
    s0 = ds.r == 0
    s1 = ~s0
    u0 = _ratio(float(np.sum((w * ac * ds.y)[s0])), float(np.sum((w * ac * ds.a)[s0])), "upsilon0")
    u1, err = None, None
    try:
        u1 = _ratio(float(np.sum((w * ac * ds.y)[s1])), float(np.sum((w * ac * ds.a)[s1])), "upsilon1")
    except ZeroDenominatorError as exc:
        err = exc
    return SndeResult(u0, u1, "ipw", propensity_model=pmodel, upsilon1_error=err)


def _stratum_fit(ds, formula, r_value):
    stratum = ds.r == r_value
    if not stratum.any():
        raise EmptyStratumError(f"no records with R={r_value}")
    x, spec = design_matrix(formula, ds)
    model = ols_fit(x[stratum], ds.y[stratum], spec)
    return model, model.predict(x), stratum


def _unweighted_component(ds, ac, fitted, stratum):
    """Root of sum_i (A_i - mean A) 1{R_i=r}(Y_i - fit_i) + P(R=r) (A_i - mean A)(fit_i - u A_i)."""
    share = stratum.mean()
    num = float(np.sum((ac * (ds.y - fitted))[stratum]) + share * np.sum(ac * fitted))
    den = float(share * np.sum(ac * ds.a))
    return num, den


def snde_unweighted(ds: TrialDataset, outcome_formula: ModelFormula | None = None) -> SndeResult:
    """Unweighted G-estimator with E(Y | A, L1, R=r) fitted separately per stratum.

    Only R=0 outcomes enter the upsilon0 component.
    """
    formula = outcome_formula or ModelFormula.g1(l0=False)
    ac = _centred_treatment(ds)
    m0, fit0, s0 = _stratum_fit(ds, formula, 0)
    u0 = _ratio(*_unweighted_component(ds, ac, fit0, s0), "upsilon0")
    m1, u1, err = None, None, None
    try:
        m1, fit1, s1 = _stratum_fit(ds, formula, 1)
        u1 = _ratio(*_unweighted_component(ds, ac, fit1, s1), "upsilon1")
    except EstimationError as exc:
        err = exc
    return SndeResult(u0, u1, "unweighted", outcome_model_R0=m0, outcome_model_R1=m1,
                      upsilon1_error=err)
