"""Estimators of the hypothetical estimand E(Y^{1,0}) - E(Y^{0,0}).

Pre-ICE estimators (imputation, G-formula) fit the no-ICE outcome model to
R=0 records only. Pre+post estimators (G-formula, sequential G-estimation,
Loh's propensity-augmented G-estimator) fit an outcome model including R to
all records and predict or de-mediate with R set to zero.

Every estimator has an unadjusted form (difference in arm means with divisor
n_a) and, where defined, a baseline-adjusted form (OLS of the relevant
outcome on 1, A, L0). With no L0 columns the adjusted form regresses on
(1, A) and reproduces the unadjusted estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data_model import TrialDataset
from .errors import (
    EmptyArmError,
    EstimationError,
    NoIceFreeRecordsError,
    RankDeficientError,
)
from .formulas import ModelFormula, design_matrix
from .linalg_glm import (
    DesignSpec,
    FittedLinearModel,
    FittedLogisticModel,
    logistic_fit,
    ols_fit,
)

ESTIMATOR_NAMES = (
    "imp_unadj",
    "imp_adj",
    "gform_pre_unadj",
    "gform_pre_adj",
    "gform_prepost_unadj",
    "gform_prepost_adj",
    "gest_prepost_unadj",
    "gest_prepost_adj",
    "loh",
)

FINAL_STAGE_SPEC_UNADJ = DesignSpec(("1", "a"))


@dataclass(frozen=True)
class EstimateResult:
    estimator_name: str
    delta_hat: float
    stage1_model: FittedLinearModel
    final_stage_coefficients: np.ndarray
    propensity_model: FittedLogisticModel | None = None
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if not np.isfinite(self.delta_hat):
            raise EstimationError(f"{self.estimator_name}: non-finite estimate")


@dataclass(frozen=True)
class EstimatorFailure:
    """Per-estimator failure recorded by :func:`run_all_estimators`."""

    estimator_name: str
    error: Exception

    @property
    def delta_hat(self) -> float:
        return float("nan")


def _check_arms(ds: TrialDataset) -> tuple[np.ndarray, np.ndarray]:
    arm1 = ds.a == 1
    arm0 = ds.a == 0
    if not arm1.any() or not arm0.any():
        raise EmptyArmError(f"arm sizes n1={int(arm1.sum())}, n0={int(arm0.sum())}")
    return arm1, arm0


def _arm_contrast(values: np.ndarray, arm1: np.ndarray, arm0: np.ndarray) -> np.ndarray:
    """(mean in arm 0, mean difference arm 1 - arm 0), divisors n_0 and n_1."""
    m0 = values[arm0].mean()
    return np.array([m0, values[arm1].mean() - m0])


def _final_adjusted(ds: TrialDataset, outcome: np.ndarray) -> np.ndarray:
    """OLS coefficients (gamma0, Delta, gamma_L0) of ``outcome`` on (1, A, L0)."""
    x = np.hstack([np.ones((ds.n, 1)), ds.a[:, None], ds.l0])
    cols = ("1", "a") + tuple(f"l0_{j + 1}" for j in range(ds.p))
    return ols_fit(x, outcome, DesignSpec(cols)).coefficients


def _fit_g1(ds: TrialDataset, g1: ModelFormula) -> tuple[FittedLinearModel, np.ndarray]:
    """Fit g1 on R=0 records; return the model and its predictions for everyone."""
    if g1.target != "r0":
        raise ValueError("g1 formula must target R=0 records")
    _check_arms(ds)
    free = ds.r == 0
    if not free.any():
        raise NoIceFreeRecordsError("no records with R=0")
    x_all, spec = design_matrix(g1, ds)
    model = ols_fit(x_all[free], ds.y[free], spec)
    return model, model.predict(x_all)


def _fit_g2(ds: TrialDataset, g2: ModelFormula) -> tuple[FittedLinearModel, np.ndarray, np.ndarray]:
    """Fit g2 on all records; return model, fitted values, and predictions with R:=0."""
    if g2.target != "all" or not g2.uses_r:
        raise ValueError("g2 formula must target all records and include R")
    _check_arms(ds)
    x, spec = design_matrix(g2, ds)
    model = ols_fit(x, ds.y, spec)
    x0, _ = design_matrix(g2, ds, r=0.0)
    return model, model.predict(x), model.predict(x0)


def _default_g1() -> ModelFormula:
    return ModelFormula.g1()


def _default_g2() -> ModelFormula:
    return ModelFormula.g2()


def _hybrid_outcome(ds, fitted):
    return np.where(ds.r == 0, ds.y, fitted)


def estimate_imp_unadj(ds: TrialDataset, g1_formula: ModelFormula | None = None) -> EstimateResult:
    """Conditional-mean imputation of no-ICE outcomes, then arm-mean difference."""
    model, fitted = _fit_g1(ds, g1_formula or _default_g1())
    arm1, arm0 = _check_arms(ds)
    coefs = _arm_contrast(_hybrid_outcome(ds, fitted), arm1, arm0)
    return EstimateResult("imp_unadj", float(coefs[1]), model, coefs)


def estimate_imp_adj(ds: TrialDataset, g1_formula: ModelFormula | None = None) -> EstimateResult:
    """Imputed outcomes regressed on (1, A, L0); the A coefficient."""
    model, fitted = _fit_g1(ds, g1_formula or _default_g1())
    coefs = _final_adjusted(ds, _hybrid_outcome(ds, fitted))
    return EstimateResult("imp_adj", float(coefs[1]), model, coefs)


def estimate_gform_pre_unadj(ds: TrialDataset, g1_formula: ModelFormula | None = None) -> EstimateResult:
    """Standardise g1 predictions over each arm's empirical covariate distribution."""
    g1 = g1_formula or _default_g1()
    model, fitted = _fit_g1(ds, g1)
    arm1, arm0 = _check_arms(ds)
    coefs = _arm_contrast(fitted, arm1, arm0)
    return EstimateResult("gform_pre_unadj", float(coefs[1]), model, coefs)


def estimate_gform_pre_adj(ds: TrialDataset, g1_formula: ModelFormula | None = None) -> EstimateResult:
    model, fitted = _fit_g1(ds, g1_formula or _default_g1())
    coefs = _final_adjusted(ds, fitted)
    return EstimateResult("gform_pre_adj", float(coefs[1]), model, coefs)


def estimate_gform_prepost_unadj(ds: TrialDataset, g2_formula: ModelFormula | None = None) -> EstimateResult:
    """Arm-mean difference of g2 predictions with R set to zero."""
    model, _, pred0 = _fit_g2(ds, g2_formula or _default_g2())
    arm1, arm0 = _check_arms(ds)
    coefs = _arm_contrast(pred0, arm1, arm0)
    return EstimateResult("gform_prepost_unadj", float(coefs[1]), model, coefs)


def estimate_gform_prepost_adj(ds: TrialDataset, g2_formula: ModelFormula | None = None) -> EstimateResult:
    model, _, pred0 = _fit_g2(ds, g2_formula or _default_g2())
    coefs = _final_adjusted(ds, pred0)
    return EstimateResult("gform_prepost_adj", float(coefs[1]), model, coefs)


def demediated_outcome(ds: TrialDataset, fitted: np.ndarray, pred0: np.ndarray) -> np.ndarray:
    """Y minus the fitted contribution of R; exactly Y on R=0 records."""
    return np.where(ds.r == 0, ds.y, ds.y - (fitted - pred0))


def estimate_gest_prepost_unadj(ds: TrialDataset, g2_formula: ModelFormula | None = None) -> EstimateResult:
    """Sequential G-estimation: arm-mean difference of de-mediated outcomes."""
    model, fitted, pred0 = _fit_g2(ds, g2_formula or _default_g2())
    arm1, arm0 = _check_arms(ds)
    coefs = _arm_contrast(demediated_outcome(ds, fitted, pred0), arm1, arm0)
    return EstimateResult("gest_prepost_unadj", float(coefs[1]), model, coefs)


def estimate_gest_prepost_adj(ds: TrialDataset, g2_formula: ModelFormula | None = None) -> EstimateResult:
    model, fitted, pred0 = _fit_g2(ds, g2_formula or _default_g2())
    coefs = _final_adjusted(ds, demediated_outcome(ds, fitted, pred0))
    return EstimateResult("gest_prepost_adj", float(coefs[1]), model, coefs)


def estimate_loh(ds: TrialDataset, g3_formula: ModelFormula | None = None,
                 propensity_formula: ModelFormula | None = None) -> EstimateResult:
    """Loh et al.'s G-estimator: outcome model augmented with the fitted P(R=1 | .).

    Y is de-mediated with the R coefficient alone. If the propensity column is
    collinear with the other outcome-model columns it is dropped and a warning
    is attached; the estimate then equals the sequential G-estimator.
    """
    g3 = g3_formula or _default_g2()
    if g3.target != "all" or not g3.r or g3.interactions:
        raise ValueError("g3 must target all records, include R and have no R interactions")
    prop = propensity_formula or ModelFormula.propensity()
    arm1, arm0 = _check_arms(ds)
    xp, pspec = design_matrix(prop, ds)
    pmodel = logistic_fit(xp, ds.r, design=pspec)
    p = pmodel.predict(xp)
    notes: tuple[str, ...] = ()
    x, spec = design_matrix(g3, ds, extra={"p": p})
    try:
        model = ols_fit(x, ds.y, spec)
    except RankDeficientError:
        x, spec = design_matrix(g3, ds)
        model = ols_fit(x, ds.y, spec)
        notes = ("propensity column collinear with outcome design; dropped",)
    y_tilde = ds.y - model.coef("r") * ds.r
    coefs = _arm_contrast(y_tilde, arm1, arm0)
    return EstimateResult("loh", float(coefs[1]), model, coefs, pmodel, notes)


@dataclass(frozen=True)
class FormulaBundle:
    g1: ModelFormula = field(default_factory=ModelFormula.g1)
    g2: ModelFormula = field(default_factory=ModelFormula.g2)
    g3: ModelFormula = field(default_factory=ModelFormula.g2)
    propensity: ModelFormula = field(default_factory=ModelFormula.propensity)


ESTIMATORS = {
    "imp_unadj": (estimate_imp_unadj, "g1"),
    "imp_adj": (estimate_imp_adj, "g1"),
    "gform_pre_unadj": (estimate_gform_pre_unadj, "g1"),
    "gform_pre_adj": (estimate_gform_pre_adj, "g1"),
    "gform_prepost_unadj": (estimate_gform_prepost_unadj, "g2"),
    "gform_prepost_adj": (estimate_gform_prepost_adj, "g2"),
    "gest_prepost_unadj": (estimate_gest_prepost_unadj, "g2"),
    "gest_prepost_adj": (estimate_gest_prepost_adj, "g2"),
}


def run_estimator(name: str, ds: TrialDataset, formulas: FormulaBundle | None = None) -> EstimateResult:
    formulas = formulas or FormulaBundle()
    if name == "loh":
        return estimate_loh(ds, formulas.g3, formulas.propensity)
    fn, which = ESTIMATORS[name]
    return fn(ds, getattr(formulas, which))


def run_all_estimators(ds: TrialDataset, formulas: FormulaBundle | None = None,
                       names=ESTIMATOR_NAMES) -> list[EstimateResult | EstimatorFailure]:
    """Run every estimator; failures are recorded per estimator, never raised."""
    out: list[EstimateResult | EstimatorFailure] = []
    for name in names:
        try:
            out.append(run_estimator(name, ds, formulas))
        except (EstimationError, ValueError) as exc:
            out.append(EstimatorFailure(name, exc))
    return out
