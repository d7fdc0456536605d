"""Large-sample variances of the pre-ICE and pre+post-ICE G-formula estimators.

All variances are for sqrt(n) (Delta_hat - Delta); divide by n before taking
the square root to get a standard error. The setting has no L0 and a scalar
L1, with outcome model E(Y | A, L1, R) = b0 + bA A + bL L1 + bR R and
Var(Y | A, L1, R) = sigma^2.

Writing t = tau1 - tau0 = E(L1 | A=1) - E(L1 | A=0) and V for a 2x2
covariance matrix of (A, L1), the sigma^2 term is

    sigma^2 (V_LL - 2 V_AL t + V_AA t^2) / (V_AA V_LL - V_AL^2),

the variance of beta_A + t beta_L1 under Var(beta_A, beta_L1) = sigma^2 V^{-1}.
For the pre estimator V = P(R=0) Var((A, L1) | R=0); for the pre+post
estimator V is the R-averaged matrix sum_r P(R=r) Var((A, L1) | R=r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist

from .errors import SingularConditionalCovarianceError

_STD_NORMAL = NormalDist()


@dataclass(frozen=True)
class AsymptoticInputs:
    """Population moments entering the closed-form asymptotic variances.

    Pairs are indexed by the conditioning value: ``var_A_given_R[0]`` is
    Var(A | R=0), ``var_L1_given_A[1]`` is Var(L1 | A=1).
    """

    sigma2: float
    beta_L1: float
    var_A_given_R: tuple[float, float]
    var_L1_given_R: tuple[float, float]
    cov_A_L1_given_R: tuple[float, float]
    p_R0: float
    tau_diff: float
    var_L1_given_A: tuple[float, float]

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be non-negative")
        for name in ("var_A_given_R", "var_L1_given_R", "var_L1_given_A"):
            if min(getattr(self, name)) < 0:
                raise ValueError(f"{name} must be non-negative")
        for r in (0, 1):
            bound = math.sqrt(self.var_A_given_R[r] * self.var_L1_given_R[r])
            if abs(self.cov_A_L1_given_R[r]) > bound * (1 + 1e-12) + 1e-15:
                raise ValueError(f"|Cov(A, L1 | R={r})| exceeds Cauchy-Schwarz bound")
        if not 0 < self.p_R0 <= 1:
            raise ValueError("p_R0 must lie in (0, 1]")


@dataclass(frozen=True)
class ScenarioParams:
    """Data-generating parameters of a simulation scenario.

    A ~ Bernoulli(1/2); P(R=0 | A=a) = pi_a;
    L1 | A, R ~ N(lambda0 + lambda_a A + lambda_r R, sigma2_l1);
    Y | A, L1, R ~ N(b0 + b_a A + b_l1 L1 + b_r R + b_l1r L1 R, sigma2_y).
    """

    pi0: float = 0.4
    pi1: float = 0.5
    lambda0: float = 0.0
    lambda_a: float = 1.0
    lambda_r: float = 1.0
    sigma2_l1: float = 1.0
    b0: float = 0.0
    b_a: float = 1.0
    b_l1: float = 1.0
    b_r: float = 1.0
    b_l1r: float = 0.0
    sigma2_y: float = 1.0
    n: int = 500
    n_reps: int = 10_000
    seed: int = 20240607
    label: str = field(default="", compare=False)

    def __post_init__(self):
        for name in ("pi0", "pi1"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name}={v} must lie in (0, 1)")
        for name in ("sigma2_l1", "sigma2_y"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.n_reps < 1:
            raise ValueError("n_reps must be positive")


def parametric_inputs(params: ScenarioParams) -> AsymptoticInputs:
    """Closed-form moments of (A, L1, R) under the scenario's DGP."""
    pi0, pi1 = params.pi0, params.pi1
    lam_a, lam_r = params.lambda_a, params.lambda_r
    var_a = (pi0 * pi1 / (pi0 + pi1) ** 2,
             (1 - pi0) * (1 - pi1) / (2 - pi0 - pi1) ** 2)
    return AsymptoticInputs(
        sigma2=params.sigma2_y,
        beta_L1=params.b_l1,
        var_A_given_R=var_a,
        var_L1_given_R=tuple(params.sigma2_l1 + lam_a ** 2 * v for v in var_a),
        cov_A_L1_given_R=tuple(lam_a * v for v in var_a),
        p_R0=(pi0 + pi1) / 2,
        tau_diff=lam_a + lam_r * (pi0 - pi1),
        var_L1_given_A=tuple(lam_r ** 2 * p * (1 - p) + params.sigma2_l1 for p in (pi0, pi1)),
    )


def _sigma_term(v_aa: float, v_ll: float, v_al: float, t: float) -> float:
    det = v_aa * v_ll - v_al ** 2
    if not det > 1e-14 * max(1.0, v_aa * v_ll):
        raise SingularConditionalCovarianceError(f"determinant {det:.3g}")
    return (v_ll - 2.0 * v_al * t + v_aa * t ** 2) / det


def _mediated_term(inp: AsymptoticInputs) -> float:
    return 2.0 * inp.beta_L1 ** 2 * (inp.var_L1_given_A[0] + inp.var_L1_given_A[1])


def avar_pre(inp: AsymptoticInputs) -> float:
    """Asymptotic variance of the estimator fitted on ICE-free records only."""
    core = _sigma_term(inp.var_A_given_R[0], inp.var_L1_given_R[0], inp.cov_A_L1_given_R[0],
                       inp.tau_diff)
    return inp.sigma2 * core / inp.p_R0 + _mediated_term(inp)


def averaged_covariance(inp: AsymptoticInputs) -> tuple[float, float, float]:
    """(V_AA, V_LL, V_AL) of P(R=0) Var(.|R=0) + P(R=1) Var(.|R=1)."""
    w = (inp.p_R0, 1.0 - inp.p_R0)
    return (
        w[0] * inp.var_A_given_R[0] + w[1] * inp.var_A_given_R[1],
        w[0] * inp.var_L1_given_R[0] + w[1] * inp.var_L1_given_R[1],
        w[0] * inp.cov_A_L1_given_R[0] + w[1] * inp.cov_A_L1_given_R[1],
    )


def avar_prepost(inp: AsymptoticInputs) -> float:
    """Asymptotic variance of the estimator using post-ICE outcomes (common g2 slopes)."""
    v_aa, v_ll, v_al = averaged_covariance(inp)
    return inp.sigma2 * _sigma_term(v_aa, v_ll, v_al, inp.tau_diff) + _mediated_term(inp)


def kappa(inp: AsymptoticInputs, r: int = 0) -> float:
    """sigma^2 multiplier when Var((A, L1) | R) does not depend on R."""
    return _sigma_term(inp.var_A_given_R[r], inp.var_L1_given_R[r], inp.cov_A_L1_given_R[r],
                       inp.tau_diff)


def asymptotic_se(avar: float, n: int) -> float:
    return math.sqrt(avar / n)


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_quantile(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile requires p in (0, 1), got {p}")
    return _STD_NORMAL.inv_cdf(p)


def power_prepost(p: float, p_R0: float, alpha: float = 0.05) -> float:
    """Power of the post-ICE estimator's test given power ``p`` of the pre-ICE one.

    Best case beta_L1 = 0, where the variance ratio equals P(R=0). The critical
    value is the two-sided normal quantile at ``alpha`` (1.96 at 0.05).
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if not 0.0 < p_R0 <= 1.0:
        raise ValueError("p_R0 must lie in (0, 1]")
    z = 1.96 if alpha == 0.05 else normal_quantile(1.0 - alpha / 2.0)
    return normal_cdf(-z + (z + normal_quantile(p)) / math.sqrt(p_R0))
