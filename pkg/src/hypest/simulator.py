"""Monte Carlo engine for the two-arm ICE simulation design.

Each replicate draws from its own Philox stream keyed by
``SeedSequence(seed, spawn_key=(replicate_index,))``, so a replicate's data
depend only on (seed, replicate_index) and results are identical for any
number of worker processes.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import multiprocessing as mp

import numpy as np

from .asymptotics import ScenarioParams, asymptotic_se, avar_pre, avar_prepost, parametric_inputs
from .data_model import TrialDataset
from .errors import ConfigInvalidError, EstimationError
from .estimators import ESTIMATOR_NAMES, FormulaBundle, run_estimator
from .formulas import ModelFormula
from .snde import snde_ipw, snde_unweighted

RNG_METHOD = f"numpy-{np.__version__}/Philox4x64/SeedSequence(seed,spawn_key=(replicate,))/ziggurat-normal"

TABLE_ESTIMATORS = ("imp_unadj", "gform_pre_unadj", "gform_prepost_unadj", "gest_prepost_unadj", "loh")
SIM_ESTIMATORS = ESTIMATOR_NAMES + ("snde_ipw", "snde_unweighted")
PRE_ESTIMATORS = frozenset({"imp_unadj", "imp_adj", "gform_pre_unadj", "gform_pre_adj",
                            "snde_unweighted"})
PREPOST_ESTIMATORS = frozenset({"gform_prepost_unadj", "gform_prepost_adj",
                                "gest_prepost_unadj", "gest_prepost_adj"})


def true_delta(params: ScenarioParams) -> float:
    """E(Y^{1,0}) - E(Y^{0,0}) under the causal ordering A -> L1 -> R -> Y.

    L1 precedes the ICE, so preventing the ICE leaves the arm-specific L1
    distribution unchanged: E(Y^{a,0}) = b0 + b_a a + b_l1 E(L1 | A=a), and
    E(L1 | A=1) - E(L1 | A=0) = lambda_a + lambda_r (pi0 - pi1).
    """
    tau_diff = params.lambda_a + params.lambda_r * (params.pi0 - params.pi1)
    return params.b_a + params.b_l1 * tau_diff


def replicate_rng(seed: int, replicate_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(replicate_index,))
    return np.random.Generator(np.random.Philox(ss))


def generate_dataset(params: ScenarioParams, replicate_index: int) -> TrialDataset:
    rng = replicate_rng(params.seed, replicate_index)
    n = params.n
    a = (rng.random(n) < 0.5).astype(np.float64)
    pi = np.where(a == 1, params.pi1, params.pi0)
    r = (rng.random(n) >= pi).astype(np.float64)
    l1 = (params.lambda0 + params.lambda_a * a + params.lambda_r * r
          + math.sqrt(params.sigma2_l1) * rng.standard_normal(n))
    y = (params.b0 + params.b_a * a + params.b_l1 * l1 + params.b_r * r + params.b_l1r * l1 * r
         + math.sqrt(params.sigma2_y) * rng.standard_normal(n))
    return TrialDataset(a=a, l0=np.zeros((n, 0)), l1=l1[:, None], r=r, y=y)


@dataclass(frozen=True)
class ReplicateDraw:
    dataset: TrialDataset
    replicate_index: int
    seed_path: tuple[int, int]


def draw(params: ScenarioParams, replicate_index: int) -> ReplicateDraw:
    return ReplicateDraw(generate_dataset(params, replicate_index), replicate_index,
                         (params.seed, replicate_index))


def _apply(name: str, ds: TrialDataset, formulas: FormulaBundle) -> float:
    if name == "snde_ipw":
        return snde_ipw(ds).upsilon0
    if name == "snde_unweighted":
        return snde_unweighted(ds).upsilon0
    return run_estimator(name, ds, formulas).delta_hat


def _run_chunk(args):
    params, names, formulas, start, stop = args
    k = len(names)
    est = np.full((stop - start, k), np.nan)
    status = [[""] * k for _ in range(stop - start)]
    for i, rep in enumerate(range(start, stop)):
        ds = generate_dataset(params, rep)
        for j, name in enumerate(names):
            try:
                est[i, j] = _apply(name, ds, formulas)
                status[i][j] = "ok"
            except (EstimationError, ValueError) as exc:
                status[i][j] = type(exc).__name__
    return start, est, status


@dataclass(frozen=True)
class EstimatorSummary:
    name: str
    bias: float
    empirical_se: float
    mcse_bias: float
    n_failures: int
    mean: float


@dataclass(frozen=True)
class SimulationSummary:
    scenario: ScenarioParams
    rows: tuple[EstimatorSummary, ...]
    asy_se_pre: float
    asy_se_prepost: float
    true_delta: float
    g2_interactions: tuple[str, ...] = ()
    rng_method: str = RNG_METHOD
    estimates: np.ndarray | None = field(default=None, repr=False, compare=False)
    statuses: tuple[tuple[str, ...], ...] | None = field(default=None, repr=False, compare=False)

    def row(self, name: str) -> EstimatorSummary:
        for row in self.rows:
            if row.name == name:
                return row
        raise KeyError(name)

    @property
    def estimator_names(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.rows)

    def asy_se_for(self, name: str) -> float | None:
        if name in PRE_ESTIMATORS:
            return self.asy_se_pre
        if name in PREPOST_ESTIMATORS:
            return self.asy_se_prepost
        return None


def summarise(values: np.ndarray, truth: float, name: str) -> EstimatorSummary:
    ok = values[np.isfinite(values)]
    n_fail = int(values.shape[0] - ok.shape[0])
    if ok.shape[0] == 0:
        return EstimatorSummary(name, math.nan, math.nan, math.nan, n_fail, math.nan)
    mean = float(np.mean(ok))
    se = float(np.std(ok, ddof=1)) if ok.shape[0] > 1 else math.nan
    return EstimatorSummary(name, mean - truth, se, se / math.sqrt(ok.shape[0]), n_fail, mean)


def run_study(params: ScenarioParams, estimators=TABLE_ESTIMATORS, g2_interactions=(),
              workers: int = 1, chunk_size: int | None = None) -> SimulationSummary:
    """Simulate ``params.n_reps`` datasets and summarise every estimator.

    ``g2_interactions`` selects R-interactions in the post-ICE outcome model
    (empty = no interactions, the misspecified model under an L1 x R truth).
    """
    if params.n_reps < 2:
        raise ConfigInvalidError("n_reps must be at least 2")
    unknown = [e for e in estimators if e not in SIM_ESTIMATORS]
    if unknown:
        raise ConfigInvalidError(f"unknown estimators {unknown}")
    if workers < 1:
        raise ConfigInvalidError("workers must be positive")
    try:
        g2 = ModelFormula.g2(interactions=g2_interactions)
    except ValueError as exc:
        raise ConfigInvalidError(str(exc)) from exc
    formulas = FormulaBundle(g2=g2)
    names = tuple(estimators)
    n_reps = params.n_reps
    if chunk_size is None:
        chunk_size = max(1, math.ceil(n_reps / (workers * 8)))
    jobs = [(params, names, formulas, s, min(s + chunk_size, n_reps))
            for s in range(0, n_reps, chunk_size)]

    est = np.full((n_reps, len(names)), np.nan)
    statuses: list[tuple[str, ...]] = [()] * n_reps
    if workers == 1:
        results = map(_run_chunk, jobs)
        _collect(results, est, statuses)
    else:
        ctx = mp.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            _collect(pool.map(_run_chunk, jobs), est, statuses)

    truth = true_delta(params)
    rows = tuple(summarise(est[:, j], truth, name) for j, name in enumerate(names))
    inputs = parametric_inputs(params)
    return SimulationSummary(
        scenario=params,
        rows=rows,
        asy_se_pre=asymptotic_se(avar_pre(inputs), params.n),
        asy_se_prepost=asymptotic_se(avar_prepost(inputs), params.n),
        true_delta=truth,
        g2_interactions=tuple(sorted(g2_interactions)),
        estimates=est,
        statuses=tuple(statuses),
    )


def _collect(results, est, statuses):
    for start, block, status in results:
        est[start:start + block.shape[0]] = block
        for i, s in enumerate(status):
            statuses[start + i] = tuple(s)


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)
