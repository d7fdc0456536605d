import numpy as np
import pytest

import oracles
import properties
from conftest import oracle_dataset, random_dataset
from hypest.data_model import TrialDataset
from hypest.errors import EmptyStratumError, ZeroDenominatorError
from hypest.snde import snde_ipw, snde_unweighted


def test_ipw_ignores_post_ice_shift():
    for seed in range(20):
        ds = random_dataset(np.random.default_rng(seed))
        shifted = ds.with_outcome(ds.y + 1000.0 * (ds.r == 1))
        assert snde_ipw(shifted).upsilon0 == pytest.approx(snde_ipw(ds).upsilon0, abs=1e-10)


def test_ipw_no_ice_records():
    ds = random_dataset(np.random.default_rng(1), n=50)
    ds = TrialDataset(a=ds.a, l0=ds.l0, l1=ds.l1, r=np.zeros(ds.n), y=ds.y)
    res = snde_ipw(ds)
    raw = ds.y[ds.a == 1].mean() - ds.y[ds.a == 0].mean()
    assert res.upsilon0 == pytest.approx(raw, abs=1e-12)
    assert res.propensity_model is None
    with pytest.raises(ZeroDenominatorError):
        res.upsilon1


def test_ipw_against_estimating_equation_root():
    for seed in range(20):
        ds = random_dataset(np.random.default_rng(100 + seed))
        x = np.column_stack([np.ones(ds.n), ds.a, *ds.l1.T])
        expected = oracles.snde_ipw_upsilon0(ds, oracles.irls_logistic(x, ds.r))
        assert snde_ipw(ds).upsilon0 == pytest.approx(expected, abs=1e-8)


def test_unweighted_oracle_dataset_matches_bisection():
    ds = oracle_dataset()
    res = snde_unweighted(ds)
    assert np.isfinite(res.upsilon0)
    assert res.upsilon0 == pytest.approx(oracles.snde_unweighted_upsilon0(ds), abs=1e-10)
    # by hand: Y = 1 + A + L1 on every row, so Y - m0 = 0 and with A - Abar = +-1/2
    # the root is sum (A - Abar) m0 / sum (A - Abar) A = (11/2 - 5/2) / (3/2) = 2
    assert res.upsilon0 == pytest.approx(2.0, abs=1e-10)


def test_unweighted_against_bisection_random():
    for seed in range(30):
        ds = random_dataset(np.random.default_rng(200 + seed))
        assert snde_unweighted(ds).upsilon0 == pytest.approx(
            oracles.snde_unweighted_upsilon0(ds), abs=1e-8)


def test_unweighted_post_ice_changes_upsilon1_only():
    rng = np.random.default_rng(3)
    ds = random_dataset(rng)
    bumped = properties.perturb_post_ice(ds, rng, magnitude=50.0)
    before, after = snde_unweighted(ds), snde_unweighted(bumped)
    assert after.upsilon0 == pytest.approx(before.upsilon0, abs=1e-10)
    assert abs(after.upsilon1 - before.upsilon1) > 1e-3


def test_unweighted_constant_outcome():
    ds = random_dataset(np.random.default_rng(4))
    ds = ds.with_outcome(np.full(ds.n, 3.0))
    res = snde_unweighted(ds)
    assert res.upsilon0 == pytest.approx(0.0, abs=1e-10)
    assert res.upsilon1 == pytest.approx(0.0, abs=1e-10)


def test_unweighted_needs_ice_free_stratum():
    ds = random_dataset(np.random.default_rng(5))
    ds = TrialDataset(a=ds.a, l0=ds.l0, l1=ds.l1, r=np.ones(ds.n), y=ds.y)
    with pytest.raises(EmptyStratumError):
        snde_unweighted(ds)


@pytest.mark.parametrize("check", [properties.ipw_irrelevance, properties.unw_irrelevance])
def test_irrelevance_large_perturbations(check):
    rng = np.random.default_rng(6)
    for _ in range(50):
        assert check(random_dataset(rng), rng) <= 1e-10
