import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypest.data_model import (TrialDataset, TrialRecord, positivity_check, read_csv, validate,
                               write_csv)
from hypest.errors import PositivityIndeterminableError

from conftest import oracle_dataset, random_dataset


def test_oracle_is_valid():
    ds = oracle_dataset()
    verdict = validate(ds)
    assert verdict.ok and bool(verdict)
    assert (ds.n, ds.n1, ds.n0, ds.p, ds.q) == (6, 3, 3, 0, 1)


def test_bad_r_reported_at_index():
    recs = list(oracle_dataset().records)
    recs[4] = TrialRecord(a=0.0, l0=(), l1=(1.0,), r=2.0, y=2.0)
    verdict = validate(recs)
    assert not verdict.ok
    assert [v.index for v in verdict.violations] == [4]
    assert "r=" in verdict.violations[0].reason


def test_empty_dataset_violation():
    verdict = validate([])
    assert not verdict.ok
    assert any("n0 >= 1 and n1 >= 1 fails" in v.reason for v in verdict.violations)
    empty = TrialDataset(a=np.zeros(0), l0=np.zeros((0, 0)), l1=np.zeros((0, 1)), r=np.zeros(0),
                         y=np.zeros(0))
    assert not validate(empty).ok


def test_single_arm_and_nonfinite_and_ragged():
    recs = [TrialRecord(1.0, (), (0.0,), 0.0, 1.0), TrialRecord(1.0, (), (np.inf,), 0.0, np.nan),
            TrialRecord(1.0, (0.1,), (0.0, 1.0), 0.0, 1.0)]
    reasons = [v.reason for v in validate(recs).violations]
    assert any("y not finite" in r for r in reasons)
    assert any("covariate not finite" in r for r in reasons)
    assert any("l0 length" in r for r in reasons)
    assert any("l1 length" in r for r in reasons)
    assert any("n0 >= 1" in r for r in reasons)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_records_round_trip(seed):
    ds = random_dataset(np.random.default_rng(seed), n=30)
    assert TrialDataset.from_records(ds.records) == ds
    assert TrialDataset.from_records(ds.records).records == ds.records


def test_dataset_is_immutable():
    ds = oracle_dataset()
    with pytest.raises(ValueError):
        ds.y[0] = 9.0


def test_csv_round_trip(tmp_path):
    ds = random_dataset(np.random.default_rng(5), n=40, p=2, q=2)
    path = tmp_path / "d.csv"
    write_csv(ds, path)
    assert read_csv(path) == ds


@pytest.mark.parametrize("text", [
    "",
    "a,r,y\n1,0,1\n",
    "a,l1_1,r,y\n1,0,0\n",
    "a,l1_1,r,y\n1,x,0,1\n",
    "a,l1_1,r,y,z\n1,0,0,1,2\n",
    "a,l1_1,r,y\n1,,0,1\n",
])
def test_csv_rejects_bad_input(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ValueError):
        read_csv(path)


def test_positivity_independent_r():
    # R independent of (A, L1) with P(R=0) = 1/2 in every (A, L1) cell: the MLE
    # reproduces the cell proportion, so every fitted P(R=0) is 1/2
    a = np.repeat([0.0, 1.0], 8)
    l1 = np.tile([0.0, 0.0, 1.0, 1.0], 4)
    r = np.tile([0.0, 1.0], 8)
    ds = TrialDataset.from_columns(a=a, l1=l1, r=r, y=np.zeros(16))
    rep = positivity_check(ds, 0.01)
    assert rep.min_fitted_no_ice_prob == pytest.approx(0.5, abs=1e-9)
    assert rep.flagged_record_indices == []


def test_positivity_separation():
    l1 = np.linspace(-2, 2, 20)
    a = np.tile([0.0, 1.0], 10)
    ds = TrialDataset.from_columns(a=a, l1=l1, r=(l1 > 0.1).astype(float), y=np.zeros(20))
    with pytest.raises(PositivityIndeterminableError):
        positivity_check(ds)


def test_positivity_flags_monotone_and_exact():
    ds = random_dataset(np.random.default_rng(6), n=150)
    p0 = positivity_check(ds, 0.0).fitted_no_ice_prob
    assert positivity_check(ds, 0.0).flagged_record_indices == []
    prev = set()
    for t in np.linspace(0.05, 1.0, 12):
        rep = positivity_check(ds, t)
        flagged = set(rep.flagged_record_indices)
        assert flagged == set(np.flatnonzero(p0 < t).tolist())
        assert prev <= flagged
        prev = flagged
    assert rep.min_fitted_no_ice_prob == pytest.approx(p0.min())
