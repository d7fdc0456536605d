import sys

import numpy as np
import pytest

from hypest.data_model import TrialDataset


def oracle_dataset(l0=None) -> TrialDataset:
    # (A, L1, R, Y); arm 1 then arm 0
    rows = np.array([
        [1, 1, 0, 3],
        [1, 2, 0, 4],
        [1, 2, 1, 4],
        [0, 0, 0, 1],
        [0, 1, 0, 2],
        [0, 1, 1, 2],
    ], dtype=float)
    return TrialDataset.from_columns(a=rows[:, 0], l1=rows[:, 1], r=rows[:, 2], y=rows[:, 3], l0=l0)


@pytest.fixture
def oracle():
    return oracle_dataset()


def random_dataset(rng: np.random.Generator, n=None, p=None, q=None) -> TrialDataset:
    """Valid dataset with continuous L0/L1 and every (A, R) cell well populated.

    Cells hold at least p + q + 3 records so that R-stratified fits are
    identified.
    """
    p = int(rng.integers(0, 3)) if p is None else p
    q = int(rng.integers(1, 3)) if q is None else q
    need = p + q + 3
    # 8 * need keeps the rejection loop short
    n = int(rng.integers(max(20, 8 * need), 201)) if n is None else n
    if n < 4 * need:
        raise ValueError(f"n={n} too small for {need} records per (A, R) cell")
    while True:
        a = (rng.random(n) < 0.5).astype(float)
        l0 = rng.normal(size=(n, p))
        l1 = 0.7 * a[:, None] + rng.normal(size=(n, q)) + (l0[:, :1].sum(axis=1, keepdims=True) if p else 0)
        eta = -0.3 + 0.5 * a + 0.6 * l1[:, 0]
        r = (rng.random(n) < 1 / (1 + np.exp(-eta))).astype(float)
        cells = [np.sum((a == i) & (r == j)) for i in (0, 1) for j in (0, 1)]
        if min(cells) >= need:
            break
    y = (0.5 + a + l1 @ rng.normal(size=q) + (l0 @ rng.normal(size=p) if p else 0)
         + 0.8 * r + 0.4 * r * l1[:, 0] + rng.normal(size=n))
    return TrialDataset(a=a, l0=l0, l1=l1, r=r, y=y)


@pytest.fixture
def make_random():
    return random_dataset


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
