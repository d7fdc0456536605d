"""Trial records, column-wise datasets, validation and the positivity diagnostic."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EstimationError, PositivityIndeterminableError

DEFAULT_POSITIVITY_THRESHOLD = 0.01


@dataclass(frozen=True)
class TrialRecord:
    """One randomised patient: treatment, covariates, ICE indicator, outcome."""

    a: float
    l0: tuple[float, ...]
    l1: tuple[float, ...]
    r: float
    y: float


def _readonly(x: np.ndarray) -> np.ndarray:
    x.setflags(write=False)
    return x


@dataclass(frozen=True, eq=False)
class TrialDataset:
    """Immutable column store of trial records.

    ``a``, ``r`` and ``y`` have shape ``(n,)``; ``l0`` has shape ``(n, p)``
    with ``p`` possibly zero and ``l1`` has shape ``(n, q)``.
    """

    a: np.ndarray
    l0: np.ndarray
    l1: np.ndarray
    r: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=np.float64).reshape(-1)
        n = a.shape[0]
        r = np.array(self.r, dtype=np.float64).reshape(-1)
        y = np.array(self.y, dtype=np.float64).reshape(-1)
        l0 = np.array(self.l0, dtype=np.float64)
        l1 = np.array(self.l1, dtype=np.float64)
        if l0.size == 0:
            l0 = np.zeros((n, 0))
        if l0.ndim == 1:
            l0 = l0.reshape(n, -1)
        if l1.ndim == 1:
            l1 = l1.reshape(n, -1)
        if not (r.shape[0] == y.shape[0] == l0.shape[0] == l1.shape[0] == n):
            raise ValueError("column lengths differ")
        for name, arr in (("a", a), ("l0", l0), ("l1", l1), ("r", r), ("y", y)):
            object.__setattr__(self, name, _readonly(arr))

    @classmethod
    def from_columns(cls, a, l1, r, y, l0=None) -> "TrialDataset":
        a = np.asarray(a, dtype=np.float64)
        if l0 is None:
            l0 = np.zeros((a.shape[0], 0))
        return cls(a=a, l0=l0, l1=l1, r=r, y=y)

    @classmethod
    def from_records(cls, records: Sequence[TrialRecord]) -> "TrialDataset":
        records = list(records)
        p = {len(rec.l0) for rec in records}
        q = {len(rec.l1) for rec in records}
        if len(p) > 1 or len(q) > 1:
            raise ValueError("covariate block lengths vary across records; see validate()")
        n = len(records)
        return cls(
            a=[rec.a for rec in records],
            l0=np.array([rec.l0 for rec in records], dtype=np.float64).reshape(n, p.pop() if p else 0),
            l1=np.array([rec.l1 for rec in records], dtype=np.float64).reshape(n, q.pop() if q else 0),
            r=[rec.r for rec in records],
            y=[rec.y for rec in records],
        )

    @property
    def n(self) -> int:
        return int(self.a.shape[0])

    @property
    def n1(self) -> int:
        return int(np.sum(self.a == 1))

    @property
    def n0(self) -> int:
        return int(np.sum(self.a == 0))

    @property
    def p(self) -> int:
        return int(self.l0.shape[1])

    @property
    def q(self) -> int:
        return int(self.l1.shape[1])

    @property
    def records(self) -> tuple[TrialRecord, ...]:
        return tuple(
            TrialRecord(
                a=float(self.a[i]),
                l0=tuple(float(v) for v in self.l0[i]),
                l1=tuple(float(v) for v in self.l1[i]),
                r=float(self.r[i]),
                y=float(self.y[i]),
            )
            for i in range(self.n)
        )

    def with_outcome(self, y) -> "TrialDataset":
        """Copy of the dataset with the outcome column replaced."""
        return TrialDataset(a=self.a, l0=self.l0, l1=self.l1, r=self.r, y=y)

    def subset(self, mask) -> "TrialDataset":
        mask = np.asarray(mask)
        return TrialDataset(a=self.a[mask], l0=self.l0[mask], l1=self.l1[mask],
                            r=self.r[mask], y=self.y[mask])

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrialDataset):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("a", "l0", "l1", "r", "y")
        )

    __hash__ = None


@dataclass(frozen=True)
class Violation:
    index: int | None
    reason: str


@dataclass(frozen=True)
class ValidationVerdict:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(data: TrialDataset | Iterable[TrialRecord]) -> ValidationVerdict:
    """Check record and dataset invariants; violations are returned, not raised.

    Accepts a ``TrialDataset`` or any iterable of ``TrialRecord`` (the latter
    can also carry ragged covariate blocks, which are reported).
    """
    records = data.records if isinstance(data, TrialDataset) else tuple(data)
    out: list[Violation] = []
    p0 = len(records[0].l0) if records else 0
    q0 = len(records[0].l1) if records else 0
    for i, rec in enumerate(records):
        if rec.a not in (0, 1):
            out.append(Violation(i, f"a={rec.a!r} not in {{0,1}}"))
        if rec.r not in (0, 1):
            out.append(Violation(i, f"r={rec.r!r} not in {{0,1}}"))
        if not math.isfinite(rec.y):
            out.append(Violation(i, "y not finite"))
        if not all(math.isfinite(v) for v in (*rec.l0, *rec.l1)):
            out.append(Violation(i, "covariate not finite"))
        if len(rec.l1) < 1:
            out.append(Violation(i, "l1 block is empty"))
        if len(rec.l0) != p0:
            out.append(Violation(i, f"l0 length {len(rec.l0)} != {p0}"))
        if len(rec.l1) != q0:
            out.append(Violation(i, f"l1 length {len(rec.l1)} != {q0}"))
    n1 = sum(1 for rec in records if rec.a == 1)
    n0 = sum(1 for rec in records if rec.a == 0)
    if n0 < 1 or n1 < 1:
        out.append(Violation(None, f"n0 >= 1 and n1 >= 1 fails (n0={n0}, n1={n1})"))
    return ValidationVerdict(tuple(out))


@dataclass(frozen=True)
class PositivityReport:
    min_fitted_no_ice_prob: float
    flagged_record_indices: list[int] = field(default_factory=list)
    threshold: float = DEFAULT_POSITIVITY_THRESHOLD
    fitted_no_ice_prob: np.ndarray | None = field(default=None, repr=False, compare=False)


def positivity_check(dataset: TrialDataset, threshold: float = DEFAULT_POSITIVITY_THRESHOLD,
                     formula=None) -> PositivityReport:
    """Fit P(R=1 | A, L0, L1) by logistic regression and flag small P(R=0 | .).

    Raises ``PositivityIndeterminableError`` when the ICE model cannot be
    fitted (separation, a single ICE class, collinear design).
    """
    from .formulas import ModelFormula, design_matrix
    from .linalg_glm import logistic_fit

    formula = formula or ModelFormula.propensity()
    x, spec = design_matrix(formula, dataset)
    try:
        model = logistic_fit(x, dataset.r, design=spec)
    except EstimationError as exc:
        raise PositivityIndeterminableError(f"ICE model not fittable: {exc}") from exc
    p0 = 1.0 - model.predict(x)
    flagged = [int(i) for i in np.flatnonzero(p0 < threshold)]
    return PositivityReport(float(p0.min()), flagged, threshold, p0)


CSV_REQUIRED = ("a", "r", "y")


def read_csv(path) -> TrialDataset:
    """Read a patient CSV with columns ``a, l0_1..l0_p, l1_1..l1_q, r, y``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = [row for row in reader if row and any(c.strip() for c in row)]
    missing = [c for c in CSV_REQUIRED if c not in header]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    l0_cols = sorted((h for h in header if h.startswith("l0_")), key=lambda h: int(h[3:]))
    l1_cols = sorted((h for h in header if h.startswith("l1_")), key=lambda h: int(h[3:]))
    if not l1_cols:
        raise ValueError(f"{path}: at least one l1_* column is required")
    unknown = set(header) - set(CSV_REQUIRED) - set(l0_cols) - set(l1_cols)
    if unknown:
        raise ValueError(f"{path}: unknown columns {sorted(unknown)}")
    idx = {h: j for j, h in enumerate(header)}
    values = np.empty((len(rows), len(header)))
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ValueError(f"{path}: line {i + 2} has {len(row)} cells, expected {len(header)}")
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell == "":
                raise ValueError(f"{path}: missing cell at line {i + 2}, column {header[j]}")
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise ValueError(f"{path}: bad number {cell!r} at line {i + 2}") from None
    col = lambda h: values[:, idx[h]]  # noqa: E731
    return TrialDataset(
        a=col("a"),
        l0=values[:, [idx[h] for h in l0_cols]] if l0_cols else np.zeros((len(rows), 0)),
        l1=values[:, [idx[h] for h in l1_cols]],
        r=col("r"),
        y=col("y"),
    )


def write_csv(dataset: TrialDataset, path) -> None:
    header = (["a"] + [f"l0_{j + 1}" for j in range(dataset.p)]
              + [f"l1_{j + 1}" for j in range(dataset.q)] + ["r", "y"])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(dataset.n):
            w.writerow([repr(float(v)) for v in (dataset.a[i], *dataset.l0[i], *dataset.l1[i],
                                                 dataset.r[i], dataset.y[i])])
