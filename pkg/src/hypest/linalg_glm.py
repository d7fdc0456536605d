"""Ordinary least squares and binary logistic regression.

The numerical work is done by :mod:`hypest._backend`, which dispatches to the
compiled Householder/Newton kernels or their numpy fallback.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import _backend
from .errors import (
    DimensionMismatchError,
    OneClassOnlyError,
    RankDeficientError,
    SeparationError,
)

RANK_TOL = 1e-10
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 50
DIVERGENCE_BOUND = 30.0


@dataclass(frozen=True)
class DesignSpec:
    """Ordered column names of a design matrix.

    Names are ``"1"`` (intercept, always first when present), ``"a"``,
    ``"l0_j"``, ``"l1_j"``, ``"r"``, products such as ``"l1_1:r"`` and
    free-standing extras such as ``"p"``.
    """

    columns: tuple[str, ...]

    @property
    def intercept(self) -> bool:
        return bool(self.columns) and self.columns[0] == "1"

    def __len__(self) -> int:
        return len(self.columns)

    def index(self, name: str) -> int:
        return self.columns.index(name)

    def row(self, covariates: Mapping[str, object], **overrides) -> np.ndarray:
        """Evaluate the design at one or many covariate points.

        ``covariates`` maps ``a``, ``r``, ``p`` to scalars/arrays and ``l0``,
        ``l1`` to vectors (or 2-d arrays). ``overrides`` replace entries, so
        ``spec.row(cov, r=0)`` sets the ICE indicator to zero.
        """
        cov = dict(covariates)
        cov.update(overrides)
        base: dict[str, np.ndarray] = {}
        n = None
        for key in ("a", "r", "p"):
            if key in cov and cov[key] is not None:
                base[key] = np.atleast_1d(np.asarray(cov[key], dtype=np.float64))
        for key in ("l0", "l1"):
            if key in cov and cov[key] is not None:
                block = np.asarray(cov[key], dtype=np.float64)
                block = block.reshape(1, -1) if block.ndim <= 1 else block
                for j in range(block.shape[1]):
                    base[f"{key}_{j + 1}"] = block[:, j]
        for v in base.values():
            n = v.shape[0] if n is None else max(n, v.shape[0])
        n = 1 if n is None else n
        base["1"] = np.ones(n)
        needed = {c for name in self.columns for c in name.split(":")}
        missing = needed - set(base)
        if missing:
            raise DimensionMismatchError(f"covariates missing {sorted(missing)}")
        for key in ("l0", "l1"):
            given = sum(1 for k in base if k.startswith(key + "_"))
            used = sum(1 for c in needed if c.startswith(key + "_"))
            if used and given != used:
                raise DimensionMismatchError(f"{key} has {given} entries, design uses {used}")
        cols = []
        for name in self.columns:
            parts = name.split(":")
            col = base[parts[0]]
            for part in parts[1:]:
                col = col * base[part]
            cols.append(np.broadcast_to(col, (n,)))
        return np.column_stack(cols) if cols else np.zeros((n, 0))


@dataclass(frozen=True)
class FittedLinearModel:
    design: DesignSpec
    coefficients: np.ndarray
    residual_variance: float
    n_used: int

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.coefficients.shape[0]:
            raise DimensionMismatchError(
                f"design has {x.shape[-1]} columns, model has {self.coefficients.shape[0]}")
        return x @ self.coefficients

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.design.index(name)])


@dataclass(frozen=True)
class FittedLogisticModel:
    design: DesignSpec
    coefficients: np.ndarray
    converged: bool
    iterations: int

    def linear_predictor(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.coefficients.shape[0]:
            raise DimensionMismatchError(
                f"design has {x.shape[-1]} columns, model has {self.coefficients.shape[0]}")
        return x @ self.coefficients

    def predict(self, x: np.ndarray) -> np.ndarray:
        return expit(self.linear_predictor(x))


def expit(eta):
    eta = np.asarray(eta, dtype=np.float64)
    e = np.exp(-np.abs(eta))
    return np.where(eta >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _default_spec(p: int) -> DesignSpec:
    return DesignSpec(tuple(f"x{j}" for j in range(p)))


def ols_fit(x, y, design: DesignSpec | None = None) -> FittedLinearModel:
    """Least-squares fit of ``y`` on the columns of ``x`` via Householder QR.

    Raises ``RankDeficientError`` when min|R_jj| / max|R_jj| < 1e-10 or there
    are fewer rows than columns.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = x.shape
    if n < p or p == 0:
        raise RankDeficientError(f"{n} rows for {p} columns")
    coef, ratio = _backend.lstsq(x, y)
    if not ratio >= RANK_TOL:
        raise RankDeficientError(f"R diagonal ratio {ratio:.3g} below {RANK_TOL:g}")
    resid = y - x @ coef
    return FittedLinearModel(
        design=design or _default_spec(p),
        coefficients=coef,
        residual_variance=float(resid @ resid) / n,
        n_used=n,
    )


def ols_predict(model: FittedLinearModel, covariates: Mapping[str, object], **overrides):
    """Linear predictor at ``covariates`` with optional overrides (e.g. ``r=0``).

    Returns a float for a single covariate point, an array otherwise.
    """
    x = model.design.row(covariates, **overrides)
    out = model.predict(x)
    return float(out[0]) if out.shape[0] == 1 else out


def logistic_fit(x, r, design: DesignSpec | None = None) -> FittedLogisticModel:
    """Newton-Raphson maximum likelihood fit of P(r=1 | x) = expit(x b)."""
    x = np.asarray(x, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if r.size == 0 or np.all(r == r[0]):
        raise OneClassOnlyError("response has a single class")
    coef, status, iters = _backend.logistic_newton(
        x, r, NEWTON_TOL, NEWTON_MAX_ITER, DIVERGENCE_BOUND)
    if status == 1:
        raise SeparationError(f"coefficient exceeded {DIVERGENCE_BOUND:g} after {iters} iterations")
    if status == 2:
        raise SeparationError(f"no convergence within {NEWTON_MAX_ITER} iterations")
    if status == 3:
        raise RankDeficientError("singular information matrix in logistic fit")
    return FittedLogisticModel(design or _default_spec(x.shape[1]), coef, True, iters)


def logistic_predict(model: FittedLogisticModel, covariates: Mapping[str, object], **overrides):
    """Fitted probability at ``covariates``; float for a single point."""
    x = model.design.row(covariates, **overrides)
    out = model.predict(x)
    return float(out[0]) if out.shape[0] == 1 else out
