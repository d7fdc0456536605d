"""Model formulas for the outcome and ICE models and their design matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .linalg_glm import DesignSpec

if TYPE_CHECKING:
    from .data_model import TrialDataset

INTERACTIONS = ("a:r", "l0:r", "l1:r")


@dataclass(frozen=True)
class ModelFormula:
    """Which terms enter a linear predictor and which records it is fitted to.

    ``target="r0"`` is a g1-style model fitted to ICE-free records, so it may
    not mention R. ``target="all"`` models are fitted to every record and must
    carry an intercept and a main effect of A.
    """

    intercept: bool = True
    a: bool = True
    l0: bool = True
    l1: bool = True
    r: bool = False
    interactions: frozenset[str] = frozenset()
    target: str = "r0"

    def __post_init__(self):
        inter = frozenset(self.interactions)
        object.__setattr__(self, "interactions", inter)
        unknown = inter - set(INTERACTIONS)
        if unknown:
            raise ValueError(f"unsupported interactions {sorted(unknown)}; choose from {INTERACTIONS}")
        if self.target not in ("r0", "all"):
            raise ValueError(f"target must be 'r0' or 'all', got {self.target!r}")
        if self.target == "r0" and (self.r or inter):
            raise ValueError("a formula fitted to R=0 records cannot include R or R interactions")
        if self.target == "all" and not (self.intercept and self.a):
            raise ValueError("formulas fitted to all records need an intercept and a main effect of A")

    @classmethod
    def g1(cls, l0: bool = True, l1: bool = True) -> "ModelFormula":
        return cls(l0=l0, l1=l1)

    @classmethod
    def g2(cls, interactions=(), l0: bool = True) -> "ModelFormula":
        return cls(l0=l0, r=True, interactions=frozenset(interactions), target="all")

    @classmethod
    def stratified(cls) -> "ModelFormula":
        """g2 with every term interacted with R (separate fits per R-stratum)."""
        return cls.g2(interactions=INTERACTIONS)

    @classmethod
    def propensity(cls, l0: bool = True) -> "ModelFormula":
        """Linear predictor of the logistic ICE model, P(R=1 | A, L0, L1)."""
        return cls(l0=l0, target="all")

    @property
    def uses_r(self) -> bool:
        return self.r or bool(self.interactions)

    def spec(self, p: int, q: int) -> DesignSpec:
        cols: list[str] = []
        if self.intercept:
            cols.append("1")
        if self.a:
            cols.append("a")
        l0 = [f"l0_{j + 1}" for j in range(p)] if self.l0 else []
        l1 = [f"l1_{j + 1}" for j in range(q)] if self.l1 else []
        cols += l0 + l1
        if self.r:
            cols.append("r")
        if "a:r" in self.interactions:
            cols.append("a:r")
        if "l0:r" in self.interactions:
            cols += [f"{c}:r" for c in (f"l0_{j + 1}" for j in range(p))]
        if "l1:r" in self.interactions:
            cols += [f"{c}:r" for c in (f"l1_{j + 1}" for j in range(q))]
        return DesignSpec(tuple(cols))


def design_matrix(formula: ModelFormula, ds: "TrialDataset", r=None, extra=None,
                  mask=None) -> tuple[np.ndarray, DesignSpec]:
    """Design matrix of ``formula`` over ``ds``.

    ``r`` overrides the ICE indicator (scalar or array), ``extra`` appends
    named columns (e.g. ``{"p": propensity}``), ``mask`` selects rows.
    """
    rr = ds.r if r is None else np.broadcast_to(np.asarray(r, dtype=np.float64), ds.r.shape)
    a, l0, l1 = ds.a, ds.l0, ds.l1
    if mask is not None:
        a, l0, l1, rr = a[mask], l0[mask], l1[mask], rr[mask]
    n = a.shape[0]
    blocks = []
    if formula.intercept:
        blocks.append(np.ones((n, 1)))
    if formula.a:
        blocks.append(a[:, None])
    if formula.l0 and l0.shape[1]:
        blocks.append(l0)
    if formula.l1 and l1.shape[1]:
        blocks.append(l1)
    if formula.r:
        blocks.append(rr[:, None])
    if "a:r" in formula.interactions:
        blocks.append((a * rr)[:, None])
    if "l0:r" in formula.interactions and l0.shape[1]:
        blocks.append(l0 * rr[:, None])
    if "l1:r" in formula.interactions and l1.shape[1]:
        blocks.append(l1 * rr[:, None])
    spec = formula.spec(ds.p, ds.q)
    if extra:
        for name, col in extra.items():
            col = np.asarray(col, dtype=np.float64)
            blocks.append((col[mask] if mask is not None else col)[:, None])
        spec = DesignSpec(spec.columns + tuple(extra))
    x = np.hstack(blocks) if blocks else np.zeros((n, 0))
    return x, spec
