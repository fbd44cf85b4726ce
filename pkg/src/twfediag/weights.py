"""Decomposition weights attached to the regression coefficients.

Each regression coefficient equals the share-weighted sum, over treated
cells, of cell-level treatment effects multiplied by a weight. Weights
are normalized so that sum(share * weight) = 1; a cell's *contribution*
share * weight is the coefficient the cell's effect receives in the
decomposition. Some weights can be negative, which is the whole point
of the diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    ConstantCovariateError,
    DegenerateNormalizerError,
    PreconditionNotMetError,
    ZeroDispersionError,
)
from .panel import CellTable, constant_growth_holds
from .regression import FdResiduals, FeResiduals, residualize_fd, residualize_fe

#: entries with |weight| below this are classified as zero in the summary
ZERO_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class WeightEntry:
    group: object
    time: object
    share: float  # N_{g,t} / N_treated
    weight: float

    @property
    def contribution(self) -> float:
        """share * weight: the coefficient this cell's effect receives."""
        return self.share * self.weight

    def to_dict(self):
        return {
            "group": self.group,
            "time": self.time,
            "share": self.share,
            "weight": self.weight,
            "contribution": self.contribution,
        }


@dataclass(frozen=True)
class WeightSummary:
    n_positive: int
    n_negative: int
    n_zero: int
    sum_negative: float  # sum of share*weight over strictly negative weights
    sigma_w: float  # sqrt(sum share * (weight - 1)^2)

    def to_dict(self):
        return {
            "n_positive": self.n_positive,
            "n_negative": self.n_negative,
            "n_zero": self.n_zero,
            "sum_negative": self.sum_negative,
            "sigma_w": self.sigma_w,
        }


@dataclass(frozen=True)
class WeightTable:
    """Per-treated-cell decomposition weights with summary statistics."""

    kind: str  # "fe" | "fd"
    entries: tuple

    @classmethod
    def from_entries(cls, kind: str, entries: Sequence[WeightEntry]) -> "WeightTable":
        return cls(kind=kind, entries=tuple(entries))

    @property
    def shares(self) -> np.ndarray:
        return np.array([e.share for e in self.entries])

    @property
    def weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.entries])

    @property
    def summary(self) -> WeightSummary:
        s, w = self.shares, self.weights
        neg = w < -ZERO_WEIGHT_TOL
        pos = w > ZERO_WEIGHT_TOL
        return WeightSummary(
            n_positive=int(pos.sum()),
            n_negative=int(neg.sum()),
            n_zero=int(len(w) - pos.sum() - neg.sum()),
            sum_negative=float((s[neg] * w[neg]).sum()),
            sigma_w=float(np.sqrt((s * (w - 1.0) ** 2).sum())),
        )

    def __len__(self):
        return len(self.entries)

    def to_dict(self):
        return {
            "kind": self.kind,
            "entries": [e.to_dict() for e in self.entries],
            "summary": self.summary.to_dict(),
        }


def _build_table(cells: CellTable, kind: str, numerators: np.ndarray) -> WeightTable:
    """Normalize per-treated-cell numerators into a weight table."""
    mask = cells.treated_mask
    if not mask.any():
        raise DegenerateNormalizerError("no treated cells")
    shares = cells.counts[mask].astype(float) / cells.n_treated
    num = numerators[mask]
    normalizer = float((shares * num).sum())
    if abs(normalizer) < 1e-12:
        raise DegenerateNormalizerError(
            f"treated-average {kind} residual is zero; weights undefined"
        )
    w = num / normalizer
    entries = [
        WeightEntry(cells.groups[g], cells.periods[t], float(sh), float(wi))
        for (g, t), sh, wi in zip(np.argwhere(mask), shares, w)
    ]
    return WeightTable.from_entries(kind, entries)


def fe_weights(cells: CellTable, residuals: FeResiduals | None = None) -> WeightTable:
    """Weights the fixed-effects coefficient puts on treated-cell effects.

    weight = eps_{g,t} / sum over treated cells of share * eps, where eps
    is the fixed-effects residual of the treatment.
    """
    if residuals is None:
        residuals = residualize_fe(cells)
    return _build_table(cells, "fe", residuals.eps)


def fd_weights(cells: CellTable, residuals: FdResiduals | None = None) -> WeightTable:
    """Weights the first-difference coefficient puts on treated-cell effects.

    The numerator for cell (g, t) is eps_fd(g,t) - (N_{g,t+1}/N_{g,t}) *
    eps_fd(g,t+1), with the residual taken as 0 beyond the panel ends.
    """
    if residuals is None:
        residuals = residualize_fd(cells)
    counts = cells.counts.astype(float)
    eps = residuals.eps
    num = eps.copy()
    num[:, :-1] -= (counts[:, 1:] / counts[:, :-1]) * eps[:, 1:]
    return _build_table(cells, "fd", num)


@dataclass(frozen=True)
class MonotonicityViolation:
    """One pair whose weights fail the treated-share ordering.

    ``high`` is the period (axis="time") or group (axis="group") with the
    strictly larger treated share; its weight should have been strictly
    smaller than ``low``'s but was not. ``fixed`` is the common group or
    period of the comparison.
    """

    axis: str  # "time" | "group"
    high: object
    low: object
    fixed: object

    def __str__(self):
        if self.axis == "time":
            return (
                f"group {self.fixed!r}: weight at period {self.high!r} is not "
                f"below the weight at period {self.low!r}"
            )
        return (
            f"period {self.fixed!r}: weight of group {self.high!r} is not "
            f"below the weight of group {self.low!r}"
        )


def check_prop1_monotonicity(cells: CellTable, table: WeightTable) -> list:
    """Check that larger treated shares come with smaller fe weights.

    Within a group, a period with a strictly larger share of treated
    units must get a strictly smaller weight; symmetrically across
    groups within a period. Requires the constant-growth condition on
    cell counts; returns the list of violating pairs (empty when the
    ordering holds everywhere).
    """
    if not constant_growth_holds(cells):
        raise PreconditionNotMetError(
            "count growth rates vary across groups; ordering result does not apply"
        )
    wmap = {(e.group, e.time): e.weight for e in table.entries}
    d_period = {p: cells.d_period[i] for i, p in enumerate(cells.periods)}
    d_group = {g: cells.d_group[i] for i, g in enumerate(cells.groups)}

    violations = []
    by_group: dict = {}
    by_period: dict = {}
    for g, t in wmap:
        by_group.setdefault(g, []).append(t)
        by_period.setdefault(t, []).append(g)

    for g, ts in by_group.items():
        for i, t in enumerate(ts):
            for t2 in ts[i + 1:]:
                hi, lo = (t, t2) if d_period[t] > d_period[t2] else (t2, t)
                if d_period[hi] - d_period[lo] > 1e-12 and not (
                    wmap[(g, hi)] - wmap[(g, lo)] < -1e-12
                ):
                    violations.append(MonotonicityViolation("time", hi, lo, g))
    for t, gs in by_period.items():
        for i, g in enumerate(gs):
            for g2 in gs[i + 1:]:
                hi, lo = (g, g2) if d_group[g] > d_group[g2] else (g2, g)
                if d_group[hi] - d_group[lo] > 1e-12 and not (
                    wmap[(hi, t)] - wmap[(lo, t)] < -1e-12
                ):
                    violations.append(MonotonicityViolation("group", hi, lo, t))
    return violations


def correlate_weights(table: WeightTable, covariate: Sequence[float]) -> tuple[float, float]:
    """Share-weighted correlation between weights and a per-cell covariate.

    Returns (correlation, t-statistic) with t = r * sqrt((n-2)/(1-r^2)).
    All moments use the treated-cell shares as weights.
    """
    w = table.weights
    s = table.shares
    x = np.asarray(covariate, dtype=float)
    n = len(w)
    if n < 3:
        raise PreconditionNotMetError("need at least 3 treated cells for a correlation")
    if x.shape != w.shape:
        raise PreconditionNotMetError(
            f"covariate has {x.shape[0] if x.ndim else 0} values for {n} treated cells"
        )
    total = s.sum()
    mw = (s * w).sum() / total
    mx = (s * x).sum() / total
    var_w = (s * (w - mw) ** 2).sum() / total
    var_x = (s * (x - mx) ** 2).sum() / total
    if var_x <= 0.0:
        raise ConstantCovariateError("covariate does not vary across treated cells")
    if var_w <= 0.0:
        raise ZeroDispersionError("weights do not vary across treated cells")
    r = float((s * (w - mw) * (x - mx)).sum() / total / np.sqrt(var_w * var_x))
    r = min(1.0, max(-1.0, r))
    if abs(r) == 1.0:
        t = float("inf") if r > 0 else float("-inf")
    else:
        t = r * np.sqrt((n - 2) / (1.0 - r * r))
    return r, float(t)
