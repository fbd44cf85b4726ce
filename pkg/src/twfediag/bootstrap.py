"""Group-level cluster bootstrap for the panel estimators.

Resampling draws whole groups with replacement, keeping each group's
full time series together so the within-group dependence structure
survives. Duplicated groups get fresh labels, which keeps the
fixed-effects design full rank. Per-replication randomness comes from a
counter-based generator keyed by (seed, replication index), so results
are reproducible and independent of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numpy.random import Generator, Philox

from .didm import did_m, did_m_placebo
from .errors import (
    AllDrawsDegenerateError,
    CollinearError,
    DegenerateNormalizerError,
    HorizonTooLargeError,
    NoPlaceboSwitchersError,
    NoSwitchersError,
    PreconditionNotMetError,
    TooFewGroupsError,
)
from .panel import CellTable, aggregate_cells
from .regression import beta_fd, beta_fe

#: errors that mark a resampled panel as degenerate for an estimator
_DEGENERATE = (
    CollinearError,
    DegenerateNormalizerError,
    NoSwitchersError,
    NoPlaceboSwitchersError,
    HorizonTooLargeError,
)

_PAIRS = (("fe", "fd"), ("fe", "didm"), ("fd", "didm"))


def _estimator_fn(estimator_id: str):
    if estimator_id == "fe":
        return lambda cells: beta_fe(cells).beta
    if estimator_id == "fd":
        return lambda cells: beta_fd(cells).beta
    if estimator_id == "didm":
        return lambda cells: did_m(cells).estimate
    if estimator_id.startswith("placebo_"):
        horizon = int(estimator_id.split("_", 1)[1])
        return lambda cells: did_m_placebo(cells, horizon).estimate
    raise PreconditionNotMetError(f"unknown estimator id {estimator_id!r}")


def _rep_rng(seed: int, rep: int) -> Generator:
    return Generator(Philox(key=np.array([seed, rep], dtype=np.uint64)))


@dataclass(frozen=True)
class DifferenceTest:
    estimator_a: str
    estimator_b: str
    difference: float
    se: float
    t_stat: float

    def to_dict(self):
        return {
            "estimators": [self.estimator_a, self.estimator_b],
            "difference": self.difference,
            "se": self.se,
            "t_stat": self.t_stat,
        }


@dataclass(frozen=True)
class BootstrapReport:
    estimators: tuple
    estimates: dict
    standard_errors: dict
    intervals: dict  # id -> (lo, hi), percentile method
    normal_intervals: dict  # id -> (lo, hi), estimate +/- 1.96 se
    differences: tuple
    replications_requested: int
    replications_used: int
    replications_skipped: int
    seed: int

    def to_dict(self):
        return {
            "seed": self.seed,
            "replications_requested": self.replications_requested,
            "replications_used": self.replications_used,
            "replications_skipped": self.replications_skipped,
            "estimates": dict(self.estimates),
            "standard_errors": dict(self.standard_errors),
            "intervals_percentile": {k: list(v) for k, v in self.intervals.items()},
            "intervals_normal": {k: list(v) for k, v in self.normal_intervals.items()},
            "differences": [d.to_dict() for d in self.differences],
        }


def _as_cells(data) -> CellTable:
    if isinstance(data, CellTable):
        return data
    return aggregate_cells(data)


def _t_ratio(diff: float, se: float) -> float:
    if se == 0.0:
        if diff == 0.0:
            return 0.0
        return float("inf") if diff > 0 else float("-inf")
    return diff / se


def cluster_bootstrap(
    data,
    estimators: Iterable[str] = ("fe", "fd", "didm"),
    B: int = 500,
    seed: int = 0,
) -> BootstrapReport:
    """Bootstrap standard errors, percentile intervals and difference tests.

    Parameters
    ----------
    data : CellTable or iterable of Observation
    estimators : estimator ids among "fe", "fd", "didm", "placebo_<k>"
    B : number of replications (>= 2)
    seed : master seed; same seed and inputs give bit-identical reports

    A replication on which any requested estimator is degenerate
    (collinear resample, no switchers, ...) is skipped and counted, never
    imputed. Point estimates always come from the full sample; the
    bootstrap only supplies the dispersion.
    """
    cells = _as_cells(data)
    ids = list(dict.fromkeys(estimators))
    if not ids:
        raise PreconditionNotMetError("no estimators requested")
    if B < 2:
        raise PreconditionNotMetError("need at least 2 bootstrap replications")
    G = cells.n_groups
    if G < 2:
        raise TooFewGroupsError("cluster bootstrap needs at least 2 groups")

    fns = {i: _estimator_fn(i) for i in ids}
    points = {i: float(fns[i](cells)) for i in ids}

    draws = np.full((B, len(ids)), np.nan)
    used = 0
    for b in range(B):
        rng = _rep_rng(seed, b)
        indices = rng.integers(0, G, size=G)
        resampled = cells.take_groups(indices)
        try:
            row = [float(fns[i](resampled)) for i in ids]
        except _DEGENERATE:
            continue
        draws[used, :] = row
        used += 1
    if used == 0:
        raise AllDrawsDegenerateError(
            f"all {B} bootstrap replications were degenerate"
        )
    draws = draws[:used]

    ses = {}
    pct = {}
    normal = {}
    for j, i in enumerate(ids):
        col = draws[:, j]
        se = float(col.std(ddof=1)) if used > 1 else 0.0
        ses[i] = se
        lo, hi = np.percentile(col, [2.5, 97.5])
        pct[i] = (float(lo), float(hi))
        normal[i] = (points[i] - 1.96 * se, points[i] + 1.96 * se)

    diffs = []
    for a, b_ in _PAIRS:
        if a in ids and b_ in ids:
            ja, jb = ids.index(a), ids.index(b_)
            delta = draws[:, ja] - draws[:, jb]
            se = float(delta.std(ddof=1)) if used > 1 else 0.0
            point = points[a] - points[b_]
            diffs.append(
                DifferenceTest(
                    estimator_a=a,
                    estimator_b=b_,
                    difference=point,
                    se=se,
                    t_stat=_t_ratio(point, se),
                )
            )

    return BootstrapReport(
        estimators=tuple(ids),
        estimates=points,
        standard_errors=ses,
        intervals=pct,
        normal_intervals=normal,
        differences=tuple(diffs),
        replications_requested=B,
        replications_used=used,
        replications_skipped=B - used,
        seed=seed,
    )


@dataclass(frozen=True)
class JointTestVerdict:
    """Outcome of the fe-vs-fd equality test.

    A significant difference means the two regressions cannot both put
    effect-uncorrelated weights on the treated cells, so at least one of
    the two uncorrelatedness conditions fails.
    """

    t_stat: float
    rejected: bool
    level: float = 0.05

    def to_dict(self):
        return {"t_stat": self.t_stat, "rejected": self.rejected, "level": self.level}


def joint_assumption_test(report: BootstrapReport, critical: float = 1.96) -> JointTestVerdict:
    """Flag rejection when |t| of the fe-fd difference exceeds ``critical``."""
    for d in report.differences:
        if {d.estimator_a, d.estimator_b} == {"fe", "fd"}:
            return JointTestVerdict(t_stat=d.t_stat, rejected=abs(d.t_stat) > critical)
    raise PreconditionNotMetError("report does not contain both fe and fd estimates")
