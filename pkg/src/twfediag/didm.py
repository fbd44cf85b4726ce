"""Switcher-based DID estimator and its pre-trend placebos.

The estimator averages, over consecutive period pairs, difference-in-
differences that compare cells switching into (out of) treatment against
cells whose treatment is stable, weighting each component by its share
of switching observations. Placebos run the same comparison on outcome
changes taken before the switch, among cells with a stable treatment
history over the placebo window.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Collection, Optional

import numpy as np

from .errors import (
    HorizonTooLargeError,
    NoPlaceboSwitchersError,
    NoSwitchersError,
    PreconditionNotMetError,
)
from .panel import CellTable


@dataclass(frozen=True)
class SwitcherCounts:
    """Observation counts by treatment path, per period t >= 2.

    Dict keys are period labels. ``n_joiner[t]`` counts observations in
    groups untreated at t-1 and treated at t; ``n_leaver`` the reverse;
    ``n_stable_untreated`` / ``n_stable_treated`` the no-change paths.
    The placebo analogues condition on one extra stable pre-period
    (t >= 3).
    """

    n_joiner: dict
    n_leaver: dict
    n_stable_untreated: dict
    n_stable_treated: dict
    n_switchers: int
    n_joiner_pl: dict
    n_leaver_pl: dict
    n_stable_untreated_pl: dict
    n_stable_treated_pl: dict
    n_switchers_pl: int

    def to_dict(self):
        return {
            "n_joiner": {str(k): v for k, v in self.n_joiner.items()},
            "n_leaver": {str(k): v for k, v in self.n_leaver.items()},
            "n_stable_untreated": {str(k): v for k, v in self.n_stable_untreated.items()},
            "n_stable_treated": {str(k): v for k, v in self.n_stable_treated.items()},
            "n_switchers": self.n_switchers,
            "n_switchers_placebo": self.n_switchers_pl,
        }


def switcher_counts(cells: CellTable) -> SwitcherCounts:
    """Count observations on each two-period (and three-period) treatment path."""
    if cells.n_periods < 2:
        raise PreconditionNotMetError("switcher counts need at least two periods")
    D = cells.treat
    n = cells.counts
    joiner, leaver, stable0, stable1 = {}, {}, {}, {}
    for t in range(1, cells.n_periods):
        label = cells.periods[t]
        prev, cur, w = D[:, t - 1], D[:, t], n[:, t]
        joiner[label] = int(w[(prev == 0) & (cur == 1)].sum())
        leaver[label] = int(w[(prev == 1) & (cur == 0)].sum())
        stable0[label] = int(w[(prev == 0) & (cur == 0)].sum())
        stable1[label] = int(w[(prev == 1) & (cur == 1)].sum())
    joiner_pl, leaver_pl, stable0_pl, stable1_pl = {}, {}, {}, {}
    for t in range(2, cells.n_periods):
        label = cells.periods[t]
        p2, p1, cur, w = D[:, t - 2], D[:, t - 1], D[:, t], n[:, t]
        joiner_pl[label] = int(w[(p2 == 0) & (p1 == 0) & (cur == 1)].sum())
        leaver_pl[label] = int(w[(p2 == 1) & (p1 == 1) & (cur == 0)].sum())
        stable0_pl[label] = int(w[(p2 == 0) & (p1 == 0) & (cur == 0)].sum())
        stable1_pl[label] = int(w[(p2 == 1) & (p1 == 1) & (cur == 1)].sum())
    return SwitcherCounts(
        n_joiner=joiner,
        n_leaver=leaver,
        n_stable_untreated=stable0,
        n_stable_treated=stable1,
        n_switchers=sum(joiner.values()) + sum(leaver.values()),
        n_joiner_pl=joiner_pl,
        n_leaver_pl=leaver_pl,
        n_stable_untreated_pl=stable0_pl,
        n_stable_treated_pl=stable1_pl,
        n_switchers_pl=sum(joiner_pl.values()) + sum(leaver_pl.values()),
    )


@dataclass(frozen=True)
class PeriodDid:
    period: object
    did_plus: float
    did_minus: float
    n_joiners: int
    n_leavers: int
    plus_defined: bool
    minus_defined: bool

    def to_dict(self):
        return {
            "period": self.period,
            "did_plus": self.did_plus,
            "did_minus": self.did_minus,
            "n_joiners": self.n_joiners,
            "n_leavers": self.n_leavers,
            "plus_defined": self.plus_defined,
            "minus_defined": self.minus_defined,
        }


@dataclass(frozen=True)
class DidmResult:
    estimate: float
    per_period: tuple
    joiners_estimate: Optional[float]
    leavers_estimate: Optional[float]
    stable_group_warnings: tuple
    n_switchers: int

    def to_dict(self):
        return {
            "estimate": self.estimate,
            "joiners": self.joiners_estimate,
            "leavers": self.leavers_estimate,
            "n_switchers": self.n_switchers,
            "per_period": [p.to_dict() for p in self.per_period],
            "warnings": list(self.stable_group_warnings),
        }


@dataclass(frozen=True)
class PlaceboResult:
    horizon: int
    estimate: float
    per_period: tuple
    joiners_estimate: Optional[float]
    leavers_estimate: Optional[float]
    subsample_cells: frozenset
    stable_group_warnings: tuple
    n_switchers: int

    def to_dict(self):
        return {
            "horizon": self.horizon,
            "estimate": self.estimate,
            "joiners": self.joiners_estimate,
            "leavers": self.leavers_estimate,
            "n_switchers": self.n_switchers,
            "per_period": [p.to_dict() for p in self.per_period],
            "subsample_cells": sorted(
                ([str(g), str(t)] for g, t in self.subsample_cells),
            ),
            "warnings": list(self.stable_group_warnings),
        }


def _eligibility_matrix(cells: CellTable, eligible) -> np.ndarray:
    """Boolean (G, T) matrix; eligible=None means everything participates."""
    if eligible is None:
        return np.ones((cells.n_groups, cells.n_periods), dtype=bool)
    mat = np.zeros((cells.n_groups, cells.n_periods), dtype=bool)
    gi = {g: i for i, g in enumerate(cells.groups)}
    ti = {t: i for i, t in enumerate(cells.periods)}
    for g, t in eligible:
        mat[gi[g], ti[t]] = True
    return mat


def _weighted_mean(values, weights):
    return float((weights * values).sum() / weights.sum())


def did_m(cells: CellTable, eligible: Optional[Collection] = None) -> DidmResult:
    """Average effect among switching cells, by stable-group comparisons.

    For each period, joiners are compared to stable-untreated groups and
    leavers to stable-treated groups, outcome changes weighted by the
    current-period cell counts. Components missing one side are set to 0
    and flagged as undefined; a missing stable control with switchers
    present also emits a warning, since the estimate is then biased by an
    unquantified trend.

    ``eligible`` optionally restricts which (group, period) pairs may
    enter the period-t comparisons, as produced by
    :func:`placebo_subsample`.
    """
    if cells.n_periods < 2:
        raise PreconditionNotMetError("need at least two periods")
    elig = _eligibility_matrix(cells, eligible)
    D = cells.treat
    counts = cells.counts.astype(float)
    dY = np.zeros_like(cells.outcomes)
    dY[:, 1:] = cells.outcomes[:, 1:] - cells.outcomes[:, :-1]

    per_period = []
    warnings = []
    total_switchers = 0.0
    num = 0.0
    joiner_num = joiner_den = 0.0
    leaver_num = leaver_den = 0.0
    for t in range(1, cells.n_periods):
        label = cells.periods[t]
        active = elig[:, t]
        prev, cur = D[:, t - 1], D[:, t]
        w = counts[:, t]
        join = active & (prev == 0) & (cur == 1)
        stay0 = active & (prev == 0) & (cur == 0)
        leave = active & (prev == 1) & (cur == 0)
        stay1 = active & (prev == 1) & (cur == 1)
        n10 = float(w[join].sum())
        n00 = float(w[stay0].sum())
        n01 = float(w[leave].sum())
        n11 = float(w[stay1].sum())

        plus_defined = n10 > 0 and n00 > 0
        minus_defined = n01 > 0 and n11 > 0
        did_plus = (
            _weighted_mean(dY[join, t], w[join]) - _weighted_mean(dY[stay0, t], w[stay0])
            if plus_defined
            else 0.0
        )
        did_minus = (
            _weighted_mean(dY[stay1, t], w[stay1]) - _weighted_mean(dY[leave, t], w[leave])
            if minus_defined
            else 0.0
        )
        if n10 > 0 and n00 == 0:
            warnings.append(
                f"period {label!r}: joiners present but no stable untreated "
                "group; their component is zeroed and the estimate is biased"
            )
        if n01 > 0 and n11 == 0:
            warnings.append(
                f"period {label!r}: leavers present but no stable treated "
                "group; their component is zeroed and the estimate is biased"
            )
        total_switchers += n10 + n01
        num += n10 * did_plus + n01 * did_minus
        joiner_num += n10 * did_plus
        joiner_den += n10
        leaver_num += n01 * did_minus
        leaver_den += n01
        per_period.append(
            PeriodDid(
                period=label,
                did_plus=did_plus,
                did_minus=did_minus,
                n_joiners=int(n10),
                n_leavers=int(n01),
                plus_defined=plus_defined,
                minus_defined=minus_defined,
            )
        )
    if total_switchers == 0:
        raise NoSwitchersError("no cell switches treatment between consecutive periods")
    return DidmResult(
        estimate=num / total_switchers,
        per_period=tuple(per_period),
        joiners_estimate=(joiner_num / joiner_den) if joiner_den > 0 else None,
        leavers_estimate=(leaver_num / leaver_den) if leaver_den > 0 else None,
        stable_group_warnings=tuple(warnings),
        n_switchers=int(total_switchers),
    )


def _stable_window(D: np.ndarray, t: int, horizon: int) -> np.ndarray:
    """Groups whose treatment is unchanged over periods t-horizon-1 .. t-1."""
    lo = t - horizon - 1
    window = D[:, lo : t]
    return (window == window[:, -1:]).all(axis=1)


def placebo_subsample(cells: CellTable, horizon: int = 1) -> frozenset:
    """(group, period) pairs with a stable treatment history at that period.

    Pair (g, t) is retained when group g's treatment was unchanged over
    the ``horizon + 1`` periods ending at t-1. Periods too early to
    evaluate the condition are dropped. Re-running :func:`did_m` with
    this set as ``eligible`` reproduces the estimator on the placebo
    sample.
    """
    _check_horizon(cells, horizon)
    D = cells.treat
    retained = set()
    found_switcher = False
    for t in range(horizon + 1, cells.n_periods):
        stable = _stable_window(D, t, horizon)
        for g in np.nonzero(stable)[0]:
            retained.add((cells.groups[g], cells.periods[t]))
            if D[g, t] != D[g, t - 1]:
                found_switcher = True
    if not found_switcher:
        raise NoPlaceboSwitchersError(
            f"no switcher has a stable history over the horizon-{horizon} window"
        )
    return frozenset(retained)


def _check_horizon(cells: CellTable, horizon: int):
    if horizon < 1:
        raise PreconditionNotMetError("placebo horizon must be >= 1")
    if cells.n_periods < horizon + 2:
        raise HorizonTooLargeError(
            f"horizon {horizon} needs at least {horizon + 2} periods, "
            f"panel has {cells.n_periods}"
        )


def did_m_placebo(cells: CellTable, horizon: int = 1) -> PlaceboResult:
    """Pre-trend placebo at the given horizon.

    At horizon k, switchers at t whose treatment was stable over the k+1
    periods ending at t-1 are compared to same-status groups also stable
    at t, on the outcome change from t-k-1 to t-k. Horizon 1 compares
    the change one period before the switch. Zero conventions and
    warnings mirror :func:`did_m`.
    """
    _check_horizon(cells, horizon)
    D = cells.treat
    counts = cells.counts.astype(float)
    Y = cells.outcomes

    per_period = []
    warnings = []
    retained = set()
    total_switchers = 0.0
    num = 0.0
    joiner_num = joiner_den = 0.0
    leaver_num = leaver_den = 0.0
    for t in range(horizon + 1, cells.n_periods):
        label = cells.periods[t]
        stable = _stable_window(D, t, horizon)
        for g in np.nonzero(stable)[0]:
            retained.add((cells.groups[g], cells.periods[t]))
        prev, cur = D[:, t - 1], D[:, t]
        w = counts[:, t]
        dy = Y[:, t - horizon] - Y[:, t - horizon - 1]
        join = stable & (prev == 0) & (cur == 1)
        stay0 = stable & (prev == 0) & (cur == 0)
        leave = stable & (prev == 1) & (cur == 0)
        stay1 = stable & (prev == 1) & (cur == 1)
        n10 = float(w[join].sum())
        n00 = float(w[stay0].sum())
        n01 = float(w[leave].sum())
        n11 = float(w[stay1].sum())

        plus_defined = n10 > 0 and n00 > 0
        minus_defined = n01 > 0 and n11 > 0
        did_plus = (
            _weighted_mean(dy[join], w[join]) - _weighted_mean(dy[stay0], w[stay0])
            if plus_defined
            else 0.0
        )
        did_minus = (
            _weighted_mean(dy[stay1], w[stay1]) - _weighted_mean(dy[leave], w[leave])
            if minus_defined
            else 0.0
        )
        if n10 > 0 and n00 == 0:
            warnings.append(
                f"period {label!r}: stable-history joiners lack a stable "
                "untreated control over the placebo window"
            )
        if n01 > 0 and n11 == 0:
            warnings.append(
                f"period {label!r}: stable-history leavers lack a stable "
                "treated control over the placebo window"
            )
        total_switchers += n10 + n01
        num += n10 * did_plus + n01 * did_minus
        joiner_num += n10 * did_plus
        joiner_den += n10
        leaver_num += n01 * did_minus
        leaver_den += n01
        per_period.append(
            PeriodDid(
                period=label,
                did_plus=did_plus,
                did_minus=did_minus,
                n_joiners=int(n10),
                n_leavers=int(n01),
                plus_defined=plus_defined,
                minus_defined=minus_defined,
            )
        )
    if total_switchers == 0:
        raise NoPlaceboSwitchersError(
            f"no switcher has a stable history over the horizon-{horizon} window"
        )
    return PlaceboResult(
        horizon=horizon,
        estimate=num / total_switchers,
        per_period=tuple(per_period),
        joiners_estimate=(joiner_num / joiner_den) if joiner_den > 0 else None,
        leavers_estimate=(leaver_num / leaver_den) if leaver_den > 0 else None,
        subsample_cells=frozenset(retained),
        stable_group_warnings=tuple(warnings),
        n_switchers=int(total_switchers),
    )
