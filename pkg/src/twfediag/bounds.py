"""Robustness of a coefficient to treatment-effect heterogeneity.

Two summary measures, both defined on a weight table and a coefficient:

* ``sigma_lower``: the smallest share-weighted standard deviation of
  treated-cell effects under which the coefficient could coexist with a
  zero average effect on the treated.
* ``sigma_lower_lower``: the smallest such dispersion under which every
  treated-cell effect could have the opposite sign of the coefficient
  (defined only when some weight is strictly negative).

``sigma_lower_lower`` solves a sign-constrained quadratic program whose
solution zeroes all cells above a threshold rank in the weight ordering;
:func:`qp_oracle` re-solves the program by brute-force active-set
enumeration so tests can confirm the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    InfeasibleError,
    NoNegativeWeightError,
    PreconditionNotMetError,
    ZeroBetaError,
    ZeroDispersionError,
)
from .weights import WeightTable


@dataclass(frozen=True)
class RobustnessBounds:
    beta: float
    sigma_w: float
    sigma_lower: float | None
    sigma_lower_lower: float | None
    s_index: int | None
    minimizing_profile: tuple | None  # aligned with the weight table entries

    def to_dict(self):
        return {
            "beta": self.beta,
            "sigma_w": self.sigma_w,
            "sigma_lower": self.sigma_lower,
            "sigma_lower_lower": self.sigma_lower_lower,
            "s_index": self.s_index,
            "minimizing_profile": (
                None if self.minimizing_profile is None else list(self.minimizing_profile)
            ),
        }


def sigma_lower(beta: float, table: WeightTable) -> float:
    """|beta| / sigma(w): minimal effect dispersion compatible with a zero ATT."""
    sw = table.summary.sigma_w
    if sw <= 0.0:
        raise ZeroDispersionError(
            "weights have zero dispersion; the bound is undefined"
        )
    return abs(beta) / sw


def _sorted_suffix_sums(table: WeightTable):
    """Entries sorted by weight descending (stable, so (g,t) order breaks ties)."""
    w = table.weights
    s = table.shares
    order = np.argsort(-w, kind="stable")
    ws, ss = w[order], s[order]
    P = ss[::-1].cumsum()[::-1]
    S = (ss * ws)[::-1].cumsum()[::-1]
    T = (ss * ws**2)[::-1].cumsum()[::-1]
    return order, ws, ss, P, S, T


def sigma_lower_lower(beta: float, table: WeightTable):
    """Minimal effect dispersion letting every cell effect oppose beta's sign.

    Returns ``(bound, s_index, profile)``. ``s_index`` is the 1-based rank
    (in the descending weight order) of the first cell whose effect is
    allowed to move away from zero; ``profile`` holds the minimizing cell
    effects in the weight table's entry order. The profile reproduces
    beta, every entry weakly opposes beta's sign, and its share-weighted
    standard deviation equals the bound.
    """
    if beta == 0.0:
        raise ZeroBetaError("bound undefined for a zero coefficient")
    w = table.weights
    if len(w) and w.min() >= 0.0:
        raise NoNegativeWeightError(
            "all weights are non-negative; opposite signs are impossible"
        )
    if float((table.shares * w).sum()) <= 1e-12:
        # decomposition weights satisfy sum(share * weight) = 1; with a
        # non-positive sum a constant opposite-sign profile already
        # reproduces beta at zero dispersion and the threshold formula
        # does not apply
        raise PreconditionNotMetError(
            "share-weighted weight sum must be positive (it is 1 for "
            "decomposition weight tables)"
        )
    order, ws, ss, P, S, T = _sorted_suffix_sums(table)
    n = len(ws)
    s_idx = None
    for i in range(n):
        if 1.0 - P[i] <= 1e-12:
            continue  # full-suffix threshold divides by zero; skip
        if ws[i] < -S[i] / (1.0 - P[i]):
            s_idx = i
            break
    if s_idx is None:
        raise PreconditionNotMetError(
            "no admissible threshold rank; shares may not sum to one"
        )
    denom = float(T[s_idx] + S[s_idx] ** 2 / (1.0 - P[s_idx]))
    bound = abs(beta) / np.sqrt(denom)

    lam = beta / denom
    profile_sorted = np.zeros(n)
    profile_sorted[s_idx:] = lam * (S[s_idx] / (1.0 - P[s_idx]) + ws[s_idx:])
    profile = np.zeros(n)
    profile[order] = profile_sorted
    return float(bound), int(s_idx + 1), profile


def qp_oracle(beta: float, table: WeightTable) -> float:
    """Brute-force solution of the sign-constrained dispersion program.

    Enumerates every subset of cells pinned at zero, solves the resulting
    equality-constrained program in closed form, and keeps the smallest
    share-weighted standard deviation among sign-feasible solutions.
    Exponential in the number of cells; intended for tests (n <= 12).
    """
    s = table.shares
    w = table.weights
    n = len(w)
    if n > 12:
        raise PreconditionNotMetError("oracle limited to 12 treated cells")
    if n == 0 or w.min() >= 0.0:
        raise InfeasibleError("no strictly negative weight; program infeasible")
    sign = 1.0 if beta > 0 else -1.0
    b = sign * beta  # solve with b > 0 and effects <= 0, flip at the end

    best = None
    for mask in range(1, 1 << n):
        free = np.array([(mask >> i) & 1 == 1 for i in range(n)])
        sA = s[free]
        wA = w[free]
        P_A = sA.sum()
        S_A = float((sA * wA).sum())
        T_A = float((sA * wA**2).sum())
        if 1.0 - P_A <= 1e-12:
            # every cell free: stationarity forces a constant profile
            if abs(S_A) < 1e-12:
                continue
            const = b / S_A
            if const > 1e-9:
                continue
            delta_free = np.full(free.sum(), const)
        else:
            denom = T_A + S_A**2 / (1.0 - P_A)
            if denom <= 1e-15:
                continue
            lam = b / denom
            m = lam * S_A / (1.0 - P_A)
            delta_free = m + lam * wA
            if (delta_free > 1e-9).any():
                continue
        delta = np.zeros(n)
        delta[free] = delta_free
        mean = float((s * delta).sum())
        var = float((s * delta**2).sum()) - mean**2
        sd = np.sqrt(max(var, 0.0))
        if best is None or sd < best:
            best = sd
    if best is None:
        raise InfeasibleError("no sign-feasible solution found")
    return float(best)


def compute_bounds(beta: float, table: WeightTable) -> RobustnessBounds:
    """Assemble the full bounds record, leaving undefined pieces as None."""
    sw = table.summary.sigma_w
    try:
        lower = sigma_lower(beta, table)
    except ZeroDispersionError:
        lower = None
    try:
        lower_lower, s_index, profile = sigma_lower_lower(beta, table)
        profile = tuple(float(x) for x in profile)
    except (ZeroBetaError, NoNegativeWeightError):
        lower_lower, s_index, profile = None, None, None
    return RobustnessBounds(
        beta=float(beta),
        sigma_w=float(sw),
        sigma_lower=lower,
        sigma_lower_lower=lower_lower,
        s_index=s_index,
        minimizing_profile=profile,
    )
