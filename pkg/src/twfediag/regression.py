"""Two-way fixed-effects and first-difference regression coefficients.

Both coefficients are computed by residualizing the treatment on the
fixed effects and forming the ratio of weighted cross-products
(Frisch-Waugh route). :func:`ols_oracle` solves the same regressions
with explicit dummy matrices and exists so tests can cross-check the
fast path against an independent one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CollinearError, PreconditionNotMetError
from .panel import CellTable

#: the regressor is declared collinear when |sum N eps x| falls below
#: this multiple of sum N |x|
COLLINEAR_RTOL = 1e-12

_DEMEAN_TOL = 1e-12
_MAX_SWEEPS = 10_000


@dataclass(frozen=True)
class FeResiduals:
    """Residuals of D_{g,t} on group and period fixed effects (count-weighted)."""

    eps: np.ndarray  # (G, T)
    sweeps: int

    def __post_init__(self):
        self.eps.setflags(write=False)


@dataclass(frozen=True)
class FdResiduals:
    """Residuals of the treatment change on period fixed effects.

    ``eps`` has shape (G, T); column 0 holds the boundary convention
    (the first period has no change and its residual is fixed at 0).
    """

    eps: np.ndarray  # (G, T), column 0 all zeros

    def __post_init__(self):
        self.eps.setflags(write=False)


@dataclass(frozen=True)
class RegressionEstimate:
    beta: float
    estimator_kind: str  # "fe" | "fd"
    n_obs: int
    degenerate: bool = False

    def to_dict(self):
        return {
            "estimator": self.estimator_kind,
            "beta": self.beta,
            "n_obs": self.n_obs,
            "degenerate": self.degenerate,
        }


def _fe_residual_dense(cells: CellTable) -> np.ndarray:
    """Weighted least-squares residual of D on the full dummy design."""
    G, T = cells.n_groups, cells.n_periods
    X = np.zeros((G * T, 1 + (G - 1) + (T - 1)))
    X[:, 0] = 1.0
    rows = np.arange(G * T)
    gi, ti = rows // T, rows % T
    for k in range(1, G):
        X[gi == k, k] = 1.0
    for k in range(1, T):
        X[ti == k, G - 1 + k] = 1.0
    y = cells.treat.ravel()
    sw = np.sqrt(cells.counts.astype(float).ravel())
    coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    return (y - X @ coef).reshape(G, T)


def residualize_fe(cells: CellTable) -> FeResiduals:
    """Residualize the cell treatment on group and period fixed effects.

    Iterates count-weighted demeaning over groups and periods until the
    residual stops moving, falling back to a dense solve if it does not;
    raises :class:`CollinearError` when the fixed effects absorb the
    treatment entirely.
    """
    counts = cells.counts.astype(float)
    ng = counts.sum(axis=1)
    nt = counts.sum(axis=0)
    x = cells.treat.copy()
    sweeps = 0
    while sweeps < _MAX_SWEEPS:
        prev = x.copy()
        x -= ((counts * x).sum(axis=1) / ng)[:, None]
        x -= ((counts * x).sum(axis=0) / nt)[None, :]
        sweeps += 1
        if np.abs(x - prev).max() < _DEMEAN_TOL:
            break
    if (
        sweeps >= _MAX_SWEEPS
        or np.abs((counts * x).sum(axis=1)).max() > 1e-10
        or np.abs((counts * x).sum(axis=0)).max() > 1e-10
    ):
        x = _fe_residual_dense(cells)

    scale = float((counts * np.abs(cells.treat)).sum())
    if scale == 0.0 or abs(float((counts * x * cells.treat).sum())) < COLLINEAR_RTOL * scale:
        raise CollinearError(
            "treatment is exactly explained by group and period fixed effects"
        )
    return FeResiduals(eps=x, sweeps=sweeps)


def beta_fe(cells: CellTable, residuals: FeResiduals | None = None) -> RegressionEstimate:
    """Treatment coefficient of the two-way fixed-effects regression.

    Equals sum(N eps Y) / sum(N eps D) by the Frisch-Waugh theorem, with
    eps the fixed-effects residual of the treatment.
    """
    if residuals is None:
        residuals = residualize_fe(cells)
    counts = cells.counts.astype(float)
    num = float((counts * residuals.eps * cells.outcomes).sum())
    den = float((counts * residuals.eps * cells.treat).sum())
    return RegressionEstimate(beta=num / den, estimator_kind="fe", n_obs=cells.n_total)


def residualize_fd(cells: CellTable) -> FdResiduals:
    """Residualize the treatment change on period fixed effects (t >= 2)."""
    if cells.n_periods < 2:
        raise PreconditionNotMetError("first differences need at least two periods")
    counts = cells.counts.astype(float)
    dD = cells.treat[:, 1:] - cells.treat[:, :-1]
    w = counts[:, 1:]
    means = (w * dD).sum(axis=0) / w.sum(axis=0)
    eps = np.zeros_like(cells.treat)
    eps[:, 1:] = dD - means[None, :]

    scale = float((w * np.abs(dD)).sum())
    if scale == 0.0 or abs(float((w * eps[:, 1:] * dD).sum())) < COLLINEAR_RTOL * scale:
        raise CollinearError("treatment change is constant within every period")
    return FdResiduals(eps=eps)


def beta_fd(cells: CellTable, residuals: FdResiduals | None = None) -> RegressionEstimate:
    """Treatment-change coefficient of the first-difference regression."""
    if residuals is None:
        residuals = residualize_fd(cells)
    counts = cells.counts.astype(float)
    w = counts[:, 1:]
    eps = residuals.eps[:, 1:]
    dD = cells.treat[:, 1:] - cells.treat[:, :-1]
    dY = cells.outcomes[:, 1:] - cells.outcomes[:, :-1]
    num = float((w * eps * dY).sum())
    den = float((w * eps * dD).sum())
    n_obs = int(cells.counts[:, 1:].sum())
    return RegressionEstimate(beta=num / den, estimator_kind="fd", n_obs=n_obs)


def ols_oracle(cells: CellTable, kind: str) -> RegressionEstimate:
    """Same coefficients via explicit dummy-matrix weighted least squares.

    Test oracle: independent of the residualization path.
    """
    if kind == "fe":
        G, T = cells.n_groups, cells.n_periods
        n_cols = 1 + (G - 1) + (T - 1) + 1
        X = np.zeros((G * T, n_cols))
        X[:, 0] = 1.0
        rows = np.arange(G * T)
        gi, ti = rows // T, rows % T
        for k in range(1, G):
            X[gi == k, k] = 1.0
        for k in range(1, T):
            X[ti == k, G - 1 + k] = 1.0
        X[:, -1] = cells.treat.ravel()
        y = cells.outcomes.ravel()
        w = cells.counts.astype(float).ravel()
        n_obs = cells.n_total
    elif kind == "fd":
        if cells.n_periods < 2:
            raise PreconditionNotMetError("first differences need at least two periods")
        G, T = cells.n_groups, cells.n_periods
        dD = (cells.treat[:, 1:] - cells.treat[:, :-1]).ravel()
        dY = (cells.outcomes[:, 1:] - cells.outcomes[:, :-1]).ravel()
        n_rows = G * (T - 1)
        X = np.zeros((n_rows, (T - 1) + 1))
        ti = np.arange(n_rows) % (T - 1)
        for k in range(T - 1):
            X[ti == k, k] = 1.0
        X[:, -1] = dD
        y = dY
        w = cells.counts.astype(float)[:, 1:].ravel()
        n_obs = int(cells.counts[:, 1:].sum())
    else:
        raise ValueError(f"unknown regression kind {kind!r}")

    sw = np.sqrt(w)
    Xw = X * sw[:, None]
    if np.linalg.matrix_rank(Xw) < X.shape[1]:
        # the dummy block alone always has full rank on a complete panel,
        # so any deficiency means the treatment column is absorbed
        raise CollinearError(f"{kind} design matrix is rank deficient")
    coef, *_ = np.linalg.lstsq(Xw, y * sw, rcond=None)
    return RegressionEstimate(beta=float(coef[-1]), estimator_kind=kind, n_obs=n_obs)
