import numpy as np
import pytest

from twfediag import CellTable
from twfediag.errors import CollinearError
from twfediag.regression import residualize_fd, residualize_fe


def make_cells(treatments, outcomes=None, counts=None, groups=None, periods=None):
    """CellTable from matrices, defaulting counts to 1 and outcomes to 0."""
    D = np.asarray(treatments, dtype=float)
    G, T = D.shape
    if outcomes is None:
        outcomes = np.zeros((G, T))
    if counts is None:
        counts = np.ones((G, T), dtype=int)
    return CellTable(
        groups=groups if groups is not None else range(G),
        periods=periods if periods is not None else range(1, T + 1),
        counts=counts,
        outcomes=outcomes,
        treatments=D,
    )


def planted_cells(rng, D, counts, delta):
    """Common-trends outcomes with planted per-cell effects."""
    G, T = D.shape
    gamma = rng.normal(size=G)
    lam = rng.normal(size=T)
    Y = gamma[:, None] + lam[None, :] + D * delta
    return make_cells(D, outcomes=Y, counts=counts)


def random_panel(rng, max_groups=8, max_periods=8, max_count=9, require_fd=False):
    """Random sharp panel whose fe (and optionally fd) regressions are defined."""
    for _ in range(200):
        G = rng.integers(2, max_groups + 1)
        T = rng.integers(2, max_periods + 1)
        D = (rng.random((G, T)) < 0.45).astype(float)
        counts = rng.integers(1, max_count + 1, size=(G, T))
        Y = rng.normal(size=(G, T))
        cells = make_cells(D, outcomes=Y, counts=counts)
        try:
            residualize_fe(cells)
            if require_fd:
                residualize_fd(cells)
        except CollinearError:
            continue
        return cells
    raise AssertionError("could not draw a non-collinear panel")


def random_staggered_panel(rng, max_groups=8, max_periods=8, constant_counts=True):
    """Random staggered-adoption panel with per-group constant counts."""
    for _ in range(200):
        G = rng.integers(2, max_groups + 1)
        T = rng.integers(2, max_periods + 1)
        dates = rng.integers(2, T + 2, size=G)  # T+1 means never treated
        D = np.zeros((G, T))
        for g, d0 in enumerate(dates):
            if d0 <= T:
                D[g, d0 - 1 :] = 1.0
        if constant_counts:
            counts = np.repeat(rng.integers(1, 9, size=G)[:, None], T, axis=1)
        else:
            counts = rng.integers(1, 9, size=(G, T))
        Y = rng.normal(size=(G, T))
        cells = make_cells(D, outcomes=Y, counts=counts)
        try:
            residualize_fe(cells)
            residualize_fd(cells)
        except CollinearError:
            continue
        if (D == 1.0).any():
            return cells
    raise AssertionError("could not draw a usable staggered panel")


@pytest.fixture
def staggered_2x3():
    """Two groups, three periods: (0,0,1) and (0,1,1), unit counts.

    Outcomes are a unit time trend plus planted effects (1, 1, 4) on the
    treated cells, the configuration whose fixed-effects coefficient is
    -1/2 despite all effects being positive.
    """
    D = np.array([[0.0, 0, 1], [0, 1, 1]])
    delta = np.array([[0.0, 0, 1], [0, 1, 4]])
    trend = np.array([[1.0, 2, 3], [1, 2, 3]])
    return make_cells(D, outcomes=trend + D * delta, groups=[1, 2], periods=[1, 2, 3])


@pytest.fixture
def three_group_didm():
    """Never-treated control plus adopters at t=3 and t=2; effects (1, 1, 4)."""
    D = np.array([[0.0, 0, 0], [0, 0, 1], [0, 1, 1]])
    delta = np.array([[0.0, 0, 0], [0, 0, 1], [0, 1, 4]])
    trend = np.tile(np.array([1.0, 2, 3]), (3, 1))
    return make_cells(D, outcomes=trend + D * delta)
