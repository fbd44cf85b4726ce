import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twfediag import (
    CellTable,
    DuplicateUnitError,
    EmptyInputError,
    MissingCellError,
    MixedTreatmentInCellError,
    NonBinaryTreatmentError,
    Observation,
    aggregate_cells,
    constant_growth_holds,
    validate_design,
)

from conftest import make_cells


def obs(unit, group, time, outcome, treatment):
    return Observation(unit=unit, group=group, time=time, outcome=outcome, treatment=treatment)


class TestAggregation:
    def test_two_units_average(self):
        cells = aggregate_cells(
            [
                obs("a", 1, 1, 1.0, 1),
                obs("b", 1, 1, 3.0, 1),
            ]
        )
        assert cells.counts[0, 0] == 2
        assert cells.outcomes[0, 0] == 2.0
        assert cells.treat[0, 0] == 1.0

    def test_mixed_treatment_rejected(self):
        with pytest.raises(MixedTreatmentInCellError):
            aggregate_cells([obs("a", 1, 1, 1.0, 0), obs("b", 1, 1, 3.0, 1)])

    def test_empty_input(self):
        with pytest.raises(EmptyInputError):
            aggregate_cells([])

    def test_duplicate_unit_rejected(self):
        with pytest.raises(DuplicateUnitError):
            aggregate_cells([obs("a", 1, 1, 1.0, 1), obs("a", 1, 1, 2.0, 1)])

    def test_cell_level_passthrough(self):
        rows = [
            (1, 1, 0.3, 0, 4),
            (1, 2, 0.9, 1, 5),
            (2, 1, -1.0, 0, 2),
            (2, 2, 0.1, 0, 7),
        ]
        direct = CellTable.from_cell_rows(rows)
        expanded = aggregate_cells(
            [
                obs((g, i), g, t, y, d)
                for (g, t, y, d, n) in rows
                for i in range(n)
            ]
        )
        assert direct.groups == expanded.groups
        assert (direct.counts == expanded.counts).all()
        assert np.allclose(direct.outcomes, expanded.outcomes, rtol=0, atol=1e-15)
        assert (direct.treat == expanded.treat).all()

    def test_missing_cell_is_hard_error(self):
        with pytest.raises(MissingCellError):
            aggregate_cells(
                [
                    obs("a", 1, 1, 0.0, 0),
                    obs("b", 1, 2, 0.0, 0),
                    obs("c", 2, 1, 0.0, 0),  # group 2 absent at t=2
                ]
            )

    def test_treatment_snapping(self):
        cells = aggregate_cells(
            [
                obs("a", 1, 1, 0.0, 1 - 1e-12),
                obs("b", 1, 2, 0.0, 1e-12),
            ]
        )
        assert cells.treat[0, 0] == 1.0
        assert cells.treat[0, 1] == 0.0

    def test_nonbinary_treatment_rejected(self):
        with pytest.raises(NonBinaryTreatmentError):
            aggregate_cells([obs("a", 1, 1, 0.0, 0.4)])

    def test_unit_sum_identity(self):
        rng = np.random.default_rng(3)
        observations = []
        for g in range(4):
            for t in range(3):
                d = float(rng.random() < 0.5)
                for u in range(rng.integers(1, 7)):
                    observations.append(obs((g, u), g, t, rng.normal(), d))
        cells = aggregate_cells(observations)
        total_units = math.fsum(o.outcome for o in observations)
        total_cells = math.fsum(
            cells.counts[g, t] * cells.outcomes[g, t]
            for g in range(cells.n_groups)
            for t in range(cells.n_periods)
        )
        assert total_cells == pytest.approx(total_units, abs=1e-12 * (1 + abs(total_units)))


class TestImmutability:
    def test_cell_table_arrays_are_frozen(self, staggered_2x3):
        for arr in (staggered_2x3.counts, staggered_2x3.outcomes, staggered_2x3.treat):
            with pytest.raises(ValueError):
                arr[0, 0] = 99

    def test_construction_copies_input(self):
        treat = np.array([[0.0, 1], [0, 0]])
        counts = np.array([[1, 1], [1, 1]])
        cells = make_cells(treat, counts=counts)
        treat[0, 1] = 0.0  # caller mutation must not leak in
        assert cells.treat[0, 1] == 1.0


class TestMarginals:
    def test_marginal_identities(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            G, T = rng.integers(2, 7, size=2)
            cells = make_cells(
                (rng.random((G, T)) < 0.5).astype(float),
                counts=rng.integers(1, 12, size=(G, T)),
            )
            cf = cells.counts.astype(float)
            for g in range(G):
                back = (cf[g] / cf[g].sum() * cells.treat[g]).sum()
                assert abs(back - cells.d_group[g]) < 1e-12
            for t in range(T):
                back = (cf[:, t] / cf[:, t].sum() * cells.treat[:, t]).sum()
                assert abs(back - cells.d_period[t]) < 1e-12
            assert abs((cf * cells.treat).sum() / cf.sum() - cells.d_all) < 1e-12
            assert cells.n_treated == cells.counts[cells.treat == 1.0].sum()


class TestValidateDesign:
    def test_staggered_2x3_flags(self, staggered_2x3):
        report = validate_design(staggered_2x3)
        assert report.is_staggered
        assert report.is_balanced and report.is_sharp
        assert report.constant_growth
        assert report.stable_groups_ok == {2: True, 3: False}

    def test_all_zero_panel(self):
        report = validate_design(make_cells(np.zeros((3, 4))))
        assert report.is_staggered
        assert all(report.stable_groups_ok.values())
        assert all(report.stable_groups_placebo_ok.values())

    def test_non_staggered_detected(self):
        report = validate_design(make_cells([[0, 1, 0], [0, 0, 0]]))
        assert not report.is_staggered

    def test_placebo_stable_flags(self):
        # joiner at t=3 with clean history, but every other group also
        # changed between t=1 and t=2: no three-period stable control
        D = np.array([[0.0, 0, 1], [0, 1, 1]])
        report = validate_design(make_cells(D))
        assert report.stable_groups_placebo_ok == {3: False}
        D_ok = np.array([[0.0, 0, 1], [0, 0, 0]])
        assert validate_design(make_cells(D_ok)).stable_groups_placebo_ok == {3: True}

    def test_constant_growth_flag(self):
        growing = make_cells(
            np.zeros((2, 2)), counts=np.array([[2, 4], [3, 6]])
        )
        assert constant_growth_holds(growing)
        uneven = make_cells(np.zeros((2, 2)), counts=np.array([[2, 4], [3, 5]]))
        assert not constant_growth_holds(uneven)


@settings(max_examples=60, deadline=None)
@given(
    data=st.data(),
    G=st.integers(min_value=1, max_value=5),
    T=st.integers(min_value=1, max_value=5),
)
def test_random_sharp_panels_validate_sharp(data, G, T):
    treat = np.array(
        data.draw(
            st.lists(
                st.lists(st.integers(0, 1), min_size=T, max_size=T),
                min_size=G,
                max_size=G,
            )
        ),
        dtype=float,
    )
    counts = np.array(
        data.draw(
            st.lists(
                st.lists(st.integers(1, 6), min_size=T, max_size=T),
                min_size=G,
                max_size=G,
            )
        )
    )
    cells = make_cells(treat, counts=counts)
    assert validate_design(cells).is_sharp
