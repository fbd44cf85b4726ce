import numpy as np
import pytest

from twfediag import (
    ConstantCovariateError,
    DegenerateNormalizerError,
    PreconditionNotMetError,
    beta_fd,
    beta_fe,
    check_prop1_monotonicity,
    correlate_weights,
    fd_weights,
    fe_weights,
)

from conftest import make_cells, planted_cells, random_panel, random_staggered_panel


class TestFeWeights:
    def test_worked_fixture(self, staggered_2x3):
        table = fe_weights(staggered_2x3)
        assert [(e.group, e.time) for e in table.entries] == [(1, 3), (2, 2), (2, 3)]
        assert table.weights == pytest.approx([1.5, 3.0, -1.5], abs=1e-10)
        assert table.shares == pytest.approx([1 / 3] * 3, abs=1e-12)
        # contributions share*weight are the per-cell coefficients of the
        # decomposition: 1/2, 1, -1/2
        assert [e.contribution for e in table.entries] == pytest.approx(
            [0.5, 1.0, -0.5], abs=1e-10
        )
        summary = table.summary
        assert summary.n_positive == 2
        assert summary.n_negative == 1
        assert summary.n_zero == 0
        assert summary.sum_negative == pytest.approx(-0.5, abs=1e-10)
        assert summary.sigma_w == pytest.approx(np.sqrt(3.5), abs=1e-10)

    def test_single_treated_cell(self):
        D = np.array([[0.0, 0], [0, 1]])
        table = fe_weights(make_cells(D))
        assert len(table) == 1
        assert table.entries[0].weight == pytest.approx(1.0, abs=1e-12)
        assert table.entries[0].share == 1.0

    def test_three_group_staggered(self):
        D = np.array([[0.0, 0, 0], [0, 0, 1], [0, 1, 1]])
        table = fe_weights(make_cells(D))
        assert table.weights == pytest.approx([1.5, 1.5, 0.0], abs=1e-10)
        assert table.summary.n_zero == 1

    def test_share_weight_sum_is_one(self):
        rng = np.random.default_rng(20)
        for _ in range(200):
            table = fe_weights(random_panel(rng))
            assert (table.shares * table.weights).sum() == pytest.approx(1.0, abs=1e-10)
            assert table.shares.sum() == pytest.approx(1.0, abs=1e-12)

    def test_zero_residuals_degenerate(self):
        from twfediag import FeResiduals

        D = np.array([[0.0, 1], [1, 0]])
        cells = make_cells(D)
        zero = FeResiduals(eps=np.zeros((2, 2)), sweeps=0)
        with pytest.raises(DegenerateNormalizerError):
            fe_weights(cells, zero)


class TestFdWeights:
    def test_worked_fixture(self, staggered_2x3):
        table = fd_weights(staggered_2x3)
        assert table.weights == pytest.approx([1.5, 3.0, -1.5], abs=1e-10)
        assert (table.shares * table.weights).sum() == pytest.approx(1.0, abs=1e-10)
        # reconstruction of the coefficient from the planted effects (1,1,4)
        delta = np.array([1.0, 1.0, 4.0])
        recon = (table.shares * table.weights * delta).sum()
        assert recon == pytest.approx(beta_fd(staggered_2x3).beta, abs=1e-10)

    def test_single_switch_final_period(self):
        D = np.zeros((3, 4))
        D[2, 3] = 1.0
        table = fd_weights(make_cells(D))
        assert len(table) == 1
        assert table.entries[0].weight == pytest.approx(1.0, abs=1e-12)

    def test_sum_identity_random(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            table = fd_weights(random_panel(rng, require_fd=True))
            assert (table.shares * table.weights).sum() == pytest.approx(1.0, abs=1e-10)

    def test_prop2_sign_pattern(self):
        # staggered adoption, per-group constant counts: strictly negative
        # weight exactly on already-treated cells where the adoption inflow
        # is larger from t-1 to t than from t to t+1
        rng = np.random.default_rng(22)
        checked_negative = 0
        for _ in range(200):
            cells = random_staggered_panel(rng, constant_counts=True)
            table = fd_weights(cells)
            dp = np.append(cells.d_period, cells.d_period[-1])  # D_{.,T+1} = D_{.,T}
            for entry in table.entries:
                g = cells.group_index(entry.group)
                t = cells.period_index(entry.time)
                if t == 0:
                    predicted = False
                else:
                    predicted = cells.treat[g, t - 1] == 1.0 and (
                        dp[t] - dp[t - 1] > dp[t + 1] - dp[t] + 1e-12
                    )
                assert (entry.weight < -1e-10) == predicted, (
                    cells.treat,
                    cells.counts,
                    entry,
                )
                checked_negative += predicted
        assert checked_negative > 50  # the sweep actually exercises negatives


class TestDecompositionIdentity:
    def test_fe_and_fd_reconstruct_beta(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            base = random_panel(rng, require_fd=True)
            delta = rng.normal(size=(base.n_groups, base.n_periods))
            cells = planted_cells(rng, base.treat, base.counts, delta)
            planted = delta[cells.treat == 1.0]
            fe_t = fe_weights(cells)
            assert (fe_t.shares * fe_t.weights * planted).sum() == pytest.approx(
                beta_fe(cells).beta, abs=1e-8
            )
            fd_t = fd_weights(cells)
            assert (fd_t.shares * fd_t.weights * planted).sum() == pytest.approx(
                beta_fd(cells).beta, abs=1e-8
            )

    def test_entry_order_is_row_major(self, staggered_2x3):
        table = fe_weights(staggered_2x3)
        delta_by_cell = {(1, 3): 1.0, (2, 2): 1.0, (2, 3): 4.0}
        recon = sum(
            e.share * e.weight * delta_by_cell[(e.group, e.time)] for e in table.entries
        )
        assert recon == pytest.approx(-0.5, abs=1e-10)


class TestProp1Monotonicity:
    def test_worked_fixture_conforms(self, staggered_2x3):
        table = fe_weights(staggered_2x3)
        assert check_prop1_monotonicity(staggered_2x3, table) == []

    def test_random_sweep_no_violations(self):
        from twfediag import CollinearError

        rng = np.random.default_rng(24)
        for _ in range(300):
            G, T = rng.integers(2, 8, size=2)
            D = (rng.random((G, T)) < 0.5).astype(float)
            base = rng.integers(1, 9, size=G)
            growth = rng.integers(1, 4, size=T)
            cells = make_cells(D, counts=base[:, None] * growth[None, :])
            try:
                table = fe_weights(cells)
            except (CollinearError, DegenerateNormalizerError):
                continue
            assert check_prop1_monotonicity(cells, table) == []

    def test_unequal_growth_rejected(self):
        cells = make_cells(
            np.array([[0.0, 1], [1, 1]]), counts=np.array([[2, 4], [3, 5]])
        )
        table = fe_weights(cells)
        with pytest.raises(PreconditionNotMetError):
            check_prop1_monotonicity(cells, table)

    def test_violation_reported_for_inconsistent_table(self, staggered_2x3):
        # tamper with the weights so the ordering must fail
        from twfediag import WeightEntry, WeightTable

        table = fe_weights(staggered_2x3)
        entries = list(table.entries)
        # (2,3) has the larger treated share than (2,2); give it a larger weight
        entries[2] = WeightEntry(2, 3, entries[2].share, 99.0)
        bad = WeightTable.from_entries("fe", entries)
        violations = check_prop1_monotonicity(staggered_2x3, bad)
        assert violations
        assert violations[0].axis == "time"


class TestCorrelateWeights:
    def test_covariate_equals_weights(self, staggered_2x3):
        table = fe_weights(staggered_2x3)
        r, t = correlate_weights(table, table.weights)
        assert r == pytest.approx(1.0, abs=1e-12)
        assert t == float("inf")

    def test_covariate_negates_weights(self, staggered_2x3):
        table = fe_weights(staggered_2x3)
        r, t = correlate_weights(table, -table.weights)
        assert r == pytest.approx(-1.0, abs=1e-12)
        assert t == float("-inf")

    def test_period_covariate_negative(self, staggered_2x3):
        # later treated cells carry lower weight in this design
        table = fe_weights(staggered_2x3)
        cov = [float(e.time) for e in table.entries]
        r, t = correlate_weights(table, cov)
        assert r == pytest.approx(-0.7559289460184544, abs=1e-12)
        assert t == pytest.approx(-1.1547005383792512, abs=1e-12)
        assert r < 0 and t < 0

    def test_constant_covariate_rejected(self, staggered_2x3):
        table = fe_weights(staggered_2x3)
        with pytest.raises(ConstantCovariateError):
            correlate_weights(table, [1.0, 1.0, 1.0])

    def test_too_few_cells(self):
        D = np.array([[0.0, 0], [0, 1]])
        table = fe_weights(make_cells(D))
        with pytest.raises(PreconditionNotMetError):
            correlate_weights(table, [1.0])
