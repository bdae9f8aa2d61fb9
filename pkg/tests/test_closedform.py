import math
from pathlib import Path

import numpy as np
import pytest

from crthte import closedform
from crthte.correlation import CovariateCorrelation, OutcomeCorrelation
from crthte.designs import TreatmentMatrix
from crthte.engine import CovariateModel, OutcomeModel, variance_report
from crthte.errors import ValidationError

SX_UMDEX = math.sqrt(0.36 * 0.64)


class TestAteTwoLevel:
    def test_m_one_design_effect_one(self):
        assert closedform.ate_var_two_level(1, 0.3, 0.5, 1.0, 1.0) == pytest.approx(4.0)

    def test_umdex_hand_value(self):
        value = closedform.ate_var_two_level(11, 0.02, 0.5, 1.0, SX_UMDEX)
        assert value == pytest.approx(1.2 / (11 * 0.25 * 0.2304), rel=1e-12)
        assert value == pytest.approx(1.894, abs=5e-4)

    def test_zero_icc(self):
        assert closedform.ate_var_two_level(10, 0.0, 0.5, 1.0, 1.0) == pytest.approx(0.4)


class TestHteTwoLevel:
    def test_umdex_hand_value_engine_adjudicated(self):
        # the registered {1+(m-1)a1} numerator gives 1.6281; the printed (m-2)
        # variant evaluates to 1.6010 and is rejected by the engine (see the
        # conformance table)
        value = closedform.hte_var_two_level(11, 0.02, 0.2, 0.5, 1.0, SX_UMDEX)
        hand = 0.98 * 1.20 / (11 * 0.25 * 0.2304 * (1.18 - 0.04))
        assert value == pytest.approx(hand, rel=1e-12)
        assert value == pytest.approx(1.62812, abs=5e-5)

    def test_zero_icc_is_iid_interaction_variance(self):
        assert closedform.hte_var_two_level(10, 0.0, 0.7, 0.5, 1.0, 1.0) == pytest.approx(0.4)

    def test_rho_one_cancellation(self):
        m, alpha = 9, 0.07
        value = closedform.hte_var_two_level(m, alpha, 1.0, 0.5, 1.0, 1.0)
        assert value == pytest.approx((1 + (m - 1) * alpha) / (m * 0.25), rel=1e-12)

    def test_degenerate_denominator(self):
        # alpha1 = rho1 = 1 zeroes the brace exactly
        with pytest.raises(ValidationError):
            closedform.hte_var_two_level(5, 1.0, 1.0, 0.5, 1.0, 1.0)


class TestDesignEffect:
    def test_equal_inputs(self):
        assert closedform.design_effect_hte(2.0, 2.0) == 1.0

    def test_m_one(self):
        h = closedform.hte_var_two_level(1, 0.1, 0.3, 0.5, 1.0, 1.0)
        a = closedform.ate_var_two_level(1, 0.1, 0.5, 1.0, 1.0)
        assert closedform.design_effect_hte(h, a) == pytest.approx(1.0)

    def test_umdex_ratio(self):
        h = closedform.hte_var_two_level(11, 0.02, 0.2, 0.5, 1.0, SX_UMDEX)
        a = closedform.ate_var_two_level(11, 0.02, 0.5, 1.0, SX_UMDEX)
        assert closedform.design_effect_hte(h, a) == pytest.approx(0.98 / 1.14, rel=1e-10)


class TestCrxoClosedForms:
    def test_two_period_matches_engine(self):
        value = closedform.hte_var_crxo_cross_sectional(
            7, 2, (0.05, 0.02), (0.2, 0.1), 0.5, 1.0, 1.0
        )
        matrix = TreatmentMatrix(((1, 0), (0, 1)), (1, 1))
        outcome = OutcomeModel(1.0, OutcomeCorrelation.nested(0.05, 0.02))
        covariate = CovariateModel.continuous(1.0, CovariateCorrelation.nested(0.2, 0.1))
        rep = variance_report(matrix, 7, outcome, covariate, weights=(0.5, 0.5))
        assert value == pytest.approx(rep.sigma2_hte_norm, rel=1e-10)

    def test_zero_icc_reductions(self):
        for J in (2, 3, 6):
            cs = closedform.hte_var_crxo_cross_sectional(5, J, (0, 0), (0, 0), 0.5, 1.0, 1.0)
            assert cs == pytest.approx(1 / (0.25 * 5 * J), rel=1e-10)
            coh = closedform.hte_var_crxo_cohort(5, J, (0, 0, 0), 0.0, 0.5, 1.0, 1.0)
            assert coh == pytest.approx(1 / (0.25 * 5 * J), rel=1e-10)

    def test_cohort_block_collapse_point(self):
        # alpha0 = alpha2 collapses the block structure to nested; the closed
        # form must still track the engine oracle at that degenerate point
        m, J, a1, a2, r0 = 9, 4, 0.08, 0.03, 0.25
        value = closedform.hte_var_crxo_cohort(m, J, (a2, a1, a2), r0, 0.5, 1.0, 1.0)
        rows = ((1, 0, 1, 0), (0, 1, 0, 1))
        outcome = OutcomeModel(1.0, OutcomeCorrelation.block(a2, a1, a2))
        covariate = CovariateModel.continuous(1.0, CovariateCorrelation.cohort_time_invariant(r0))
        rep = variance_report(TreatmentMatrix(rows, (1, 1)), m, outcome, covariate, weights=(0.5, 0.5))
        assert value == pytest.approx(rep.sigma2_hte_norm, rel=1e-10)

    def test_lire_crxo_cluster_period_size(self):
        # comparator design: 100 clusters, J=6, 90% power at m = 185
        value = closedform.hte_var_crxo_cross_sectional(
            185, 6, (0.022, 0.011), (0.1, 0.09), 0.5, 1.0, math.sqrt(0.16)
        )
        from crthte.solver import power_from_variance

        assert power_from_variance(0.05, value / 100, 0.05) == pytest.approx(0.90, abs=0.005)


class TestPiSymmetry:
    @pytest.mark.parametrize("pi", [0.2, 0.35, 0.5])
    def test_all_forms_symmetric(self, pi):
        args_two = (9, 0.06, 0.2, pi, 1.1, 0.8)
        assert closedform.hte_var_two_level(*args_two) == pytest.approx(
            closedform.hte_var_two_level(9, 0.06, 0.2, 1 - pi, 1.1, 0.8), rel=1e-12
        )
        assert closedform.hte_var_crxo_cross_sectional(
            7, 4, (0.05, 0.02), (0.2, 0.1), pi, 1.0, 1.0
        ) == pytest.approx(
            closedform.hte_var_crxo_cross_sectional(7, 4, (0.05, 0.02), (0.2, 0.1), 1 - pi, 1.0, 1.0),
            rel=1e-12,
        )
        assert closedform.hte_var_three_level(
            6, 4, (0.05, 0.02), (0.2, 0.1), pi, 1.0, 1.0, "cluster"
        ) == pytest.approx(
            closedform.hte_var_three_level(6, 4, (0.05, 0.02), (0.2, 0.1), 1 - pi, 1.0, 1.0, "cluster"),
            rel=1e-12,
        )


class TestClusteringInflationCeiling:
    def test_interior_maximum_in_alpha(self):
        # sigma2_HTE(alpha)/sigma2_HTE(0) rises then falls on (0, 1): the
        # clustering-induced inflation of the interaction variance has a
        # finite ceiling (the hte/ate ratio itself is monotone in alpha)
        m, rho = 10, 0.2
        grid = np.linspace(0.0, 0.99, 199)
        base = closedform.hte_var_two_level(m, 0.0, rho, 0.5, 1.0, 1.0)
        ratio = np.array(
            [closedform.hte_var_two_level(m, a, rho, 0.5, 1.0, 1.0) / base for a in grid]
        )
        k = int(np.argmax(ratio))
        assert 0 < k < len(grid) - 1
        assert ratio[k] > ratio[0] and ratio[k] > ratio[-1]

    def test_hte_over_ate_monotone(self):
        m, rho = 10, 0.2
        grid = np.linspace(0.0, 0.9, 50)
        ratios = [
            closedform.hte_var_two_level(m, a, rho, 0.5, 1.0, 1.0)
            / closedform.ate_var_two_level(m, a, 0.5, 1.0, 1.0)
            for a in grid
        ]
        assert all(b <= a + 1e-12 for a, b in zip(ratios, ratios[1:]))


class TestRegistration:
    def test_all_rows_conformant(self):
        rows = closedform.conformance_report()
        assert len(rows) == 7
        for row in rows:
            assert row.conformant, f"{row.formula_id} max rel err {row.max_rel_err}"
            assert row.n_points == closedform.GRID_POINTS

    def test_expected_resolutions(self):
        resolved = {r.formula_id: r.resolved for r in closedform.conformance_report()}
        assert "(m-1)a1" in resolved["parallel_two_level"]
        assert "crossed" in resolved["crxo_cross_sectional"]
        assert "tau2" in resolved["crxo_cohort"]

    def test_rejections_documented(self):
        rows = {r.formula_id: r for r in closedform.conformance_report()}
        assert any("(m-2)a1" in name for name, _ in rows["parallel_two_level"].rejected)

    def test_conformance_artifact_is_fresh(self):
        artifact = Path(__file__).resolve().parents[1] / "docs" / "conformance.md"
        assert artifact.exists(), "docs/conformance.md missing; regenerate via render_conformance_markdown()"
        assert artifact.read_text() == closedform.render_conformance_markdown()
