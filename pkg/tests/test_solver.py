import math

import pytest
from scipy.stats import norm

from crthte.correlation import CovariateCorrelation, OutcomeCorrelation
from crthte.designs import DesignSpec
from crthte.engine import CovariateModel, OutcomeModel
from crthte.errors import InfeasibleError, ValidationError
from crthte.scenario import build_request
from crthte.solver import (
    IccBand,
    SolveRequest,
    power_from_variance,
    solve_delta,
    solve_m,
    solve_n,
    solve_power,
    sweep,
)

UMDEX = dict(
    design="parallel", cluster_size=11, icc_outcome=0.02, icc_covariate=0.2,
    covariate_type="binary", prevalence=0.36, delta=0.7, standardized=True,
    power=0.9, alpha=0.05,
)
LIRE = dict(
    design="stepped-wedge", sequences=5, periods=6, clusters=100,
    icc_outcome=0.022, cac_outcome=0.5, icc_covariate=0.1, cac_covariate=0.9,
    covariate_type="binary", prevalence=0.2, delta=-0.05, standardized=True,
    power=0.9, alpha=0.05,
)


class TestPowerFromVariance:
    def test_null_effect_gives_one_sided_size(self):
        assert power_from_variance(0.0, 1.0, 0.05) == pytest.approx(0.025, abs=1e-12)

    def test_effect_at_critical_value_gives_half(self):
        var = 2.0
        delta = norm.ppf(0.975) * math.sqrt(var)
        assert power_from_variance(delta, var, 0.05) == pytest.approx(0.5, abs=1e-12)

    def test_t_mode_needs_df(self):
        with pytest.raises(ValidationError):
            power_from_variance(0.5, 1.0, 0.05, "t_n_minus_2", n=2)

    def test_t_below_normal_on_grid(self):
        for n in (4, 10, 30, 100):
            for shift in (0.5, 1.5, 3.0):
                var = 1.0
                delta = shift
                t_power = power_from_variance(delta, var, 0.05, "t_n_minus_2", n)
                z_power = power_from_variance(delta, var, 0.05, "normal", n)
                assert t_power <= z_power + 1e-12


class TestSolveN:
    @pytest.mark.parametrize(
        "m,icc,expected", [(11, 0.02, 35), (8, 0.02, 48), (10, 0.04, 39), (7, 0.04, 55)]
    )
    def test_umdex_cluster_counts(self, m, icc, expected):
        request = build_request({**UMDEX, "cluster_size": m, "icc_outcome": icc}, "n")
        result = solve_n(request)
        assert result.solved_value == expected
        assert result.achieved_power >= 0.9

    def test_minimality(self):
        request = build_request(UMDEX, "n")
        result = solve_n(request)
        n = int(result.solved_value)
        s2 = result.variance.sigma2_hte_norm
        assert power_from_variance(0.7, s2 / n, 0.05) >= 0.9
        assert power_from_variance(0.7, s2 / (n - 1), 0.05) < 0.9

    def test_sw_rounds_to_sequence_multiple(self):
        params = dict(LIRE, cluster_size=400)
        del params["clusters"]
        result = solve_n(build_request(params, "n"))
        assert result.solved_value % 5 == 0
        assert result.achieved_power >= 0.9

    def test_pi_symmetry(self):
        a = solve_n(build_request({**UMDEX, "pi": 0.3}, "n")).solved_value
        b = solve_n(build_request({**UMDEX, "pi": 0.7}, "n")).solved_value
        assert a == b

    def test_t_mode_needs_more_clusters(self):
        normal = solve_n(build_request(UMDEX, "n")).solved_value
        small_sample = solve_n(build_request({**UMDEX, "df": "t"}, "n")).solved_value
        assert small_sample >= normal


class TestSolveM:
    def test_lire_design_comparison(self):
        for design, expected in (("stepped-wedge", 353), ("parallel", 190), ("crxo", 185)):
            params = dict(LIRE, design=design)
            if design != "stepped-wedge":
                del params["sequences"]
            result = solve_m(build_request(params, "m"))
            assert result.solved_value == expected

    def test_minimality_at_lire(self):
        request = build_request(LIRE, "m")
        result = solve_m(request)
        m = int(result.solved_value)
        below = solve_power(build_request({**LIRE, "cluster_size": m - 1, "clusters": 100}, "power"))
        assert result.achieved_power >= 0.9
        assert below.achieved_power < 0.9

    def test_power_ceiling_reported(self):
        # a cluster-level covariate leaves a between-cluster variance floor:
        # power cannot reach the target no matter how large m grows
        request = SolveRequest(
            design=DesignSpec(family="parallel_two_level"),
            outcome=OutcomeModel(1.0, OutcomeCorrelation.exchangeable(0.05)),
            covariate=CovariateModel(
                level="cluster", dtype="continuous", mu_x=0.0, sigma_x=1.0,
                correlation=CovariateCorrelation.cluster_constant(),
            ),
            target="m", delta=0.2, power=0.9, n=10,
        )
        with pytest.raises(InfeasibleError) as err:
            solve_m(request)
        assert err.value.asymptotic_power is not None
        assert 0 < err.value.asymptotic_power < 0.9


class TestSolveDelta:
    def test_half_power_is_critical_value(self):
        request = build_request({**UMDEX, "clusters": 35, "power": 0.5}, "delta")
        result = solve_delta(request)
        se = math.sqrt(result.variance.sigma2_hte_norm / 35)
        assert abs(result.solved_value) == pytest.approx(norm.ppf(0.975) * se, rel=1e-10)

    def test_lire_round_trip(self):
        params = dict(LIRE, cluster_size=353)
        result = solve_delta(build_request(params, "delta"))
        # solve_m returned the smallest integer m at 90% power, so the
        # detectable effect at m = 353 is just under |delta| = 0.05
        assert abs(result.solved_value) == pytest.approx(0.05, rel=5e-3)
        assert abs(result.solved_value) <= 0.05

    def test_direction(self):
        params = dict(LIRE, cluster_size=353, direction="negative")
        assert solve_delta(build_request(params, "delta")).solved_value < 0

    def test_variance_to_zero_limit(self):
        params = dict(UMDEX, clusters=10**6)
        result = solve_delta(build_request(params, "delta"))
        assert abs(result.solved_value) < 1e-2


class TestSolvePower:
    def test_delta_zero_returns_size(self):
        request = build_request({**UMDEX, "delta": 0.0, "clusters": 35}, "power")
        assert solve_power(request).achieved_power == pytest.approx(0.025, abs=1e-10)

    def test_exactly_one_unknown_enforced(self):
        with pytest.raises(ValidationError):
            build_request({**UMDEX}, "power")  # clusters missing


class TestSweep:
    def test_umdex_m_vs_n_passes_through_known_points(self):
        request = build_request(UMDEX, "n")
        series = sweep(request, "m_vs_n", [8, 11])
        points = dict(series[0].points)
        assert points[8.0] == 48
        assert points[11.0] == 35

    def test_lire_m_vs_power(self):
        request = build_request({**LIRE, "cluster_size": 1}, "power")
        series = sweep(request, "m_vs_power", [352, 353, 354])
        values = dict(series[0].points)
        assert values[353.0] == pytest.approx(0.9, abs=0.001)
        assert values[352.0] < 0.9 <= values[353.0] <= values[354.0]

    def test_single_point_series(self):
        request = build_request(UMDEX, "n")
        series = sweep(request, "m_vs_n", [11])
        assert len(series) == 1 and len(series[0].points) == 1

    def test_band_produces_three_labelled_series(self):
        params = dict(LIRE, cluster_size=1, icc_outcome_range=(0.01, 0.05))
        request = build_request(params, "power")
        assert request.icc_band == IccBand(outcome_icc=(0.01, 0.022, 0.05))
        series = sweep(request, "m_vs_power", [100, 353])
        assert [s.label for s in series] == ["min", "assumed", "max"]
        # the band moves the curve (direction of the alpha1 effect is
        # design-dependent for stepped wedges, so only distinctness is asserted)
        at_353 = [dict(s.points)[353.0] for s in series]
        assert len(set(at_353)) == 3
        assert at_353[1] == pytest.approx(0.9, abs=0.001)

    def test_empty_range_rejected(self):
        request = build_request(UMDEX, "n")
        with pytest.raises(ValidationError):
            sweep(request, "m_vs_n", [])
