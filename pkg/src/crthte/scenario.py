"""Shared scenario vocabulary: user-facing inputs -> model objects.

The CLI flags and the HTTP API body use the same field names (the
calculator's vocabulary: ICC, CAC, cluster-period size, prevalence). Both
front ends funnel through ``build_request`` so a flag set and its JSON
equivalent produce byte-identical results.

Correlation structures are chosen from the design and sampling scheme — the
most complex structure each design supports: exchangeable for single-period
designs, nested exchangeable (ICC + CAC) for cross-sectional multi-period
designs, block exchangeable (+ within-individual ICC) with a time-invariant
covariate for closed cohorts, nested-over-subclusters for three-level
designs, independent covariate for IRGTs, and all-ones for cluster-level
covariates.
"""

from __future__ import annotations

from dataclasses import dataclass

from .correlation import CovariateCorrelation, OutcomeCorrelation
from .designs import ArmParams, DesignSpec, TreatmentMatrix, parse_csv
from .engine import CovariateModel, OutcomeModel
from .errors import ValidationError
from .solver import IccBand, SolveRequest

DESIGN_NAMES = {
    "parallel": None,  # resolved by periods
    "parallel-by-arm": "parallel_two_level_by_arm",
    "three-level": "parallel_three_level",
    "crxo": None,  # resolved by periods
    "stepped-wedge": "stepped_wedge",
    "irgt": "irgt",
    "custom": "custom",
}

_MULTI_PERIOD = {"multi_period_parallel", "crxo_two_period", "crxo_multi_period", "stepped_wedge", "custom"}


def resolve_family(design: str, periods: int) -> str:
    if design not in DESIGN_NAMES:
        raise ValidationError(
            f"unknown design {design!r}; choose from {sorted(DESIGN_NAMES)}", field="design"
        )
    if design == "parallel":
        return "parallel_two_level" if periods <= 1 else "multi_period_parallel"
    if design == "crxo":
        return "crxo_two_period" if periods == 2 else "crxo_multi_period"
    return DESIGN_NAMES[design]


@dataclass(frozen=True)
class Scenario:
    design: DesignSpec
    outcome: OutcomeModel
    covariate: CovariateModel
    matrix: TreatmentMatrix | None


def _get(params: dict, key: str, default=None):
    value = params.get(key, default)
    return default if value is None else value


def _build_design(params: dict) -> tuple[DesignSpec, TreatmentMatrix | None]:
    design_name = params.get("design")
    if not design_name:
        raise ValidationError("design is required", field="design")
    matrix = None
    if design_name == "custom":
        csv_text = params.get("design_csv")
        if not csv_text:
            raise ValidationError("custom designs need design_csv", field="design_csv")
        matrix = parse_csv(csv_text)
        periods = matrix.n_periods
        family = "custom"
    else:
        periods = int(_get(params, "periods", 2 if design_name == "crxo" else 1))
        family = resolve_family(design_name, periods)
    if family == "stepped_wedge":
        sequences = params.get("sequences")
        if sequences is not None and int(sequences) != periods - 1:
            raise ValidationError(
                f"stepped wedge with {periods} periods has {periods - 1} sequences",
                field="sequences",
            )
    arm_params = None
    if family in ("parallel_two_level_by_arm", "irgt"):
        try:
            arm_params = ArmParams(
                m_treatment=int(params["arm_m"][0]),
                m_control=int(params["arm_m"][1]),
                alpha1_treatment=float(params["arm_icc"][0]),
                alpha1_control=float(params["arm_icc"][1]),
                sigma_treatment=float(_get(params, "arm_sd", (1.0, 1.0))[0]),
                sigma_control=float(_get(params, "arm_sd", (1.0, 1.0))[1]),
            )
        except (KeyError, IndexError, TypeError):
            raise ValidationError(
                f"{design_name} needs arm_m and arm_icc pairs (treated, control)", field="arm_m"
            ) from None
    n_total = params.get("clusters")
    spec = DesignSpec(
        family=family,
        periods=periods,
        sequences=periods - 1 if family == "stepped_wedge" else None,
        pi=float(_get(params, "pi", 0.5)),
        sampling=_get(params, "sampling", "cross_sectional"),
        n_total=int(n_total) if n_total is not None else None,
        n_sub=int(params["subclusters"]) if params.get("subclusters") is not None else None,
        randomization_level=_get(params, "randomization_level", "cluster"),
        arm_params=arm_params,
    )
    return spec, matrix


def _outcome_correlation(params: dict, spec: DesignSpec) -> OutcomeCorrelation:
    alpha1 = float(_get(params, "icc_outcome", 0.0))
    cac = params.get("cac_outcome")
    alpha0 = params.get("icc0_outcome")
    multi = spec.periods > 1 or spec.family == "custom"
    if spec.family in ("parallel_two_level_by_arm", "irgt"):
        assert spec.arm_params is not None
        return OutcomeCorrelation.by_arm(
            spec.arm_params.alpha1_control, spec.arm_params.alpha1_treatment
        )
    if spec.family == "parallel_three_level":
        cac_value = 1.0 if cac is None else float(cac)
        return OutcomeCorrelation.nested(alpha1, cac=cac_value)
    if not multi:
        return OutcomeCorrelation.exchangeable(alpha1)
    if spec.sampling == "closed_cohort":
        if alpha0 is None:
            raise ValidationError(
                "closed-cohort designs need the within-individual ICC (icc0_outcome)",
                field="icc0_outcome",
            )
        return OutcomeCorrelation.block(float(alpha0), alpha1, cac=float(_get(params, "cac_outcome", 1.0)))
    return OutcomeCorrelation.nested(alpha1, cac=float(_get(params, "cac_outcome", 1.0)))


def _covariate_correlation(params: dict, spec: DesignSpec) -> CovariateCorrelation:
    level = _get(params, "covariate_level", "individual")
    rho = float(_get(params, "icc_covariate", 0.0))
    if level == "cluster":
        return CovariateCorrelation.cluster_constant()
    if spec.family == "irgt":
        return CovariateCorrelation.independent()
    if spec.family == "parallel_three_level":
        return CovariateCorrelation.nested(rho, cac=float(_get(params, "cac_covariate", 1.0)))
    multi = spec.periods > 1 or spec.family == "custom"
    if not multi:
        return CovariateCorrelation.exchangeable(rho)
    if spec.sampling == "closed_cohort":
        return CovariateCorrelation.cohort_time_invariant(rho)
    return CovariateCorrelation.nested(rho, cac=float(_get(params, "cac_covariate", 1.0)))


def _build_outcome(params: dict, spec: DesignSpec) -> OutcomeModel:
    corr = _outcome_correlation(params, spec)
    if params.get("standardized"):
        return OutcomeModel.standardized(corr)
    outcome_type = _get(params, "outcome_type", "continuous")
    if outcome_type == "binary":
        prevalence = params.get("outcome_prevalence")
        if prevalence is None:
            raise ValidationError("binary outcomes need outcome_prevalence", field="outcome_prevalence")
        return OutcomeModel.binary(float(prevalence), corr)
    sd = params.get("outcome_sd")
    if sd is None:
        raise ValidationError(
            "continuous outcomes need outcome_sd (or pass standardized)", field="outcome_sd"
        )
    return OutcomeModel(float(sd), corr)


def _build_covariate(params: dict, spec: DesignSpec) -> CovariateModel:
    corr = _covariate_correlation(params, spec)
    level = _get(params, "covariate_level", "individual")
    ctype = _get(params, "covariate_type", "continuous")
    if ctype == "binary":
        prevalence = params.get("prevalence")
        if prevalence is None:
            raise ValidationError("binary covariates need prevalence", field="prevalence")
        return CovariateModel.binary(float(prevalence), corr, level=level)
    sd = params.get("covariate_sd")
    if sd is None:
        raise ValidationError("continuous covariates need covariate_sd", field="covariate_sd")
    return CovariateModel.continuous(float(sd), corr, mu_x=float(_get(params, "covariate_mean", 0.0)), level=level)


def _build_band(params: dict) -> IccBand | None:
    def triple(range_key: str, assumed: float | None):
        rng = params.get(range_key)
        if rng is None:
            return None
        lo, hi = float(rng[0]), float(rng[1])
        mid = float(assumed) if assumed is not None else (lo + hi) / 2
        return (lo, mid, hi)

    band = IccBand(
        outcome_icc=triple("icc_outcome_range", params.get("icc_outcome")),
        outcome_cac=triple("cac_outcome_range", params.get("cac_outcome")),
        covariate_icc=triple("icc_covariate_range", params.get("icc_covariate")),
        covariate_cac=triple("cac_covariate_range", params.get("cac_covariate")),
    )
    return band if band.any() else None


def build_scenario(params: dict) -> Scenario:
    spec, matrix = _build_design(params)
    return Scenario(
        design=spec,
        outcome=_build_outcome(params, spec),
        covariate=_build_covariate(params, spec),
        matrix=matrix,
    )


SWEEP_TARGETS = {
    "m_vs_power": "power",
    "n_vs_power": "power",
    "m_vs_n": "n",
    "delta_vs_power": "power",
}
_SWEEP_PLACEHOLDERS = {
    "m_vs_power": ("cluster_size", 1),
    "n_vs_power": ("clusters", 4),
    "m_vs_n": ("cluster_size", 1),
    "delta_vs_power": ("delta", 0.0),
}


def build_sweep_request(params: dict, axis: str) -> SolveRequest:
    """Request for a sweep: the axis variable gets a placeholder (it is
    supplied per grid point), the orthogonal quantities stay required."""
    if axis not in SWEEP_TARGETS:
        raise ValidationError(f"unknown sweep axis {axis!r}", field="axis")
    key, placeholder = _SWEEP_PLACEHOLDERS[axis]
    filled = dict(params)
    if filled.get(key) is None:
        filled[key] = placeholder
    if axis == "m_vs_n":
        filled["clusters"] = None
    return build_request(filled, SWEEP_TARGETS[axis])


def build_request(params: dict, target: str) -> SolveRequest:
    scenario = build_scenario(params)
    df_mode = {"normal": "normal", "t": "t_n_minus_2"}.get(_get(params, "df", "normal"))
    if df_mode is None:
        raise ValidationError("df must be 'normal' or 't'", field="df")
    delta = params.get("delta")
    power = params.get("power")
    direction = -1 if _get(params, "direction", "positive") == "negative" else 1
    return SolveRequest(
        design=scenario.design,
        outcome=scenario.outcome,
        covariate=scenario.covariate,
        target=target,  # type: ignore[arg-type]
        delta=float(delta) if delta is not None else None,
        power=float(power) if power is not None else None,
        n=int(params["clusters"]) if params.get("clusters") is not None else None,
        m=int(params["cluster_size"]) if params.get("cluster_size") is not None else None,
        alpha_level=float(_get(params, "alpha", 0.05)),
        df_mode=df_mode,  # type: ignore[arg-type]
        matrix=scenario.matrix,
        icc_band=_build_band(params),
        delta_direction=direction,
    )
