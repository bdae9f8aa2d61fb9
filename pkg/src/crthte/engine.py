"""Expected-information variance engine for treatment-by-covariate analyses.

For a cluster following treatment row ``u`` over ``J`` group slots (periods,
or subclusters for three-level designs) with ``m`` members per slot, the GLS
design matrix has columns: slot intercepts (or one intercept when slots are
subclusters), the treatment indicator, the covariate main effect (pooled or
one column per period), and the treatment-covariate interaction. The engine
returns the covariate-averaged Fisher information

    I = sum_s  c_s * E_X[ D_s' V^{-1} D_s ],        V = sigma_y|x^2 * R_y,

whose inverse gives the design-stage variances of the interaction slope
(heterogeneity effect) and of the average treatment effect.

Expectations over the random covariate use E[X] = mu_x * 1 and
E[XX'] = sigma_x^2 * R_x + mu_x^2 * 11'. Because every column is either a
deterministic slot-level mask ``a`` (expanded over members) or ``a ∘ X``,
each information entry reduces to a bilinear form in two J x J kernels:

    deterministic x deterministic:  a' (m S' + m^2 T') b
    deterministic x random:         mu_x * (same)
    random x random:                sigma_x^2 * a' K b + mu_x^2 * (same),
    K = m (S'∘Sx + S'∘Tx + T'∘Sx + m T'∘Tx)

where R_y^{-1} = kron(S', I_m) + kron(T', J_m) comes from the J x J inverses
S^{-1} and (S + mT)^{-1}, and (Sx, Tx) represent R_x the same way. Assembly
is therefore O(J^3) regardless of m; the interaction variance is computed
internally at mu_x = 0, which is exact for the interaction coordinate by
centering invariance (the reported ATE variance is the variance of the
estimator of beta1 + mu_x*beta3, which is shift-invariant as well).

A dense fallback (``method="dense"``) materializes the full m*J matrices and
is kept for conformance testing only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .correlation import (
    DEFAULT_DIMENSION_CAP,
    CovariateCorrelation,
    OutcomeCorrelation,
    covariate_kron_parts,
    kron_spectrum,
    outcome_kron_parts,
)
from .designs import DesignSpec, TreatmentMatrix, allocation_split
from .errors import EstimabilityError, ResourceLimitError, ValidationError

# Information eigenvalues below RANK_TOL * max mark inestimable directions.
RANK_TOL = 1e-10

CovariateEffect = Literal["auto", "pooled", "period_specific"]


@dataclass(frozen=True)
class OutcomeModel:
    """Conditional outcome SD and its intracluster correlation structure."""

    sigma_yx: float
    correlation: OutcomeCorrelation

    def __post_init__(self):
        if not self.sigma_yx > 0:
            raise ValidationError("sigma_yx must be > 0", field="sigma_yx")

    @classmethod
    def standardized(cls, correlation: OutcomeCorrelation) -> "OutcomeModel":
        return cls(sigma_yx=1.0, correlation=correlation)

    @classmethod
    def binary(cls, prevalence: float, correlation: OutcomeCorrelation) -> "OutcomeModel":
        """Linear-probability scale: sigma_yx = sqrt(p(1-p)); effects are risk differences."""
        if not 0.0 < prevalence < 1.0:
            raise ValidationError("outcome prevalence must lie in (0, 1)", field="outcome_prevalence")
        return cls(sigma_yx=float(np.sqrt(prevalence * (1 - prevalence))), correlation=correlation)


@dataclass(frozen=True)
class CovariateModel:
    """Effect-modifier moments and clustering."""

    level: Literal["individual", "cluster"]
    dtype: Literal["continuous", "binary"]
    mu_x: float
    sigma_x: float
    correlation: CovariateCorrelation
    prevalence: float | None = None

    def __post_init__(self):
        if self.level not in ("individual", "cluster"):
            raise ValidationError("covariate level must be individual or cluster", field="covariate_level")
        if self.dtype not in ("continuous", "binary"):
            raise ValidationError("covariate dtype must be continuous or binary", field="covariate_type")
        if not self.sigma_x > 0:
            raise ValidationError("sigma_x must be > 0", field="covariate_sd")
        if self.dtype == "binary":
            p = self.prevalence
            if p is None or not 0.0 < p < 1.0:
                raise ValidationError("binary covariates need prevalence in (0, 1)", field="prevalence")
            if abs(self.sigma_x**2 - p * (1 - p)) > 1e-12:
                raise ValidationError("binary covariate variance must equal p(1-p)", field="covariate_sd")
        if self.level == "cluster" and self.correlation.kind != "cluster_level_constant":
            raise ValidationError(
                "cluster-level covariates use the cluster_level_constant correlation",
                field="covariate_level",
            )

    @classmethod
    def continuous(
        cls, sigma_x: float, correlation: CovariateCorrelation, mu_x: float = 0.0,
        level: Literal["individual", "cluster"] = "individual",
    ) -> "CovariateModel":
        return cls(level=level, dtype="continuous", mu_x=mu_x, sigma_x=sigma_x, correlation=correlation)

    @classmethod
    def binary(
        cls, prevalence: float, correlation: CovariateCorrelation,
        level: Literal["individual", "cluster"] = "individual",
    ) -> "CovariateModel":
        if not 0.0 < prevalence < 1.0:
            raise ValidationError("prevalence must lie in (0, 1)", field="prevalence")
        sigma_x = float(np.sqrt(prevalence * (1 - prevalence)))
        return cls(level=level, dtype="binary", mu_x=prevalence, sigma_x=sigma_x,
                   correlation=correlation, prevalence=prevalence)


@dataclass(frozen=True)
class VarianceReport:
    """Design-stage variances for the interaction (HTE) and ATE estimators.

    ``sigma2_ate_norm`` is covariate-variance-scaled (n * Var(ATE) /
    sigma_x^2), so design_effect_hte is the
    dimensionless HTE design effect and equals 1 at m = 1.
    """

    var_hte_total: float | None
    var_ate_total: float | None
    sigma2_hte_norm: float | None
    sigma2_ate_norm: float | None
    design_effect_hte: float | None
    estimable_hte: bool
    estimable_ate: bool
    n_effective: float
    covariate_effect: str

    def to_payload(self) -> dict:
        return {
            "var_hte_total": self.var_hte_total,
            "var_ate_total": self.var_ate_total,
            "sigma2_hte_norm": self.sigma2_hte_norm,
            "sigma2_ate_norm": self.sigma2_ate_norm,
            "design_effect_hte": self.design_effect_hte,
            "estimable_hte": self.estimable_hte,
            "estimable_ate": self.estimable_ate,
            "n_effective": self.n_effective,
            "covariate_effect": self.covariate_effect,
        }

    def at_n(self, n: float) -> "VarianceReport":
        """Rescale the per-cluster normalized report to a trial of n clusters."""
        if n <= 0:
            raise ValidationError("n must be > 0", field="n")
        import dataclasses

        sigma_x2_scale = (
            self.sigma2_ate_norm / self.var_ate_total / self.n_effective
            if (self.sigma2_ate_norm and self.var_ate_total)
            else None
        )
        return dataclasses.replace(
            self,
            var_hte_total=self.sigma2_hte_norm / n if self.sigma2_hte_norm is not None else None,
            var_ate_total=(
                self.sigma2_ate_norm / (n * sigma_x2_scale)
                if (self.sigma2_ate_norm is not None and sigma_x2_scale)
                else None
            ),
            n_effective=float(n),
        )


# ---------------------------------------------------------------------------
# Column layout
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ColumnLayout:
    """Slot-level masks for the GLS columns of one cluster.

    A deterministic column expands mask ``a`` to ``a ⊗ 1_m``; a random column
    is ``(a ⊗ 1_m) ∘ X``. ``idx_treatment``/``idx_interaction`` locate beta1
    and beta3 in the information matrix.
    """

    masks: np.ndarray  # (p, J)
    random: np.ndarray  # (p,) bool
    names: tuple[str, ...]
    idx_treatment: int
    idx_interaction: int

    @property
    def n_columns(self) -> int:
        return self.masks.shape[0]

    def expand(self, m: int) -> np.ndarray:
        """Member-level masks, shape (p, J*m), period-major layout."""
        return np.repeat(self.masks, m, axis=1)


def cluster_design_columns(
    u: Sequence[int], m: int, periods: int,
    covariate_effect: Literal["pooled", "period_specific"] = "pooled",
    period_effects: bool = True,
) -> ColumnLayout:
    """Column specification for one cluster with treatment row ``u``.

    Single-period designs collapse to (intercept, W, X, WX); multi-period
    designs carry one intercept per period and, under ``period_specific``,
    one covariate column per period. ``period_effects=False`` is the
    three-level layout: slots are subclusters, which get no fixed effects.
    """
    J = periods
    if len(u) != J:
        raise ValidationError("treatment row length must equal the number of periods", field="rows")
    if m < 1:
        raise ValidationError("m must be >= 1", field="m")
    uvec = np.asarray(u, dtype=float)
    eye = np.eye(J)
    masks: list[np.ndarray] = []
    random: list[bool] = []
    names: list[str] = []
    if period_effects:
        for j in range(J):
            masks.append(eye[j])
            random.append(False)
            names.append(f"period_{j + 1}" if J > 1 else "intercept")
    else:
        masks.append(np.ones(J))
        random.append(False)
        names.append("intercept")
    idx_treatment = len(masks)
    masks.append(uvec)
    random.append(False)
    names.append("treatment")
    if covariate_effect == "pooled" or J == 1:
        masks.append(np.ones(J))
        random.append(True)
        names.append("covariate")
    elif covariate_effect == "period_specific":
        for j in range(J):
            masks.append(eye[j])
            random.append(True)
            names.append(f"covariate_{j + 1}")
    else:
        raise ValidationError(f"unknown covariate_effect {covariate_effect!r}", field="covariate_effect")
    idx_interaction = len(masks)
    masks.append(uvec)
    random.append(True)
    names.append("interaction")
    return ColumnLayout(
        masks=np.vstack(masks),
        random=np.asarray(random, dtype=bool),
        names=tuple(names),
        idx_treatment=idx_treatment,
        idx_interaction=idx_interaction,
    )


# ---------------------------------------------------------------------------
# Strata: the canonical internal design representation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Stratum:
    """One treatment sequence: its row, weight, and per-stratum outcome scale."""

    row: tuple[int, ...]
    weight: float
    m: int
    sigma_yx: float
    outcome: OutcomeCorrelation


def resolve_covariate_effect(covariate_effect: CovariateEffect, periods: int) -> str:
    """Family-independent default: period-specific whenever periods vary."""
    if covariate_effect == "auto":
        return "period_specific" if periods > 1 else "pooled"
    return covariate_effect


def strata_from_matrix(
    matrix: TreatmentMatrix, m: int, outcome: OutcomeModel,
    weights: Sequence[float] | None = None,
) -> list[Stratum]:
    if weights is None:
        weights = matrix.clusters_per_sequence
    if len(weights) != matrix.n_sequences:
        raise ValidationError("weights must match the number of sequences", field="weights")
    strata = []
    for row, w in zip(matrix.rows, weights):
        if w < 0:
            raise ValidationError("sequence weights must be nonnegative", field="weights")
        corr = outcome.correlation
        if corr.kind == "arm_specific_exchangeable":
            if matrix.n_periods != 1:
                raise ValidationError("arm-specific ICCs apply to single-period designs", field="kind")
            corr = corr.for_arm(treated=bool(row[0]))
        strata.append(Stratum(row=row, weight=float(w), m=m, sigma_yx=outcome.sigma_yx, outcome=corr))
    return strata


def design_strata(
    spec: DesignSpec, matrix: TreatmentMatrix, m: int, outcome: OutcomeModel,
    weights: Sequence[float] | None = None,
) -> tuple[list[Stratum], int, bool]:
    """Canonicalize (spec, matrix) into strata over group slots.

    Returns (strata, slots, period_effects). Three-level designs expand to
    n_sub subcluster slots without slot fixed effects; by-arm and IRGT
    families attach per-arm (m, sigma, alpha1).
    """
    if spec.family == "parallel_three_level":
        assert spec.n_sub is not None
        n_sub = spec.n_sub
        if weights is None:
            weights = matrix.clusters_per_sequence
        if spec.randomization_level == "cluster":
            rows = [(1,) * n_sub, (0,) * n_sub]
            if len(weights) != 2:
                raise ValidationError("cluster-randomized three-level designs have two sequences", field="weights")
        else:
            q, _ = allocation_split(spec.pi, n_sub)
            rows = [tuple(1 if j < q else 0 for j in range(n_sub))]
            weights = [float(sum(weights))]
        strata = [
            Stratum(row=r, weight=float(w), m=m, sigma_yx=outcome.sigma_yx, outcome=outcome.correlation)
            for r, w in zip(rows, weights)
        ]
        return strata, n_sub, False

    if spec.family in ("parallel_two_level_by_arm", "irgt"):
        assert spec.arm_params is not None
        ap = spec.arm_params
        if weights is None:
            weights = matrix.clusters_per_sequence
        strata = []
        for row, w in zip(matrix.rows, weights):
            treated = bool(row[0])
            strata.append(
                Stratum(
                    row=row,
                    weight=float(w),
                    m=ap.m_treatment if treated else ap.m_control,
                    sigma_yx=ap.sigma_treatment if treated else ap.sigma_control,
                    outcome=OutcomeCorrelation.exchangeable(
                        ap.alpha1_treatment if treated else ap.alpha1_control
                    ),
                )
            )
        return strata, 1, True

    return strata_from_matrix(matrix, m, outcome, weights), matrix.n_periods, True


# ---------------------------------------------------------------------------
# Information assembly
# ---------------------------------------------------------------------------


def _inverse_parts(S: np.ndarray, T: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """(S', T') with [kron(S,I) + kron(T,J)]^-1 = kron(S',I) + kron(T',J)."""
    values, _ = kron_spectrum(S, T, m)
    if values.min() <= 1e-12:
        raise ValidationError(
            f"outcome covariance is singular or indefinite (eigenvalue {values.min():.3e}); "
            "check the ICC parameters"
        )
    Si = np.linalg.inv(S)
    SmTi = np.linalg.inv(S + m * T)
    return Si, (SmTi - Si) / m


def _stratum_kernels(
    stratum_m: int, sigma_yx: float,
    Sy: np.ndarray, Ty: np.ndarray, Sx: np.ndarray, Tx: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """(M_det, K_rand): bilinear kernels for deterministic and random columns."""
    m = stratum_m
    Sp, Tp = _inverse_parts(sigma_yx**2 * Sy, sigma_yx**2 * Ty, m)
    M_det = m * Sp + m * m * Tp
    K_rand = m * (Sp * Sx + Sp * Tx + Tp * Sx + m * (Tp * Tx))
    return M_det, K_rand


def information_from_strata(
    strata: Sequence[Stratum],
    covariate: CovariateModel,
    periods: int,
    covariate_effect: Literal["pooled", "period_specific"] = "pooled",
    period_effects: bool = True,
    mu_x: float | None = None,
) -> tuple[np.ndarray, ColumnLayout]:
    """Total expected information over strata (collapsed J x J assembly)."""
    if not strata:
        raise ValidationError("at least one stratum required", field="rows")
    mu = covariate.mu_x if mu_x is None else mu_x
    sigma_x2 = covariate.sigma_x**2
    Sx, Tx = covariate_kron_parts(covariate.correlation, periods)
    info = None
    layout_ref: ColumnLayout | None = None
    for st in strata:
        Sy, Ty = outcome_kron_parts(st.outcome, periods)
        M_det, K_rand = _stratum_kernels(st.m, st.sigma_yx, Sy, Ty, Sx, Tx)
        layout = cluster_design_columns(st.row, st.m, periods, covariate_effect, period_effects)
        if layout_ref is None:
            layout_ref = layout
        A = layout.masks
        det = A @ M_det @ A.T
        quad = A @ K_rand @ A.T
        rnd = layout.random.astype(float)
        det_pair = np.outer(1 - rnd, 1 - rnd)
        cross_pair = np.outer(rnd, 1 - rnd) + np.outer(1 - rnd, rnd)
        rand_pair = np.outer(rnd, rnd)
        contrib = det * (det_pair + mu * cross_pair + mu * mu * rand_pair) + sigma_x2 * quad * rand_pair
        info = st.weight * contrib if info is None else info + st.weight * contrib
    assert layout_ref is not None
    return info, layout_ref


def _dense_information(
    strata: Sequence[Stratum],
    covariate: CovariateModel,
    periods: int,
    covariate_effect: Literal["pooled", "period_specific"],
    period_effects: bool,
    mu_x: float | None,
    cap: int = DEFAULT_DIMENSION_CAP,
) -> tuple[np.ndarray, ColumnLayout]:
    """Brute-force m*J x m*J reference path (conformance testing)."""
    mu = covariate.mu_x if mu_x is None else mu_x
    sigma_x2 = covariate.sigma_x**2
    Sx, Tx = covariate_kron_parts(covariate.correlation, periods)
    info = None
    layout_ref = None
    for st in strata:
        m = st.m
        if m * periods > cap:
            raise ResourceLimitError(f"dense path refuses m*J = {m * periods} > {cap}")
        Sy, Ty = outcome_kron_parts(st.outcome, periods)
        V = st.sigma_yx**2 * (np.kron(Sy, np.eye(m)) + np.kron(Ty, np.ones((m, m))))
        Rx = np.kron(Sx, np.eye(m)) + np.kron(Tx, np.ones((m, m)))
        Vi = np.linalg.inv(V)
        layout = cluster_design_columns(st.row, m, periods, covariate_effect, period_effects)
        if layout_ref is None:
            layout_ref = layout
        A = layout.expand(m)  # (p, mJ)
        det = A @ Vi @ A.T
        quad = A @ (Vi * Rx) @ A.T  # tr(D_a Vi D_b Rx) = a'(Vi ∘ Rx)b
        rnd = layout.random.astype(float)
        det_pair = np.outer(1 - rnd, 1 - rnd)
        cross_pair = np.outer(rnd, 1 - rnd) + np.outer(1 - rnd, rnd)
        rand_pair = np.outer(rnd, rnd)
        contrib = det * (det_pair + mu * cross_pair + mu * mu * rand_pair) + sigma_x2 * quad * rand_pair
        info = st.weight * contrib if info is None else info + st.weight * contrib
    assert layout_ref is not None
    return info, layout_ref


def expected_information(
    matrix: TreatmentMatrix,
    m: int,
    outcome: OutcomeModel,
    covariate: CovariateModel,
    covariate_effect: CovariateEffect = "auto",
    *,
    spec: DesignSpec | None = None,
    weights: Sequence[float] | None = None,
    mu_x: float | None = None,
    method: Literal["collapsed", "dense"] = "collapsed",
) -> tuple[np.ndarray, ColumnLayout]:
    """Covariate-averaged GLS information for the whole design.

    ``weights`` overrides the matrix cluster counts (the solver passes exact
    sequence proportions). ``mu_x`` overrides the covariate mean; the default
    evaluates at mu_x = 0, exact for the interaction and ATE coordinates by
    centering invariance.
    """
    if spec is not None:
        strata, slots, period_effects = design_strata(spec, matrix, m, outcome, weights)
    else:
        strata, slots, period_effects = strata_from_matrix(matrix, m, outcome, weights), matrix.n_periods, True
    effect = resolve_covariate_effect(covariate_effect, slots if period_effects else 1)
    if not period_effects:
        effect = "pooled"
    mu = 0.0 if mu_x is None else mu_x
    if method == "dense":
        return _dense_information(strata, covariate, slots, effect, period_effects, mu)
    return information_from_strata(strata, covariate, slots, effect, period_effects, mu)


# ---------------------------------------------------------------------------
# Variance extraction
# ---------------------------------------------------------------------------


def _coordinate_variances(info: np.ndarray, layout: ColumnLayout) -> tuple[dict, dict]:
    """Per-coordinate variances and estimability from the information matrix."""
    values, vectors = np.linalg.eigh(info)
    vmax = float(values.max()) if values.size else 0.0
    if vmax <= 0:
        raise EstimabilityError("information matrix is null; design carries no information")
    null = values < RANK_TOL * vmax
    estimable = {}
    for label, idx in (("treatment", layout.idx_treatment), ("interaction", layout.idx_interaction)):
        loading = float(np.linalg.norm(vectors[idx, null])) if null.any() else 0.0
        estimable[label] = loading < 1e-6
    if null.any():
        inv_vals = np.where(null, 0.0, 1.0 / np.where(null, 1.0, values))
        cov = (vectors * inv_vals) @ vectors.T
    else:
        cov = np.linalg.inv(info)
    variances = {
        "treatment": float(cov[layout.idx_treatment, layout.idx_treatment]),
        "interaction": float(cov[layout.idx_interaction, layout.idx_interaction]),
    }
    return variances, estimable


def variance_report(
    matrix: TreatmentMatrix,
    m: int,
    outcome: OutcomeModel,
    covariate: CovariateModel,
    covariate_effect: CovariateEffect = "auto",
    *,
    spec: DesignSpec | None = None,
    weights: Sequence[float] | None = None,
    method: Literal["collapsed", "dense"] = "collapsed",
) -> VarianceReport:
    """Invert the expected information and report HTE and ATE variances."""
    info, layout = expected_information(
        matrix, m, outcome, covariate, covariate_effect,
        spec=spec, weights=weights, method=method,
    )
    variances, estimable = _coordinate_variances(info, layout)
    if weights is not None:
        n_eff = float(sum(weights))
    else:
        n_eff = float(matrix.n_total)
    est_hte = estimable["interaction"]
    est_ate = estimable["treatment"]
    if not est_hte and not est_ate:
        raise EstimabilityError(
            "design cannot identify requested effect: both the treatment and "
            "interaction coordinates are confounded",
            coordinate="treatment,interaction",
        )
    sigma_x2 = covariate.sigma_x**2
    var_hte = variances["interaction"] if est_hte else None
    var_ate = variances["treatment"] if est_ate else None
    hte_norm = n_eff * var_hte if var_hte is not None else None
    ate_norm = n_eff * var_ate / sigma_x2 if var_ate is not None else None
    de = hte_norm / ate_norm if (hte_norm is not None and ate_norm is not None and ate_norm > 0) else None
    slots = matrix.n_periods if spec is None or spec.family != "parallel_three_level" else 1
    return VarianceReport(
        var_hte_total=var_hte,
        var_ate_total=var_ate,
        sigma2_hte_norm=hte_norm,
        sigma2_ate_norm=ate_norm,
        design_effect_hte=de,
        estimable_hte=est_hte,
        estimable_ate=est_ate,
        n_effective=n_eff,
        covariate_effect=resolve_covariate_effect(covariate_effect, slots),
    )


# ---------------------------------------------------------------------------
# IRGT closed forms (Table-style two-arm expressions)
# ---------------------------------------------------------------------------


def irgt_variance(spec: DesignSpec, covariate: CovariateModel) -> VarianceReport:
    """Two-arm variance for individually randomized group treatment trials.

    Implements the per-arm expressions for an individual-level covariate
    (independent covariate correlation) and a group-level covariate
    (constant within group); normalization is per total randomized groups
    with pi the proportion of groups in the treated arm.
    """
    if spec.arm_params is None:
        raise ValidationError("IRGT designs require arm_params", field="arm_params")
    ap = spec.arm_params
    pi = spec.pi
    sigma_x2 = covariate.sigma_x**2
    if covariate.level == "cluster" or covariate.correlation.kind == "cluster_level_constant":
        rho = 1.0
    else:
        # individual-level effect modifiers in IRGTs are treated as unclustered
        rho = 0.0

    def arm_term(sigma: float, m: int, alpha: float, share: float) -> float:
        numer = sigma**2 * (1 - alpha) * (1 + (m - 1) * alpha)
        denom = share * m * sigma_x2 * (1 + (m - 2) * alpha - (m - 1) * rho * alpha)
        if denom <= 0:
            raise ValidationError("degenerate IRGT variance denominator; check ICCs", field="arm_params")
        return numer / denom

    hte_norm = arm_term(ap.sigma_treatment, ap.m_treatment, ap.alpha1_treatment, pi) + arm_term(
        ap.sigma_control, ap.m_control, ap.alpha1_control, 1 - pi
    )

    def ate_term(sigma: float, m: int, alpha: float, share: float) -> float:
        return sigma**2 * (1 + (m - 1) * alpha) / (share * m * sigma_x2)

    ate_norm = ate_term(ap.sigma_treatment, ap.m_treatment, ap.alpha1_treatment, pi) + ate_term(
        ap.sigma_control, ap.m_control, ap.alpha1_control, 1 - pi
    )
    n = spec.n_total
    return VarianceReport(
        var_hte_total=hte_norm / n if n else None,
        var_ate_total=(ate_norm * sigma_x2 / n) if n else None,
        sigma2_hte_norm=hte_norm,
        sigma2_ate_norm=ate_norm,
        design_effect_hte=hte_norm / ate_norm,
        estimable_hte=True,
        estimable_ate=True,
        n_effective=float(n) if n else 1.0,
        covariate_effect="pooled",
    )
