"""Intracluster correlation structures for outcomes and effect modifiers.

A cluster observed over ``J`` periods (or subclusters) with ``m`` members per
period yields an ``m*J`` square correlation matrix. Observations are laid out
period-major: observation index = period * m + individual. That layout is
fixed package-wide so correlation matrices, design rows, and simulated data
agree element-for-element.

Every supported structure can be written as

    R = kron(S, I_m) + kron(T, J_m)

with J x J blocks ``S`` and ``T`` (``J_m`` = all-ones). That representation is
what the variance engine consumes: the spectrum of ``R`` is the spectrum of
``S`` with multiplicity m-1 plus the spectrum of ``S + m*T``, so positive
semi-definiteness and inversion reduce to J x J problems. Dense matrices are
materialized only on demand (tests, Monte Carlo) behind a dimension cap.

Supported outcome structures (one ICC convention throughout: alpha1 = same
period, alpha2 = different periods, alpha0 = same individual across periods):

    exchangeable               corr = alpha1 off-diagonal everywhere
    arm_specific_exchangeable  exchangeable with per-arm alpha1
    nested_exchangeable        alpha1 within period, alpha2 across periods
    block_exchangeable         nested + alpha0 for repeated measures

Covariate structures add ``independent``, ``cluster_level_constant`` (all
pairwise correlations 1) and ``cohort_time_invariant`` (the same individual
repeats their value across periods; distinct individuals correlate rho0).
The cohort structure is rank-deficient by construction, which is fine: the
engine never inverts covariate correlation matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ResourceLimitError, ValidationError

# Eigenvalues above -PSD_TOL count as nonnegative (floating-point slack).
PSD_TOL = 1e-12

# Dense m*J x m*J matrices above this size are refused.
DEFAULT_DIMENSION_CAP = 20_000

OutcomeKind = Literal[
    "exchangeable",
    "arm_specific_exchangeable",
    "nested_exchangeable",
    "block_exchangeable",
]
CovariateKind = Literal[
    "independent",
    "exchangeable",
    "nested_exchangeable",
    "cluster_level_constant",
    "cohort_time_invariant",
]


def _check_finite(name: str, value: float) -> None:
    if not np.isfinite(value):
        raise ValidationError(f"{name} must be a finite number, got {value}", field=name)


@dataclass(frozen=True)
class OutcomeCorrelation:
    """Outcome ICC structure; ``alpha2`` may be given directly or as a CAC."""

    kind: OutcomeKind
    alpha1: float = 0.0
    alpha2: float = 0.0
    alpha0: float = 0.0
    cac_mode: bool = False
    arm_values: tuple[float, float] | None = None  # (control, treatment)

    def __post_init__(self):
        if self.kind not in (
            "exchangeable",
            "arm_specific_exchangeable",
            "nested_exchangeable",
            "block_exchangeable",
        ):
            raise ValidationError(f"unknown outcome correlation kind {self.kind!r}", field="kind")
        # Out-of-range ICCs stay constructible so validate() can report them;
        # matrix builders and the engine enforce PSD as the hard gate.
        _check_finite("alpha1", self.alpha1)
        _check_finite("alpha2", self.alpha2)
        _check_finite("alpha0", self.alpha0)
        if self.kind == "arm_specific_exchangeable":
            if self.arm_values is None:
                raise ValidationError("arm_specific_exchangeable requires arm_values", field="arm_values")
            for v in self.arm_values:
                _check_finite("arm_values", v)

    @classmethod
    def exchangeable(cls, alpha1: float) -> "OutcomeCorrelation":
        return cls(kind="exchangeable", alpha1=alpha1)

    @classmethod
    def by_arm(cls, control: float, treatment: float) -> "OutcomeCorrelation":
        return cls(kind="arm_specific_exchangeable", alpha1=control, arm_values=(control, treatment))

    @classmethod
    def nested(cls, alpha1: float, alpha2: float | None = None, cac: float | None = None) -> "OutcomeCorrelation":
        return cls(kind="nested_exchangeable", alpha1=alpha1, **_resolve_cac("alpha", alpha1, alpha2, cac))

    @classmethod
    def block(
        cls, alpha0: float, alpha1: float, alpha2: float | None = None, cac: float | None = None
    ) -> "OutcomeCorrelation":
        return cls(kind="block_exchangeable", alpha0=alpha0, alpha1=alpha1, **_resolve_cac("alpha", alpha1, alpha2, cac))

    def for_arm(self, treated: bool) -> "OutcomeCorrelation":
        """Resolve an arm-specific structure to plain exchangeable."""
        if self.kind != "arm_specific_exchangeable":
            return self
        assert self.arm_values is not None
        return OutcomeCorrelation.exchangeable(self.arm_values[1 if treated else 0])


def _resolve_cac(prefix: str, within: float, between: float | None, cac: float | None) -> dict:
    if cac is not None:
        if between is not None:
            raise ValidationError(f"give {prefix}2 or cac, not both", field="cac")
        if not 0.0 <= cac <= 1.0:
            raise ValidationError(f"CAC must lie in [0, 1], got {cac}", field="cac")
        return {"alpha2": cac * within, "cac_mode": True} if prefix == "alpha" else {
            "rho2": cac * within,
            "cac_mode": True,
        }
    key = "alpha2" if prefix == "alpha" else "rho2"
    return {key: 0.0 if between is None else between}


@dataclass(frozen=True)
class CovariateCorrelation:
    """Effect-modifier ICC structure (never inverted, so singular kinds are fine)."""

    kind: CovariateKind
    rho0: float = 0.0
    rho1: float = 0.0
    rho2: float = 0.0
    cac_mode: bool = False

    def __post_init__(self):
        if self.kind not in (
            "independent",
            "exchangeable",
            "nested_exchangeable",
            "cluster_level_constant",
            "cohort_time_invariant",
        ):
            raise ValidationError(f"unknown covariate correlation kind {self.kind!r}", field="kind")
        _check_finite("rho0", self.rho0)
        _check_finite("rho1", self.rho1)
        _check_finite("rho2", self.rho2)

    @classmethod
    def independent(cls) -> "CovariateCorrelation":
        return cls(kind="independent")

    @classmethod
    def exchangeable(cls, rho1: float) -> "CovariateCorrelation":
        return cls(kind="exchangeable", rho1=rho1)

    @classmethod
    def nested(cls, rho1: float, rho2: float | None = None, cac: float | None = None) -> "CovariateCorrelation":
        return cls(kind="nested_exchangeable", rho1=rho1, **_resolve_cac("rho", rho1, rho2, cac))

    @classmethod
    def cluster_constant(cls) -> "CovariateCorrelation":
        return cls(kind="cluster_level_constant")

    @classmethod
    def cohort_time_invariant(cls, rho0: float) -> "CovariateCorrelation":
        return cls(kind="cohort_time_invariant", rho0=rho0)


# ---------------------------------------------------------------------------
# kron(S, I) + kron(T, J) representations
# ---------------------------------------------------------------------------


def outcome_kron_parts(corr: OutcomeCorrelation, periods: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (S, T) with R = kron(S, I_m) + kron(T, J_m), S/T of size J x J."""
    if periods < 1:
        raise ValidationError("periods must be >= 1", field="periods")
    J = periods
    eye = np.eye(J)
    ones = np.ones((J, J))
    if corr.kind == "arm_specific_exchangeable":
        raise ValidationError(
            "arm_specific_exchangeable must be resolved per arm before matrix construction",
            field="kind",
        )
    if corr.kind == "exchangeable":
        return (1.0 - corr.alpha1) * eye, corr.alpha1 * ones
    if corr.kind == "nested_exchangeable":
        a1, a2 = corr.alpha1, corr.alpha2
        return (1.0 - a1) * eye, (a1 - a2) * eye + a2 * ones
    # block exchangeable (J = 1 degenerates to exchangeable)
    a0, a1, a2 = corr.alpha0, corr.alpha1, corr.alpha2
    return (1.0 - a1 - a0 + a2) * eye + (a0 - a2) * ones, (a1 - a2) * eye + a2 * ones


def covariate_kron_parts(corr: CovariateCorrelation, periods: int) -> tuple[np.ndarray, np.ndarray]:
    if periods < 1:
        raise ValidationError("periods must be >= 1", field="periods")
    J = periods
    eye = np.eye(J)
    ones = np.ones((J, J))
    if corr.kind == "independent":
        return eye, np.zeros((J, J))
    if corr.kind == "exchangeable":
        return (1.0 - corr.rho1) * eye, corr.rho1 * ones
    if corr.kind == "nested_exchangeable":
        r1, r2 = corr.rho1, corr.rho2
        return (1.0 - r1) * eye, (r1 - r2) * eye + r2 * ones
    if corr.kind == "cluster_level_constant":
        return np.zeros((J, J)), ones
    # cohort_time_invariant: same individual across periods -> 1, else rho0
    r0 = corr.rho0
    return (1.0 - r0) * ones, r0 * ones


def kron_spectrum(S: np.ndarray, T: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of kron(S, I_m) + kron(T, J_m) with their multiplicities.

    The within-period contrast subspace carries spec(S) with multiplicity
    m - 1 each; period means carry spec(S + m T).
    """
    vals_s = np.linalg.eigvalsh(S)
    vals_sm = np.linalg.eigvalsh(S + m * T)
    if m > 1:
        values = np.concatenate([vals_s, vals_sm])
        mults = np.concatenate([np.full(len(vals_s), m - 1), np.ones(len(vals_sm))])
    else:
        values, mults = vals_sm, np.ones(len(vals_sm))
    return values, mults.astype(int)


def _dense_from_parts(S: np.ndarray, T: np.ndarray, m: int, cap: int) -> np.ndarray:
    J = S.shape[0]
    if m < 1:
        raise ValidationError("m must be >= 1", field="m")
    if m * J > cap:
        raise ResourceLimitError(f"matrix dimension m*J = {m * J} exceeds cap {cap}")
    return np.kron(S, np.eye(m)) + np.kron(T, np.ones((m, m)))


def build_outcome_matrix(
    corr: OutcomeCorrelation, m: int, periods: int, *, cap: int = DEFAULT_DIMENSION_CAP
) -> np.ndarray:
    """Dense outcome correlation matrix (period-major layout); PSD-checked."""
    S, T = outcome_kron_parts(corr, periods)
    R = _dense_from_parts(S, T, m, cap)
    values, _ = kron_spectrum(S, T, m)
    if values.min() < -PSD_TOL:
        raise ValidationError(
            f"outcome correlation parameters are not positive semi-definite "
            f"(minimum eigenvalue {values.min():.3e} at m={m}, J={periods})"
        )
    return R


def build_covariate_matrix(
    corr: CovariateCorrelation, m: int, periods: int, *, cap: int = DEFAULT_DIMENSION_CAP
) -> np.ndarray:
    """Dense covariate correlation matrix; singular structures are permitted."""
    S, T = covariate_kron_parts(corr, periods)
    R = _dense_from_parts(S, T, m, cap)
    values, _ = kron_spectrum(S, T, m)
    if values.min() < -PSD_TOL:
        raise ValidationError(
            f"covariate correlation parameters are not positive semi-definite "
            f"(minimum eigenvalue {values.min():.3e} at m={m}, J={periods})"
        )
    return R


# ---------------------------------------------------------------------------
# Analytic eigenvalues
# ---------------------------------------------------------------------------


def eigenvalues_nested(alpha1: float, alpha2: float, m: int, periods: int) -> tuple[float, float, float]:
    """Eigenvalues (lam1, lam2, lam3) of the nested exchangeable structure.

    Multiplicities are J(m-1), J-1 and 1: within-period contrasts, contrasts
    of period means, and the cluster mean.
    """
    lam1 = 1.0 - alpha1
    lam2 = 1.0 + (m - 1) * alpha1 - m * alpha2
    lam3 = 1.0 + (m - 1) * alpha1 + (periods - 1) * m * alpha2
    _require_psd((lam1, lam2, lam3), "nested exchangeable")
    return lam1, lam2, lam3


def eigenvalues_block(
    alpha0: float, alpha1: float, alpha2: float, m: int, periods: int
) -> tuple[float, float, float, float]:
    """Eigenvalues (tau1..tau4) of the block exchangeable structure.

    Multiplicities are (J-1)(m-1), J-1, m-1 and 1: within-period contrasts of
    individual deviations, period-mean contrasts, individual-mean contrasts,
    and the cluster mean.
    """
    tau1 = 1.0 - alpha1 - alpha0 + alpha2
    tau2 = 1.0 + (m - 1) * alpha1 - alpha0 - (m - 1) * alpha2
    tau3 = 1.0 - alpha1 + (periods - 1) * (alpha0 - alpha2)
    tau4 = 1.0 + (m - 1) * alpha1 + (periods - 1) * alpha0 + (periods - 1) * (m - 1) * alpha2
    _require_psd((tau1, tau2, tau3, tau4), "block exchangeable")
    return tau1, tau2, tau3, tau4


def nested_multiplicities(m: int, periods: int) -> tuple[int, int, int]:
    return periods * (m - 1), periods - 1, 1


def block_multiplicities(m: int, periods: int) -> tuple[int, int, int, int]:
    return (periods - 1) * (m - 1), periods - 1, m - 1, 1


def _require_psd(values, label: str) -> None:
    worst = min(values)
    if worst < -PSD_TOL:
        raise ValidationError(
            f"{label} parameters are not positive semi-definite (eigenvalue {worst:.3e})"
        )


# ---------------------------------------------------------------------------
# Validation report
# ---------------------------------------------------------------------------

ADVISORY_ICC_CEILING = 0.25  # outcome ICCs above this are unusual in practice


@dataclass(frozen=True)
class Violation:
    severity: Literal["hard", "advisory"]
    message: str

    @property
    def is_hard(self) -> bool:
        return self.severity == "hard"


def validate(
    corr: OutcomeCorrelation | CovariateCorrelation,
    m_range: tuple[int, int] | int,
    periods: int = 1,
) -> list[Violation]:
    """Scan the requested cluster-size range for PSD failures and oddities.

    Hard findings break every downstream formula; advisory findings flag
    parameter choices that are legal but rarely seen in practice.
    """
    if isinstance(m_range, int):
        m_lo = m_hi = m_range
    else:
        m_lo, m_hi = m_range
    if m_lo < 1 or m_hi < m_lo:
        raise ValidationError("m_range must be an increasing range of sizes >= 1", field="m_range")

    findings: list[Violation] = []
    is_outcome = isinstance(corr, OutcomeCorrelation)

    if is_outcome and corr.kind == "arm_specific_exchangeable":
        assert corr.arm_values is not None
        for label, value in zip(("control", "treatment"), corr.arm_values):
            sub = OutcomeCorrelation.exchangeable(value)
            for v in validate(sub, (m_lo, m_hi), periods):
                findings.append(Violation(v.severity, f"{label} arm: {v.message}"))
        return findings

    parts = outcome_kron_parts(corr, periods) if is_outcome else covariate_kron_parts(corr, periods)

    # PSD over the requested m range; eigenvalue branches are not jointly
    # monotone in m, so scan rather than check the extremes.
    for m in range(m_lo, m_hi + 1):
        values, _ = kron_spectrum(*parts, m)
        worst = values.min()
        if worst < -PSD_TOL:
            if is_outcome and corr.kind == "exchangeable":
                lo = -1.0 / (m - 1) if m > 1 else -1.0
                findings.append(Violation("hard", f"ICC out of [{lo:.6g}, 1] at m={m}"))
            else:
                findings.append(
                    Violation("hard", f"correlation matrix not PSD at m={m} (eigenvalue {worst:.3e})")
                )
            break

    if is_outcome:
        if corr.alpha1 > ADVISORY_ICC_CEILING:
            findings.append(
                Violation("advisory", f"outcome ICC alpha1={corr.alpha1} above {ADVISORY_ICC_CEILING}; unusually large")
            )
        if corr.kind == "block_exchangeable":
            if corr.alpha2 > corr.alpha0 + PSD_TOL or corr.alpha2 > corr.alpha1 + PSD_TOL:
                findings.append(
                    Violation("advisory", "alpha2 exceeds alpha0 or alpha1; lower-level ICCs usually dominate")
                )
    return findings
