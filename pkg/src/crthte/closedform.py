"""Closed-form variance expressions, registered against the engine.

Each supported design row has a scalar fast path for the normalized
interaction variance (n * Var of the treatment-covariate slope). The printed
literature forms name eigenvalue helpers without defining them and differ in
normalization, so every row here is implemented as a set of *candidates* —
the resolved derivation plus the plausible alternative readings — and a
registration pass freezes the unique candidate that agrees with the engine
over a pseudo-random grid of valid parameters. ``conformance_report()``
returns the frozen mappings and adjudication notes; rows with no surviving
candidate raise at registration rather than serve silently.

Derivation sketch (why the scalars below are exact): with the covariate mean
set to zero (allowed by centering invariance), the interaction information
decouples from the deterministic columns and every entry is a bilinear form
in the J x J kernel K = a*I + b*ones built from the outcome precision and the
covariate correlation. Profiling out the covariate main effects leaves

    n * Var(beta3) = sigma_yx^2 / (sigma_x^2 * [a*(qbar - U2) + b*(q2bar - qbar^2)])

where, over sequences s with weights w_s and treated-period counts q_s:
qbar = sum w_s q_s, q2bar = sum w_s q_s^2, and U2 = sum_j (sum_s w_s u_sj)^2.
Parallel designs reduce this to the familiar 1/(pi(1-pi) * trace) forms; the
stepped-wedge rows are intentionally *not* registered and are served by the
engine (their printed terms have no in-paper definition and no independent
oracle), though the same algebra backs the test suite's cross-checks.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import engine
from .correlation import (
    CovariateCorrelation,
    OutcomeCorrelation,
    eigenvalues_block,
    eigenvalues_nested,
)
from .designs import DesignSpec, TreatmentMatrix, ArmParams
from .errors import ValidationError

CONFORMANCE_RTOL = 1e-8
GRID_POINTS = 200
GRID_SEED = 20240901


# ---------------------------------------------------------------------------
# Scalar kernels
# ---------------------------------------------------------------------------


def _cross_sectional_kernel(
    alpha1: float, alpha2: float, rho1: float, rho2: float, m: int, periods: int
) -> tuple[float, float]:
    """(a, b) of K = a*I + b*ones for nested outcome x nested covariate."""
    lam1, lam2, lam3 = eigenvalues_nested(alpha1, alpha2, m, periods)
    zeta1 = 1.0 - rho1
    tp = (1.0 / lam2 - 1.0 / lam1) / m
    tpp = -alpha2 / (lam2 * lam3)
    a = m * (1.0 / lam1 + (tp + tpp) * (zeta1 + m * rho1) - m * tpp * rho2)
    b = m * m * tpp * rho2
    return a, b


def _cohort_kernel(
    alpha0: float, alpha1: float, alpha2: float, rho0: float, m: int, periods: int
) -> tuple[float, float]:
    """(a, b) for block-exchangeable outcome x time-invariant covariate."""
    tau1, tau2, tau3, tau4 = eigenvalues_block(alpha0, alpha1, alpha2, m, periods)
    sv = alpha0 - alpha2
    eta2 = 1.0 + (m - 1) * rho0
    sp_diag, sp_ones = 1.0 / tau1, -sv / (tau1 * tau3)
    tp_diag = (1.0 / tau2 - 1.0 / tau1) / m
    tp_ones = (sv / (tau1 * tau3) - (sv + m * alpha2) / (tau2 * tau4)) / m
    a = m * (sp_diag + eta2 * tp_diag)
    b = m * (sp_ones + eta2 * tp_ones)
    return a, b


def _design_functionals(
    rows: Sequence[Sequence[int]], weights: Sequence[float]
) -> tuple[float, float, float]:
    """(qbar, q2bar, U2) for the Schur-complement variance formula."""
    rows_arr = np.asarray(rows, dtype=float)
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    q = rows_arr.sum(axis=1)
    qbar = float(w @ q)
    q2bar = float(w @ q**2)
    ubar = w @ rows_arr
    return qbar, q2bar, float(ubar @ ubar)


def _schur_norm(a: float, b: float, qbar: float, q2bar: float, U2: float,
                sigma_yx: float, sigma_x: float) -> float:
    denom = a * (qbar - U2) + b * (q2bar - qbar**2)
    if denom <= 0:
        raise ValidationError("interaction is not identified by this design/parameter combination")
    return sigma_yx**2 / (sigma_x**2 * denom)


def interaction_variance_cross_sectional(
    rows: Sequence[Sequence[int]], weights: Sequence[float], m: int,
    alpha1: float, alpha2: float, rho1: float, rho2: float,
    sigma_yx: float, sigma_x: float,
) -> float:
    """General scalar n*Var(beta3) for any cross-sectional multi-period design."""
    periods = len(rows[0])
    a, b = _cross_sectional_kernel(alpha1, alpha2, rho1, rho2, m, periods)
    return _schur_norm(a, b, *_design_functionals(rows, weights), sigma_yx, sigma_x)


def interaction_variance_cohort(
    rows: Sequence[Sequence[int]], weights: Sequence[float], m: int,
    alpha0: float, alpha1: float, alpha2: float, rho0: float,
    sigma_yx: float, sigma_x: float,
) -> float:
    """General scalar n*Var(beta3) for closed-cohort multi-period designs."""
    periods = len(rows[0])
    a, b = _cohort_kernel(alpha0, alpha1, alpha2, rho0, m, periods)
    return _schur_norm(a, b, *_design_functionals(rows, weights), sigma_yx, sigma_x)


def _alternating_rows(periods: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    ab = tuple(1 - (j % 2) for j in range(periods))
    return ab, tuple(1 - v for v in ab)


# ---------------------------------------------------------------------------
# Design-row closed forms (public operations)
# ---------------------------------------------------------------------------


def ate_var_two_level(m: int, alpha1: float, pi: float, sigma_yx: float, sigma_x: float) -> float:
    """Normalized ATE variance, covariate-variance-scaled convention."""
    _check_common(m, pi, sigma_yx, sigma_x)
    return sigma_yx**2 * (1 + (m - 1) * alpha1) / (m * pi * (1 - pi) * sigma_x**2)


def hte_var_two_level(
    m: int, alpha1: float, rho1: float, pi: float, sigma_yx: float, sigma_x: float
) -> float:
    """Normalized interaction variance for a single-period two-level design.

    Engine-adjudicated form: sigma2_ATE x (1 - alpha1) / {1 + (m-2)alpha1 -
    (m-1)rho1*alpha1}; see the conformance table for the printed-variant
    finding.
    """
    _check_common(m, pi, sigma_yx, sigma_x)
    brace = 1 + (m - 2) * alpha1 - (m - 1) * rho1 * alpha1
    if brace <= 0:
        raise ValidationError("degenerate HTE variance denominator; check alpha1/rho1")
    return sigma_yx**2 * (1 - alpha1) * (1 + (m - 1) * alpha1) / (
        m * pi * (1 - pi) * sigma_x**2 * brace
    )


def hte_var_three_level(
    m: int, n_sub: int,
    alphas: tuple[float, float], rhos: tuple[float, float],
    pi: float, sigma_yx: float, sigma_x: float,
    randomization_level: str = "cluster",
) -> float:
    """Normalized interaction variance for three-level parallel designs.

    ``alphas``/``rhos`` are (within-subcluster, between-subcluster) ICCs.
    Normalization is per cluster; the printed rows normalize per individual
    (documented in the conformance table).
    """
    _check_common(m, pi, sigma_yx, sigma_x)
    if n_sub < 2:
        raise ValidationError("three-level designs need n_sub >= 2", field="n_sub")
    a1, a2 = alphas
    r1, r2 = rhos
    if randomization_level == "cluster":
        lam = eigenvalues_nested(a1, a2, m, n_sub)
        zet = eigenvalues_nested(r1, r2, m, n_sub)
        trace = n_sub * (m - 1) * zet[0] / lam[0] + (n_sub - 1) * zet[1] / lam[1] + zet[2] / lam[2]
        return sigma_yx**2 / (pi * (1 - pi) * sigma_x**2 * trace)
    if randomization_level != "subcluster":
        raise ValidationError(f"unknown randomization_level {randomization_level!r}")
    q = pi * n_sub
    if not 0 < q < n_sub:
        raise ValidationError("subcluster allocation leaves an empty arm", field="pi")
    a, _ = _cross_sectional_kernel(a1, a2, r1, r2, m, n_sub)
    return sigma_yx**2 * n_sub / (sigma_x**2 * a * q * (n_sub - q))


def hte_var_crxo_cross_sectional(
    m: int, periods: int,
    alphas: tuple[float, float], rhos: tuple[float, float],
    pi: float, sigma_yx: float, sigma_x: float,
) -> float:
    """Normalized interaction variance for the alternating multi-period CRXO.

    Even-period balanced designs reduce to the eigen-ratio display
    sigma^2/(pi(1-pi)sx^2) / {J(m-1)z1/l1 + ((J-2)z2 + z3)/l2 + z2/l3} with the
    crossed z3/l2 + z2/l3 pairing; the general (odd-J, any-pi) value comes from
    the same Schur algebra.
    """
    _check_common(m, pi, sigma_yx, sigma_x)
    rows = _alternating_rows(periods)
    a1, a2 = alphas
    r1, r2 = rhos
    return interaction_variance_cross_sectional(
        rows, (pi, 1 - pi), m, a1, a2, r1, r2, sigma_yx, sigma_x
    )


def hte_var_crxo_cohort(
    m: int, periods: int,
    alphas: tuple[float, float, float], rho0: float,
    pi: float, sigma_yx: float, sigma_x: float,
) -> float:
    """Normalized interaction variance for the closed-cohort alternating CRXO.

    Balanced even-period designs reduce to
    sigma^2 / (pi(1-pi) sx^2 J [(m-1)eta1/tau1 + eta2/tau2]) with
    eta1 = 1-rho0, eta2 = 1+(m-1)rho0; the eta2 ratio pairs with the
    multiplicity-(J-1) block eigenvalue (tau2 here).
    """
    _check_common(m, pi, sigma_yx, sigma_x)
    a0, a1, a2 = alphas
    rows = _alternating_rows(periods)
    return interaction_variance_cohort(rows, (pi, 1 - pi), m, a0, a1, a2, rho0, sigma_yx, sigma_x)


def hte_var_irgt(
    arm_params: ArmParams, pi: float, sigma_x: float, covariate_level: str = "individual"
) -> float:
    """Two-arm IRGT interaction variance per total randomized groups."""
    rho = 1.0 if covariate_level == "cluster" else 0.0

    def term(sigma, m, alpha, share):
        brace = 1 + (m - 2) * alpha - (m - 1) * rho * alpha
        return sigma**2 * (1 - alpha) * (1 + (m - 1) * alpha) / (share * m * sigma_x**2 * brace)

    ap = arm_params
    return term(ap.sigma_treatment, ap.m_treatment, ap.alpha1_treatment, pi) + term(
        ap.sigma_control, ap.m_control, ap.alpha1_control, 1 - pi
    )


def design_effect_hte(sigma2_hte_norm: float, sigma2_ate_norm: float) -> float:
    """Variance inflation of the HTE estimator relative to the ATE estimator."""
    if sigma2_hte_norm <= 0 or sigma2_ate_norm <= 0:
        raise ValidationError("design effect needs positive variances")
    return sigma2_hte_norm / sigma2_ate_norm


def _check_common(m: int, pi: float, sigma_yx: float, sigma_x: float) -> None:
    if m < 1:
        raise ValidationError("m must be >= 1", field="m")
    if not 0 < pi < 1:
        raise ValidationError("pi must lie in (0, 1)", field="pi")
    if sigma_yx <= 0 or sigma_x <= 0:
        raise ValidationError("standard deviations must be positive")


# ---------------------------------------------------------------------------
# Conformance registration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConformanceRow:
    formula_id: str
    resolved: str
    n_points: int
    max_rel_err: float
    rejected: tuple[tuple[str, float], ...]  # (candidate, first failing rel err)
    note: str

    @property
    def conformant(self) -> bool:
        return self.max_rel_err < CONFORMANCE_RTOL


@dataclass
class _Row:
    formula_id: str
    candidates: dict[str, Callable[[dict], float]]
    sample: Callable[[np.random.Generator], dict]
    reference: Callable[[dict], float]
    note: str = ""


def _psd_nested(a1, a2, m, J):
    try:
        eigenvalues_nested(a1, a2, m, J)
        return True
    except ValidationError:
        return False


def _psd_block(a0, a1, a2, m, J):
    try:
        eigenvalues_block(a0, a1, a2, m, J)
        return True
    except ValidationError:
        return False


def _engine_norm(matrix: TreatmentMatrix, weights, m, outcome, covariate, spec=None, effect="auto"):
    report = engine.variance_report(matrix, m, outcome, covariate, effect, spec=spec, weights=weights)
    assert report.sigma2_hte_norm is not None
    return report.sigma2_hte_norm


def _sample_two_level(rng: np.random.Generator) -> dict:
    m = int(rng.integers(1, 60))
    while True:
        a1 = float(rng.uniform(0.0, 0.25))
        r1 = float(rng.uniform(0.0, 0.6))
        if 1 + (m - 2) * a1 - (m - 1) * r1 * a1 > 1e-3:
            break
    return {
        "m": m,
        "alpha1": a1,
        "rho1": r1,
        "pi": float(rng.uniform(0.1, 0.9)),
        "sigma_yx": float(rng.uniform(0.5, 2.0)),
        "sigma_x": float(rng.uniform(0.3, 2.0)),
    }


def _ref_two_level(p: dict) -> float:
    matrix = TreatmentMatrix(((1,), (0,)), (1, 1))
    outcome = engine.OutcomeModel(p["sigma_yx"], OutcomeCorrelation.exchangeable(p["alpha1"]))
    covariate = engine.CovariateModel.continuous(p["sigma_x"], CovariateCorrelation.exchangeable(p["rho1"]))
    return _engine_norm(matrix, (p["pi"], 1 - p["pi"]), p["m"], outcome, covariate)


def _sample_three_level(rng: np.random.Generator, level: str) -> dict:
    while True:
        n_sub = int(rng.integers(2, 9))
        m = int(rng.integers(2, 30))
        a1 = float(rng.uniform(0.005, 0.25))
        a2 = float(rng.uniform(0.0, 1.0)) * a1
        r1 = float(rng.uniform(0.005, 0.4))
        r2 = float(rng.uniform(0.0, 1.0)) * r1
        if not (_psd_nested(a1, a2, m, n_sub) and _psd_nested(r1, r2, m, n_sub)):
            continue
        if level == "subcluster":
            q = int(rng.integers(1, n_sub))
            pi = q / n_sub
        else:
            pi = float(rng.uniform(0.1, 0.9))
        return {
            "m": m, "n_sub": n_sub, "alphas": (a1, a2), "rhos": (r1, r2), "pi": pi,
            "sigma_yx": float(rng.uniform(0.5, 2.0)), "sigma_x": float(rng.uniform(0.3, 2.0)),
        }


def _ref_three_level(p: dict, level: str) -> float:
    spec = DesignSpec(
        family="parallel_three_level", n_sub=p["n_sub"], pi=p["pi"],
        randomization_level=level, n_total=2,
    )
    matrix = TreatmentMatrix(((1,), (0,)), (1, 1))
    weights = (p["pi"], 1 - p["pi"]) if level == "cluster" else (p["pi"], 1 - p["pi"])
    a1, a2 = p["alphas"]
    r1, r2 = p["rhos"]
    outcome = engine.OutcomeModel(p["sigma_yx"], OutcomeCorrelation.nested(a1, a2))
    covariate = engine.CovariateModel.continuous(p["sigma_x"], CovariateCorrelation.nested(r1, r2))
    return _engine_norm(matrix, weights, p["m"], outcome, covariate, spec=spec)


def _sample_crxo_cs(rng: np.random.Generator) -> dict:
    while True:
        J = int(rng.integers(2, 7))
        m = int(rng.integers(2, 60))
        a1 = float(rng.uniform(0.005, 0.25))
        a2 = float(rng.uniform(0.0, 1.0)) * a1
        r1 = float(rng.uniform(0.005, 0.4))
        r2 = float(rng.uniform(0.0, 1.0)) * r1
        if _psd_nested(a1, a2, m, J) and _psd_nested(r1, r2, m, J):
            return {
                "m": m, "periods": J, "alphas": (a1, a2), "rhos": (r1, r2),
                "pi": float(rng.uniform(0.1, 0.9)),
                "sigma_yx": float(rng.uniform(0.5, 2.0)), "sigma_x": float(rng.uniform(0.3, 2.0)),
            }


def _ref_crxo_cs(p: dict) -> float:
    rows = _alternating_rows(p["periods"])
    matrix = TreatmentMatrix(rows, (1, 1))
    a1, a2 = p["alphas"]
    r1, r2 = p["rhos"]
    outcome = engine.OutcomeModel(p["sigma_yx"], OutcomeCorrelation.nested(a1, a2))
    covariate = engine.CovariateModel.continuous(p["sigma_x"], CovariateCorrelation.nested(r1, r2))
    return _engine_norm(matrix, (p["pi"], 1 - p["pi"]), p["m"], outcome, covariate)


def _sample_crxo_cohort(rng: np.random.Generator) -> dict:
    while True:
        J = int(rng.integers(2, 7))
        m = int(rng.integers(2, 40))
        a1 = float(rng.uniform(0.005, 0.2))
        a0 = float(rng.uniform(0.1, 0.8))
        a2 = float(rng.uniform(0.0, 1.0)) * min(a0, a1)
        r0 = float(rng.uniform(0.01, 0.6))
        if _psd_block(a0, a1, a2, m, J):
            return {
                "m": m, "periods": J, "alphas": (a0, a1, a2), "rho0": r0,
                "pi": float(rng.uniform(0.1, 0.9)),
                "sigma_yx": float(rng.uniform(0.5, 2.0)), "sigma_x": float(rng.uniform(0.3, 2.0)),
            }


def _ref_crxo_cohort(p: dict) -> float:
    rows = _alternating_rows(p["periods"])
    matrix = TreatmentMatrix(rows, (1, 1))
    a0, a1, a2 = p["alphas"]
    outcome = engine.OutcomeModel(p["sigma_yx"], OutcomeCorrelation.block(a0, a1, a2))
    covariate = engine.CovariateModel.continuous(
        p["sigma_x"], CovariateCorrelation.cohort_time_invariant(p["rho0"])
    )
    return _engine_norm(matrix, (p["pi"], 1 - p["pi"]), p["m"], outcome, covariate)


def _sample_irgt(rng: np.random.Generator, level: str) -> dict:
    return {
        "arm_params": ArmParams(
            m_treatment=int(rng.integers(1, 30)),
            m_control=int(rng.integers(1, 30)),
            alpha1_treatment=float(rng.uniform(0.0, 0.2)),
            alpha1_control=float(rng.uniform(0.0, 0.2)),
            sigma_treatment=float(rng.uniform(0.5, 2.0)),
            sigma_control=float(rng.uniform(0.5, 2.0)),
        ),
        "pi": float(rng.uniform(0.1, 0.9)),
        "sigma_x": float(rng.uniform(0.3, 2.0)),
        "covariate_level": level,
    }


def _ref_irgt(p: dict) -> float:
    ap: ArmParams = p["arm_params"]
    spec = DesignSpec(family="irgt", arm_params=ap, pi=p["pi"], n_total=2)
    matrix = TreatmentMatrix(((1,), (0,)), (1, 1))
    if p["covariate_level"] == "cluster":
        covariate = engine.CovariateModel(
            level="cluster", dtype="continuous", mu_x=0.0, sigma_x=p["sigma_x"],
            correlation=CovariateCorrelation.cluster_constant(),
        )
    else:
        covariate = engine.CovariateModel.continuous(p["sigma_x"], CovariateCorrelation.independent())
    outcome = engine.OutcomeModel(1.0, OutcomeCorrelation.by_arm(ap.alpha1_control, ap.alpha1_treatment))
    return _engine_norm(matrix, (p["pi"], 1 - p["pi"]), 1, outcome, covariate, spec=spec)


def _two_level_m_minus_2_variant(p: dict) -> float:
    brace = 1 + (p["m"] - 2) * p["alpha1"] - (p["m"] - 1) * p["rho1"] * p["alpha1"]
    return (
        p["sigma_yx"] ** 2 * (1 - p["alpha1"]) * (1 + (p["m"] - 2) * p["alpha1"])
        / (p["m"] * p["pi"] * (1 - p["pi"]) * p["sigma_x"] ** 2 * brace)
    )


def _three_level_printed_per_cluster(p: dict) -> float:
    # printed row taken at face value as per-cluster (off by n_sub * m)
    return hte_var_three_level(
        p["m"], p["n_sub"], p["alphas"], p["rhos"], p["pi"], p["sigma_yx"], p["sigma_x"], "cluster"
    ) * (p["n_sub"] * p["m"])


def _subcluster_printed(p: dict) -> float:
    # printed subcluster row (rho2- and lambda3-free), per-individual reading
    a1, a2 = p["alphas"]
    r1, _ = p["rhos"]
    m, n_sub = p["m"], p["n_sub"]
    lam1, lam2, _ = eigenvalues_nested(a1, a2, m, n_sub)
    denom = m / lam1 - (1 + (m - 1) * r1) * (1 / lam1 - 1 / lam2)
    if denom <= 0:
        return math.inf
    per_individual = p["sigma_yx"] ** 2 * m / (p["pi"] * (1 - p["pi"]) * p["sigma_x"] ** 2 * denom)
    return per_individual / (n_sub * m)


def _crxo_cs_uncrossed(p: dict) -> float:
    # alternative reading: z2 stays with l2, z3 with l3
    a1, a2 = p["alphas"]
    r1, r2 = p["rhos"]
    m, J = p["m"], p["periods"]
    lam = eigenvalues_nested(a1, a2, m, J)
    zet = eigenvalues_nested(r1, r2, m, J)
    denom = J * (m - 1) * zet[0] / lam[0] + ((J - 2) * zet[1] + zet[1]) / lam[1] + zet[2] / lam[2]
    return p["sigma_yx"] ** 2 / (p["pi"] * (1 - p["pi"]) * p["sigma_x"] ** 2 * denom)


def _crxo_cs_printed(p: dict) -> float:
    a1, a2 = p["alphas"]
    r1, r2 = p["rhos"]
    m, J = p["m"], p["periods"]
    lam = eigenvalues_nested(a1, a2, m, J)
    zet = eigenvalues_nested(r1, r2, m, J)
    denom = 2 * (J - 1) * zet[0] / lam[0] + zet[2] / lam[1] + zet[1] / lam[2]
    return p["sigma_yx"] ** 2 / (p["pi"] * (1 - p["pi"]) * p["sigma_x"] ** 2 * denom)


def _crxo_cohort_tau3(p: dict) -> float:
    # alternative index reading: eta2 paired with the multiplicity-(m-1) eigenvalue
    a0, a1, a2 = p["alphas"]
    m, J = p["m"], p["periods"]
    tau = eigenvalues_block(a0, a1, a2, m, J)
    eta1, eta2 = 1 - p["rho0"], 1 + (m - 1) * p["rho0"]
    denom = J * p["pi"] * (1 - p["pi"]) * ((m - 1) * eta1 / tau[0] + eta2 / tau[2])
    if denom <= 0:
        return math.inf
    return p["sigma_yx"] ** 2 / (p["sigma_x"] ** 2 * denom)


def _rows() -> list[_Row]:
    return [
        _Row(
            formula_id="parallel_two_level",
            candidates={
                "(1-a1){1+(m-1)a1} numerator (engine-exact)": lambda p: hte_var_two_level(
                    p["m"], p["alpha1"], p["rho1"], p["pi"], p["sigma_yx"], p["sigma_x"]
                ),
                "(1-a1){1+(m-2)a1} numerator (printed variant)": _two_level_m_minus_2_variant,
            },
            sample=_sample_two_level,
            reference=_ref_two_level,
            note=(
                "Two numerator variants circulate in print for this row: {1+(m-1)a1} and "
                "{1+(m-2)a1}. The engine adjudicates the (m-1) form: it is exact, reproduces "
                "the published benchmark cluster counts (35/48/39/55), and gives design "
                "effect 1 at m=1; the (m-2) variant fails the grid."
            ),
        ),
        _Row(
            formula_id="parallel_three_level_cluster",
            candidates={
                "per-cluster 1/(pi(1-pi)T0), T0 = ns(m-1)z1/l1+(ns-1)z2/l2+z3/l3": lambda p: hte_var_three_level(
                    p["m"], p["n_sub"], p["alphas"], p["rhos"], p["pi"], p["sigma_yx"], p["sigma_x"], "cluster"
                ),
                "printed row read as per-cluster": _three_level_printed_per_cluster,
            },
            sample=lambda rng: _sample_three_level(rng, "cluster"),
            reference=lambda p: _ref_three_level(p, "cluster"),
            note=(
                "The printed row's ns*m numerator is a per-individual (N*Var) normalization; "
                "dividing by ns*m gives the per-cluster form registered here. Eigenvalue-index "
                "mapping: l1 = within-subcluster contrast, l2 = subcluster-mean contrast, "
                "l3 = cluster mean (same for the covariate z's)."
            ),
        ),
        _Row(
            formula_id="parallel_three_level_subcluster",
            candidates={
                "ns/(sx2*a*q*(ns-q)) from the Schur kernel": lambda p: hte_var_three_level(
                    p["m"], p["n_sub"], p["alphas"], p["rhos"], p["pi"], p["sigma_yx"], p["sigma_x"], "subcluster"
                ),
                "printed subcluster row (rho2-free), per-individual reading": _subcluster_printed,
            },
            sample=lambda rng: _sample_three_level(rng, "subcluster"),
            reference=lambda p: _ref_three_level(p, "subcluster"),
            note=(
                "The printed subcluster expression carries no between-subcluster covariate ICC "
                "and no l3 term, so it cannot match for rho2 > 0; the registered kernel form "
                "reduces to it when the cluster-level components vanish."
            ),
        ),
        _Row(
            formula_id="crxo_cross_sectional",
            candidates={
                "crossed pairing {J(m-1)z1/l1 + ((J-2)z2+z3)/l2 + z2/l3}": lambda p: hte_var_crxo_cross_sectional(
                    p["m"], p["periods"], p["alphas"], p["rhos"], p["pi"], p["sigma_yx"], p["sigma_x"]
                ),
                "uncrossed pairing {J(m-1)z1/l1 + (J-1)z2/l2 + z3/l3}": _crxo_cs_uncrossed,
                "printed literal {2(J-1)z1/l1 + z3/l2 + z2/l3}": _crxo_cs_printed,
            },
            sample=_sample_crxo_cs,
            reference=_ref_crxo_cs,
            note=(
                "The crossed z3/l2 + z2/l3 pairing in the printed row is confirmed intentional "
                "(it falls out of the derivation); its leading coefficient must be J(m-1), and a "
                "(J-2)z2/l2 term is missing from the print. Odd J / unbalanced pi use the same "
                "Schur algebra with the alternating-pattern functionals."
            ),
        ),
        _Row(
            formula_id="crxo_cohort",
            candidates={
                "eta2 paired with multiplicity-(J-1) eigenvalue (tau2)": lambda p: hte_var_crxo_cohort(
                    p["m"], p["periods"], p["alphas"], p["rho0"], p["pi"], p["sigma_yx"], p["sigma_x"]
                ),
                "eta2 paired with multiplicity-(m-1) eigenvalue (tau3)": _crxo_cohort_tau3,
            },
            sample=_sample_crxo_cohort,
            reference=_ref_crxo_cohort,
            note=(
                "Balanced even-J form sigma^2/(pi(1-pi) sx^2 J [(m-1)eta1/tau1 + eta2/tau2]): "
                "the printed eta2/tau3 is an index-labeling difference; the conformant slot is "
                "the period-mean-contrast eigenvalue (multiplicity J-1), and the printed 2(J-1) "
                "coefficient reads J(m-1) in the derivation."
            ),
        ),
        _Row(
            formula_id="irgt_individual_covariate",
            candidates={
                "per-arm (1-a)(1+(m-1)a)/{1+(m-2)a} weighted by pi/(1-pi)": lambda p: hte_var_irgt(
                    p["arm_params"], p["pi"], p["sigma_x"], "individual"
                ),
            },
            sample=lambda rng: _sample_irgt(rng, "individual"),
            reference=_ref_irgt,
            note="Printed IRGT row confirmed exactly; normalization is per total randomized groups.",
        ),
        _Row(
            formula_id="irgt_cluster_covariate",
            candidates={
                "per-arm {1+(m-1)a}/m weighted by pi/(1-pi)": lambda p: hte_var_irgt(
                    p["arm_params"], p["pi"], p["sigma_x"], "cluster"
                ),
            },
            sample=lambda rng: _sample_irgt(rng, "cluster"),
            reference=_ref_irgt,
            note="Printed group-level-covariate row confirmed exactly (rho = 1 specialization).",
        ),
    ]


def run_conformance(n_points: int = GRID_POINTS, seed: int = GRID_SEED) -> list[ConformanceRow]:
    """Evaluate all candidates per row; freeze the unique conformant one.

    Raises ValidationError if a row has no conformant candidate (registration
    aborts loudly rather than serving an unvalidated formula) or several (ambiguous mapping).
    """
    results = []
    for row in _rows():
        rng = np.random.default_rng([seed, zlib.crc32(row.formula_id.encode())])
        errs: dict[str, float] = {name: 0.0 for name in row.candidates}
        alive = set(row.candidates)
        first_fail: dict[str, float] = {}
        for _ in range(n_points):
            params = row.sample(rng)
            ref = row.reference(params)
            for name, fn in row.candidates.items():
                try:
                    got = fn(params)
                    rel = abs(got - ref) / abs(ref)
                except (ValidationError, ZeroDivisionError, OverflowError):
                    rel = math.inf
                errs[name] = max(errs[name], rel)
                if name in alive and rel >= CONFORMANCE_RTOL:
                    alive.discard(name)
                    first_fail[name] = rel
        if not alive:
            raise ValidationError(
                f"closed-form registration failed for {row.formula_id}: no candidate matches "
                f"the engine (best max rel err {min(errs.values()):.2e})"
            )
        if len(alive) > 1:
            raise ValidationError(
                f"closed-form registration ambiguous for {row.formula_id}: {sorted(alive)}"
            )
        resolved = next(iter(alive))
        rejected = tuple(sorted((name, first_fail[name]) for name in row.candidates if name != resolved))
        results.append(
            ConformanceRow(
                formula_id=row.formula_id,
                resolved=resolved,
                n_points=n_points,
                max_rel_err=errs[resolved],
                rejected=rejected,
                note=row.note,
            )
        )
    return results


_CACHED: list[ConformanceRow] | None = None


def conformance_report(refresh: bool = False) -> list[ConformanceRow]:
    global _CACHED
    if _CACHED is None or refresh:
        _CACHED = run_conformance()
    return _CACHED


GENERAL_NOTES = (
    "Covariate-main-effect structure: the engine supports pooled and period-specific covariate "
    "terms; the registered default is period-specific for every multi-period design and pooled "
    "for single-period/three-level layouts. Adjudication: the stepped-wedge benchmark "
    "(m=353) and the custom 2x2 closed-cohort benchmark require period-specific terms, while "
    "parallel and balanced-crossover designs are provably identical under both variants.",
    "Stepped-wedge rows are not transcribed: their printed terms (tr(Omega_W), tau_W, theta^CS, "
    "theta^CC) have no in-paper definition, so stepped-wedge variances are served exclusively "
    "by the engine.",
    "ATE variance convention: sigma2_ate_norm is covariate-variance-scaled (n*Var(ATE)/sx^2), "
    "making the HTE/ATE design effect the dimensionless braced factor with value 1 at m = 1.",
)


def render_conformance_markdown(rows: Sequence[ConformanceRow] | None = None) -> str:
    """Markdown artifact recording resolved mappings and adjudications."""
    rows = conformance_report() if rows is None else rows
    lines = [
        "# Closed-form conformance table",
        "",
        "Each registered closed form was evaluated against the expected-information engine on a",
        f"pseudo-random grid of {rows[0].n_points if rows else GRID_POINTS} valid parameter points"
        f" (seed {GRID_SEED}); registration keeps the unique candidate with relative error below"
        f" {CONFORMANCE_RTOL:g} everywhere.",
        "",
        "| formula | resolved candidate | max rel. err | rejected candidates |",
        "|---|---|---|---|",
    ]
    for r in rows:
        rej = "; ".join(f"{name} (err {err:.1e})" for name, err in r.rejected) or "-"
        lines.append(f"| {r.formula_id} | {r.resolved} | {r.max_rel_err:.2e} | {rej} |")
    lines.append("")
    lines.append("## Findings")
    lines.append("")
    for r in rows:
        lines.append(f"- **{r.formula_id}**: {r.note}")
    for note in GENERAL_NOTES:
        lines.append(f"- {note}")
    lines.append("")
    return "\n".join(lines)
