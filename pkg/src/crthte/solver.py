"""Power computation and design solvers.

The solver works on per-cluster normalized variances: for a design whose
sequences carry exact proportions w_s (pi and 1-pi for two-arm families, 1/S
for a stepped wedge, reduced CSV counts for custom uploads), sigma2* is the
inverse-information interaction variance at total weight one, and

    power = Phi( |delta| / sqrt(sigma2*/n) - z_{1-alpha/2} )

in normal mode, or the central-t analogue with df = n - 2 in small-sample
mode. Exact proportional weights (rather than a rounded integer allocation)
match the closed-form convention; realized integer splits only matter to the
Monte Carlo harness.

Solvers: any one of {power, n, m, delta} from the others, plus grid sweeps
with optional ICC sensitivity bands (three labelled series: min/assumed/max).
Integer targets are minimal: the returned value meets the requested power and
the next-smaller feasible value does not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal, Sequence

from scipy.stats import norm, t as t_dist

from . import engine
from .correlation import CovariateCorrelation, OutcomeCorrelation
from .designs import DesignSpec, TreatmentMatrix, generate
from .engine import CovariateModel, OutcomeModel, VarianceReport
from .errors import EstimabilityError, InfeasibleError, ValidationError

N_CAP = 10**6
M_CAP = 10**7

Target = Literal["power", "n", "m", "delta"]
DfMode = Literal["normal", "t_n_minus_2"]


@dataclass(frozen=True)
class IccBand:
    """(min, assumed, max) sensitivity triples; None leaves a parameter fixed."""

    outcome_icc: tuple[float, float, float] | None = None
    outcome_cac: tuple[float, float, float] | None = None
    covariate_icc: tuple[float, float, float] | None = None
    covariate_cac: tuple[float, float, float] | None = None

    def any(self) -> bool:
        return any(
            v is not None
            for v in (self.outcome_icc, self.outcome_cac, self.covariate_icc, self.covariate_cac)
        )


@dataclass(frozen=True)
class SolveRequest:
    design: DesignSpec
    outcome: OutcomeModel
    covariate: CovariateModel
    target: Target
    delta: float | None = None
    power: float | None = None
    n: int | None = None
    m: int | None = None
    alpha_level: float = 0.05
    df_mode: DfMode = "normal"
    matrix: TreatmentMatrix | None = None
    covariate_effect: engine.CovariateEffect = "auto"
    icc_band: IccBand | None = None
    delta_direction: int = 1

    def __post_init__(self):
        if self.target not in ("power", "n", "m", "delta"):
            raise ValidationError(f"unknown solve target {self.target!r}", field="target")
        if not 0.0 < self.alpha_level < 1.0:
            raise ValidationError("alpha_level must lie in (0, 1)", field="alpha_level")
        if self.df_mode not in ("normal", "t_n_minus_2"):
            raise ValidationError(f"unknown df_mode {self.df_mode!r}", field="df_mode")
        if self.design.family == "custom" and self.matrix is None:
            raise ValidationError("custom designs require a treatment matrix", field="matrix")
        needed = {"power", "n", "m", "delta"} - {self.target}
        if not self._needs_m():
            needed.discard("m")
        for name in needed:
            if getattr(self, name) is None:
                raise ValidationError(f"{name} is required when solving for {self.target}", field=name)
        # delta = 0 is meaningful for a power query (it returns the test size),
        # but no finite n or m can reach power > alpha at delta = 0
        if self.target in ("n", "m") and (self.delta is None or self.delta == 0):
            raise ValidationError("delta must be nonzero when solving for sample size", field="delta")
        if self.target != "power" and self.power is not None and not 0.0 < self.power < 1.0:
            raise ValidationError("power must lie in (0, 1)", field="power")
        if self.n is not None and self.n < 1:
            raise ValidationError("n must be >= 1", field="n")
        if self.m is not None and self.m < 1:
            raise ValidationError("m must be >= 1", field="m")
        if self.delta_direction not in (1, -1):
            raise ValidationError("delta_direction must be +1 or -1", field="delta_direction")

    def _needs_m(self) -> bool:
        return self.design.family not in ("parallel_two_level_by_arm", "irgt")


@dataclass(frozen=True)
class Series:
    label: str
    x_name: str
    y_name: str
    points: tuple[tuple[float, float], ...]

    def to_payload(self) -> dict:
        return {
            "label": self.label,
            "x_name": self.x_name,
            "y_name": self.y_name,
            "points": [[x, y] for x, y in self.points],
        }


@dataclass(frozen=True)
class SolveResult:
    target: Target
    solved_value: float
    achieved_power: float
    n: float | None
    m: float | None
    delta: float | None
    alpha_level: float
    df_mode: DfMode
    variance: VarianceReport
    series: tuple[Series, ...] | None = None

    def to_payload(self) -> dict:
        payload = {
            "target": self.target,
            "solved_value": self.solved_value,
            "achieved_power": self.achieved_power,
            "n": self.n,
            "m": self.m,
            "delta": self.delta,
            "alpha_level": self.alpha_level,
            "df_mode": self.df_mode,
            "variance": self.variance.to_payload(),
        }
        if self.series is not None:
            payload["series"] = [s.to_payload() for s in self.series]
        return payload


# ---------------------------------------------------------------------------
# Normalized design variance
# ---------------------------------------------------------------------------


def proportional_design(request: SolveRequest) -> tuple[TreatmentMatrix, tuple[float, ...]]:
    """Unit-count matrix plus exact sequence proportions for the request."""
    design = request.design
    if design.family == "custom":
        assert request.matrix is not None
        base = request.matrix.reduced()
        return base, base.weights()
    if design.family == "stepped_wedge":
        S = design.periods - 1
        proto = replace(design, n_total=S)
        matrix = generate(proto)
        return matrix, (1.0 / S,) * S
    if design.family == "parallel_three_level" and design.randomization_level == "subcluster":
        matrix = TreatmentMatrix(((1,), (0,)), (1, 1))
        return matrix, (design.pi, 1.0 - design.pi)
    J = design.periods
    if design.family == "multi_period_parallel":
        rows: tuple = ((1,) * J, (0,) * J)
    elif design.family == "crxo_two_period":
        rows = ((1, 0), (0, 1))
    elif design.family == "crxo_multi_period":
        ab = tuple(1 - (j % 2) for j in range(J))
        rows = (ab, tuple(1 - v for v in ab))
    else:  # single-period two-arm families incl. three-level cluster-randomized
        rows = ((1,), (0,))
    matrix = TreatmentMatrix(rows, (1, 1))
    return matrix, (design.pi, 1.0 - design.pi)


def normalized_variance(request: SolveRequest, m: int | None = None) -> VarianceReport:
    """VarianceReport at total weight one: sigma2_hte_norm is the n-formula sigma2*."""
    matrix, weights = proportional_design(request)
    m_eff = m if m is not None else (request.m or 1)
    spec = request.design if request.design.family in (
        "parallel_three_level", "parallel_two_level_by_arm", "irgt",
    ) else None
    report = engine.variance_report(
        matrix, m_eff, request.outcome, request.covariate, request.covariate_effect,
        spec=spec, weights=weights,
    )
    if not report.estimable_hte or report.sigma2_hte_norm is None:
        raise EstimabilityError(
            "design cannot identify requested effect: the treatment-covariate "
            "interaction is confounded in this design",
            coordinate="interaction",
        )
    return report


# ---------------------------------------------------------------------------
# Power arithmetic
# ---------------------------------------------------------------------------


def power_from_variance(
    delta: float, var_total: float, alpha_level: float = 0.05,
    df_mode: DfMode = "normal", n: float | None = None,
) -> float:
    """Two-sided Wald power given the estimator variance at the analysis size.

    t mode uses the central-t approximation with the critical value shifted
    by the effect, df = n - 2.
    """
    if var_total <= 0:
        raise ValidationError("var_total must be > 0", field="var_total")
    shift = abs(delta) / math.sqrt(var_total)
    if df_mode == "normal":
        return float(norm.cdf(shift - norm.ppf(1 - alpha_level / 2)))
    if n is None:
        raise ValidationError("t mode needs the number of clusters", field="n")
    df = n - 2
    if df <= 0:
        raise ValidationError("t mode needs n >= 3 clusters (df = n - 2)", field="n")
    crit = t_dist.ppf(1 - alpha_level / 2, df)
    return float(t_dist.sf(crit - shift, df))


def _power_at(request: SolveRequest, n: float, m: int | None, sigma2_norm: float) -> float:
    assert request.delta is not None
    return power_from_variance(request.delta, sigma2_norm / n, request.alpha_level, request.df_mode, n)


def _quantile_sum(request: SolveRequest, power: float, df: float | None = None) -> float:
    if request.df_mode == "normal":
        return float(norm.ppf(1 - request.alpha_level / 2) + norm.ppf(power))
    assert df is not None and df > 0
    return float(t_dist.ppf(1 - request.alpha_level / 2, df) + t_dist.ppf(power, df))


def _n_step(request: SolveRequest) -> int:
    if request.design.family == "stepped_wedge":
        return request.design.periods - 1
    return 1


def _n_floor(request: SolveRequest) -> int:
    if request.design.family == "stepped_wedge":
        return request.design.periods - 1
    if request.matrix is not None and request.design.family == "custom":
        return 1 if request.matrix.n_sequences == 1 else 2
    return 2


def _round_n_feasible(request: SolveRequest, n_real: float) -> int:
    step = _n_step(request)
    n = max(math.ceil(n_real - 1e-9), _n_floor(request))
    if n % step:
        n += step - n % step
    return n


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------


def solve(request: SolveRequest) -> SolveResult:
    dispatch = {"power": solve_power, "n": solve_n, "m": solve_m, "delta": solve_delta}
    return dispatch[request.target](request)


def _result(request: SolveRequest, *, solved, power, n, m, delta, report) -> SolveResult:
    return SolveResult(
        target=request.target,
        solved_value=solved,
        achieved_power=power,
        n=n,
        m=m,
        delta=delta,
        alpha_level=request.alpha_level,
        df_mode=request.df_mode,
        variance=report.at_n(n) if n else report,
        series=None,
    )


def solve_power(request: SolveRequest) -> SolveResult:
    assert request.n is not None
    report = normalized_variance(request)
    power = _power_at(request, request.n, request.m, report.sigma2_hte_norm)
    return _result(request, solved=power, power=power, n=request.n, m=request.m,
                   delta=request.delta, report=report)


def solve_n(request: SolveRequest) -> SolveResult:
    assert request.power is not None and request.delta is not None
    report = normalized_variance(request)
    s2 = report.sigma2_hte_norm
    if request.df_mode == "normal":
        n_real = _quantile_sum(request, request.power) ** 2 * s2 / request.delta**2
        n = _round_n_feasible(request, n_real)
    else:
        # monotone integer search: power increases in n through both the
        # variance and the degrees of freedom
        step = _n_step(request)
        n = max(_round_n_feasible(request, 3), 3)
        while n <= N_CAP and _power_at(request, n, request.m, s2) < request.power:
            n += step
    if n > N_CAP:
        raise InfeasibleError(
            f"no feasible number of clusters at or below {N_CAP} reaches power {request.power}",
            asymptotic_power=1.0,
        )
    achieved = _power_at(request, n, request.m, s2)
    return _result(request, solved=n, power=achieved, n=n, m=request.m,
                   delta=request.delta, report=report)


def solve_m(request: SolveRequest) -> SolveResult:
    assert request.power is not None and request.n is not None
    if not request._needs_m():
        raise ValidationError(f"{request.design.family} has per-arm sizes; solve_m does not apply", field="target")

    def power_of(m: int) -> float:
        rep = normalized_variance(request, m=m)
        return _power_at(request, request.n, m, rep.sigma2_hte_norm)

    target = request.power
    lo, hi = 1, 1
    p_prev = power_of(1)
    monotone = True
    if p_prev < target:
        while hi < M_CAP:
            hi = min(hi * 2, M_CAP)
            p_hi = power_of(hi)
            if p_hi < p_prev - 1e-12:
                monotone = False
            p_prev = p_hi
            if p_hi >= target:
                break
        if p_prev < target:
            raise InfeasibleError(
                f"power reaches only {p_prev:.4f} as the cluster-period size grows; "
                f"the between-cluster variance caps power below {target}",
                asymptotic_power=p_prev,
            )
    if monotone:
        while lo < hi:
            mid = (lo + hi) // 2
            if power_of(mid) >= target:
                hi = mid
            else:
                lo = mid + 1
    else:
        # non-monotone guard: scan for the smallest satisfying m
        lo = 1
        while lo <= hi and power_of(lo) < target:
            lo += 1
    m_solved = lo
    report = normalized_variance(request, m=m_solved)
    achieved = _power_at(request, request.n, m_solved, report.sigma2_hte_norm)
    return _result(request, solved=m_solved, power=achieved, n=request.n, m=m_solved,
                   delta=request.delta, report=report)


def solve_delta(request: SolveRequest) -> SolveResult:
    assert request.power is not None and request.n is not None
    report = normalized_variance(request)
    se = math.sqrt(report.sigma2_hte_norm / request.n)
    df = request.n - 2 if request.df_mode == "t_n_minus_2" else None
    if df is not None and df <= 0:
        raise ValidationError("t mode needs n >= 3 clusters (df = n - 2)", field="n")
    magnitude = _quantile_sum(request, request.power, df) * se
    delta = request.delta_direction * magnitude
    achieved = power_from_variance(delta, se**2, request.alpha_level, request.df_mode, request.n)
    return _result(request, solved=delta, power=achieved, n=request.n, m=request.m,
                   delta=delta, report=report)


# ---------------------------------------------------------------------------
# Sweeps and sensitivity bands
# ---------------------------------------------------------------------------

Axis = Literal["m_vs_power", "n_vs_power", "m_vs_n", "delta_vs_power"]

AXIS_NAMES = {
    "m_vs_power": ("m", "power"),
    "n_vs_power": ("n", "power"),
    "m_vs_n": ("m", "n"),
    "delta_vs_power": ("delta", "power"),
}


def _with_band_slot(request: SolveRequest, slot: int) -> SolveRequest:
    """Request with every banded parameter set to the slot of its triple."""
    band = request.icc_band
    assert band is not None
    outcome_corr = request.outcome.correlation
    cov_corr = request.covariate.correlation
    alpha1 = band.outcome_icc[slot] if band.outcome_icc else outcome_corr.alpha1
    if band.outcome_cac:
        alpha2 = band.outcome_cac[slot] * alpha1
    elif outcome_corr.alpha1 != 0:
        alpha2 = outcome_corr.alpha2 / outcome_corr.alpha1 * alpha1
    else:
        alpha2 = outcome_corr.alpha2
    new_outcome_corr = OutcomeCorrelation(
        kind=outcome_corr.kind, alpha0=outcome_corr.alpha0, alpha1=alpha1, alpha2=alpha2,
        cac_mode=outcome_corr.cac_mode, arm_values=outcome_corr.arm_values,
    )
    if cov_corr.kind == "cohort_time_invariant":
        rho_base = cov_corr.rho0
    else:
        rho_base = cov_corr.rho1
    rho = band.covariate_icc[slot] if band.covariate_icc else rho_base
    if band.covariate_cac:
        rho2 = band.covariate_cac[slot] * rho
    elif cov_corr.rho1 != 0:
        rho2 = cov_corr.rho2 / cov_corr.rho1 * rho
    else:
        rho2 = cov_corr.rho2
    if cov_corr.kind == "cohort_time_invariant":
        new_cov_corr = CovariateCorrelation.cohort_time_invariant(rho)
    else:
        new_cov_corr = CovariateCorrelation(
            kind=cov_corr.kind, rho0=cov_corr.rho0, rho1=rho, rho2=rho2, cac_mode=cov_corr.cac_mode
        )
    return replace(
        request,
        outcome=OutcomeModel(request.outcome.sigma_yx, new_outcome_corr),
        covariate=replace(request.covariate, correlation=new_cov_corr),
    )


def sweep(request: SolveRequest, axis: Axis, values: Sequence[float]) -> list[Series]:
    """Deterministic series over a grid; banded requests yield three series."""
    if axis not in AXIS_NAMES:
        raise ValidationError(f"unknown sweep axis {axis!r}", field="axis")
    if len(values) == 0:
        raise ValidationError("sweep range is empty", field="range")
    x_name, y_name = AXIS_NAMES[axis]
    if request.icc_band is not None and request.icc_band.any():
        variants = [(label, _with_band_slot(request, i)) for i, label in enumerate(("min", "assumed", "max"))]
    else:
        variants = [("assumed", request)]
    out = []
    for label, req in variants:
        points = tuple((float(x), _sweep_point(req, axis, x)) for x in values)
        out.append(Series(label=label, x_name=x_name, y_name=y_name, points=points))
    return out


def _sweep_point(request: SolveRequest, axis: Axis, x: float) -> float:
    if axis == "m_vs_power":
        m = int(x)
        rep = normalized_variance(request, m=m)
        return _power_at(request, _require(request.n, "n"), m, rep.sigma2_hte_norm)
    if axis == "n_vs_power":
        rep = normalized_variance(request)
        return _power_at(request, float(x), request.m, rep.sigma2_hte_norm)
    if axis == "m_vs_n":
        sub = replace(request, target="n", m=int(x), n=None)
        return float(solve_n(sub).solved_value)
    # delta_vs_power
    rep = normalized_variance(request)
    assert request.n is not None
    var = rep.sigma2_hte_norm / request.n
    return power_from_variance(float(x), var, request.alpha_level, request.df_mode, request.n)


def _require(value, name):
    if value is None:
        raise ValidationError(f"{name} is required for this sweep axis", field=name)
    return value
