"""Monte Carlo verification of the analytic power machinery.

Trials are simulated directly from the linear mixed models the variances are
derived from: cluster effects gamma ~ N(0, s_gamma^2), cluster-period effects
eta_j, cluster-individual effects s_k (closed cohort only), and residual
noise, with the variance components solved exactly from the requested ICCs.
Estimation is GLS with the *known* covariance — the quantity under test is
the design-stage variance, not an estimation procedure — so under the null
the Wald z statistic is exactly standard normal given the covariates, and
empirical size calibrates to alpha at any number of clusters.

Covariates: continuous effect modifiers are drawn as Gaussian component sums
matching the requested correlation structure; binary effect modifiers use a
beta-mixture (cluster probability ~ Beta with mean p and pairwise correlation
rho = 1/(a+b+1)), which covers exchangeable, cluster-constant and
time-invariant-cohort structures. Nested binary structures have no standard
exact generator and are rejected; the Gaussian path covers nested structures.

Replicate r draws its RNG stream from (master seed, r), so results are
identical regardless of evaluation order.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from . import engine
from .correlation import OutcomeCorrelation, covariate_kron_parts, outcome_kron_parts
from .designs import TreatmentMatrix, generate
from .engine import CovariateModel, OutcomeModel
from .errors import EstimabilityError, ResourceLimitError, ValidationError
from .solver import SolveRequest

MC_DIMENSION_CAP = 20_000


@dataclass(frozen=True)
class VarianceComponents:
    """Random-effect variances implied by an outcome ICC structure."""

    sigma_gamma2: float  # cluster
    sigma_eta2: float  # cluster-period
    sigma_s2: float  # cluster-individual (closed cohort)
    sigma_eps2: float  # residual

    @property
    def total(self) -> float:
        return self.sigma_gamma2 + self.sigma_eta2 + self.sigma_s2 + self.sigma_eps2


def icc_to_components(outcome: OutcomeModel) -> VarianceComponents:
    """Solve the component variances reproducing the requested ICCs exactly."""
    corr = outcome.correlation
    total = outcome.sigma_yx**2
    kind = corr.kind
    if kind == "arm_specific_exchangeable":
        raise ValidationError("resolve arm-specific structures per arm before simulation", field="kind")
    if kind == "exchangeable":
        gamma, eta, s = corr.alpha1 * total, 0.0, 0.0
    elif kind == "nested_exchangeable":
        gamma = corr.alpha2 * total
        eta = (corr.alpha1 - corr.alpha2) * total
        s = 0.0
    else:  # block_exchangeable
        gamma = corr.alpha2 * total
        eta = (corr.alpha1 - corr.alpha2) * total
        s = (corr.alpha0 - corr.alpha2) * total
    eps = total - gamma - eta - s
    for name, value in (("sigma_gamma2", gamma), ("sigma_eta2", eta), ("sigma_s2", s), ("sigma_eps2", eps)):
        if value < -1e-12:
            raise ValidationError(
                "ICCs outside the random-effects-representable cone "
                f"({name} = {value:.3e} < 0); the LME cannot represent them even if PSD"
            )
    return VarianceComponents(max(gamma, 0.0), max(eta, 0.0), max(s, 0.0), max(eps, 0.0))


@dataclass(frozen=True)
class SimulatedTrial:
    """One simulated dataset in per-observation columnar form."""

    cluster: np.ndarray
    period: np.ndarray
    individual: np.ndarray
    treatment: np.ndarray
    x: np.ndarray
    y: np.ndarray
    seed: int
    truth: dict


@dataclass(frozen=True)
class ReplicateRecord:
    index: int
    beta3_hat: float
    z: float
    reject: bool


@dataclass(frozen=True)
class MonteCarloResult:
    rejection_rate: float
    mc_standard_error: float
    reps: int
    replicates: tuple[ReplicateRecord, ...]

    def to_payload(self) -> dict:
        return {
            "rejection_rate": self.rejection_rate,
            "mc_standard_error": self.mc_standard_error,
            "reps": self.reps,
        }


def replicates_csv(result: MonteCarloResult) -> str:
    buf = io.StringIO()
    buf.write("replicate,beta3_hat,z,reject\n")
    for r in result.replicates:
        buf.write(f"{r.index},{r.beta3_hat!r},{r.z!r},{int(r.reject)}\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Sampling machinery
# ---------------------------------------------------------------------------


class _StratumSampler:
    """Vectorized X/Y sampler and GLS kernels for one stratum of clusters."""

    def __init__(self, stratum: engine.Stratum, covariate: CovariateModel, periods: int,
                 covariate_effect: str, period_effects: bool):
        self.row = np.asarray(stratum.row, dtype=float)
        self.count = int(round(stratum.weight))
        if abs(stratum.weight - self.count) > 1e-9 or self.count < 1:
            raise ValidationError("Monte Carlo needs integer cluster counts per sequence", field="weights")
        self.m = stratum.m
        self.periods = periods
        if self.m * periods > MC_DIMENSION_CAP:
            raise ResourceLimitError(f"simulation refuses m*J = {self.m * periods} > {MC_DIMENSION_CAP}")
        self.sigma_yx = stratum.sigma_yx
        self.components = icc_to_components(OutcomeModel(stratum.sigma_yx, stratum.outcome))
        self.covariate = covariate
        self.layout = engine.cluster_design_columns(
            list(stratum.row), self.m, periods, covariate_effect, period_effects,
        )
        self.masks = self.layout.expand(self.m)  # (p, J*m)
        Sy, Ty = outcome_kron_parts(stratum.outcome, periods)
        self.Sp, self.Tp = engine._inverse_parts(stratum.sigma_yx**2 * Sy, stratum.sigma_yx**2 * Ty, self.m)

    # -- covariate draws ----------------------------------------------------

    def sample_x(self, rng: np.random.Generator) -> np.ndarray:
        """Covariate array of shape (count, J*m)."""
        cov = self.covariate
        C, J, m = self.count, self.periods, self.m
        kind = cov.correlation.kind
        if cov.dtype == "continuous":
            return self._sample_x_gaussian(rng, kind)
        # binary: beta-mixture over cluster probabilities
        p = cov.prevalence
        assert p is not None
        if kind == "independent":
            x = rng.binomial(1, p, size=(C, J * m)).astype(float)
            return x
        if kind == "cluster_level_constant":
            per_cluster = rng.binomial(1, p, size=C).astype(float)
            return np.repeat(per_cluster[:, None], J * m, axis=1)
        if kind == "exchangeable":
            rho = cov.correlation.rho1
            probs = self._beta_mixture(rng, p, rho, C)
            return rng.binomial(1, probs[:, None], size=(C, J * m)).astype(float)
        if kind == "cohort_time_invariant":
            rho = cov.correlation.rho0
            probs = self._beta_mixture(rng, p, rho, C)
            per_individual = rng.binomial(1, probs[:, None], size=(C, m)).astype(float)
            return np.tile(per_individual, (1, J))
        raise ValidationError(
            f"no exact generator for binary covariates with {kind!r} correlation; "
            "use a continuous covariate for nested structures"
        )

    @staticmethod
    def _beta_mixture(rng: np.random.Generator, p: float, rho: float, size: int) -> np.ndarray:
        if rho < 0:
            raise ValidationError("binary covariate ICC must be >= 0", field="covariate_icc")
        if rho == 0:
            return np.full(size, p)
        if rho >= 1:
            raise ValidationError("binary covariate ICC must be < 1", field="covariate_icc")
        total = 1.0 / rho - 1.0
        return rng.beta(p * total, (1 - p) * total, size=size)

    def _sample_x_gaussian(self, rng: np.random.Generator, kind: str) -> np.ndarray:
        cov = self.covariate
        C, J, m = self.count, self.periods, self.m
        mu, sd = cov.mu_x, cov.sigma_x
        if kind == "independent":
            return mu + sd * rng.standard_normal((C, J * m))
        if kind == "cluster_level_constant":
            return mu + sd * np.repeat(rng.standard_normal((C, 1)), J * m, axis=1)
        if kind == "exchangeable":
            rho = cov.correlation.rho1
            self._check_cone(rho >= 0, "rho1 >= 0")
            a = rng.standard_normal((C, 1, 1))
            e = rng.standard_normal((C, J, m))
            x = np.sqrt(rho) * a + np.sqrt(1 - rho) * e
            return mu + sd * x.reshape(C, J * m)
        if kind == "nested_exchangeable":
            r1, r2 = cov.correlation.rho1, cov.correlation.rho2
            self._check_cone(0 <= r2 <= r1 <= 1, "0 <= rho2 <= rho1 <= 1")
            a = rng.standard_normal((C, 1, 1))
            b = rng.standard_normal((C, J, 1))
            e = rng.standard_normal((C, J, m))
            x = np.sqrt(r2) * a + np.sqrt(r1 - r2) * b + np.sqrt(1 - r1) * e
            return mu + sd * x.reshape(C, J * m)
        # cohort_time_invariant
        r0 = cov.correlation.rho0
        self._check_cone(0 <= r0 <= 1, "0 <= rho0 <= 1")
        a = rng.standard_normal((C, 1))
        e = rng.standard_normal((C, m))
        per_individual = np.sqrt(r0) * a + np.sqrt(1 - r0) * e
        return mu + sd * np.tile(per_individual, (1, J))

    @staticmethod
    def _check_cone(ok: bool, what: str) -> None:
        if not ok:
            raise ValidationError(f"Gaussian component sampler requires {what}", field="covariate_icc")

    # -- outcome draws -------------------------------------------------------

    def sample_y(self, rng: np.random.Generator, x: np.ndarray, truth: dict) -> np.ndarray:
        C, J, m = self.count, self.periods, self.m
        comp = self.components
        beta0 = np.asarray(truth["beta0"], dtype=float)  # (J,)
        beta2 = np.asarray(truth["beta2"], dtype=float)  # (J,) period-specific truth
        beta1 = float(truth["beta1"])
        beta3 = float(truth["beta3"])
        w = self.row  # (J,)
        gamma = np.sqrt(comp.sigma_gamma2) * rng.standard_normal((C, 1, 1))
        eta = np.sqrt(comp.sigma_eta2) * rng.standard_normal((C, J, 1))
        s = np.sqrt(comp.sigma_s2) * rng.standard_normal((C, 1, m))
        eps = np.sqrt(comp.sigma_eps2) * rng.standard_normal((C, J, m))
        x3 = x.reshape(C, J, m)
        fixed = (
            beta0[None, :, None]
            + beta1 * w[None, :, None]
            + beta2[None, :, None] * x3
            + beta3 * w[None, :, None] * x3
        )
        return (fixed + gamma + eta + s + eps).reshape(C, J * m)

    # -- GLS kernels ---------------------------------------------------------

    def _apply_vinv(self, arr: np.ndarray) -> np.ndarray:
        """V^{-1} @ arr along the observation axis; arr shape (C, J*m, p)."""
        C, N, p = arr.shape
        J, m = self.periods, self.m
        a4 = arr.reshape(C, J, m, p)
        out = np.einsum("ab,cbmp->camp", self.Sp, a4) + np.einsum(
            "ab,cbp->cap", self.Tp, a4.sum(axis=2)
        )[:, :, None, :]
        return out.reshape(C, N, p)

    def gls_blocks(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(sum_c D'V^{-1}D, sum_c D'V^{-1}y) over this stratum's clusters."""
        C = self.count
        N = self.periods * self.m
        p = self.layout.n_columns
        D = np.empty((C, N, p))
        rand = self.layout.random
        for i in range(p):
            base = self.masks[i][None, :]
            D[:, :, i] = base * x if rand[i] else np.broadcast_to(base, (C, N))
        ViD = self._apply_vinv(D)
        A = np.einsum("cni,cnj->ij", D, ViD)
        b = np.einsum("cni,cn->i", ViD, y)
        return A, b


class TrialSampler:
    """Shared sampler for simulate() and empirical_power()."""

    def __init__(
        self,
        matrix: TreatmentMatrix,
        m: int,
        outcome: OutcomeModel,
        covariate: CovariateModel,
        spec=None,
        covariate_effect: str = "auto",
        truth: dict | None = None,
    ):
        strata, periods, period_effects = (
            engine.design_strata(spec, matrix, m, outcome)
            if spec is not None
            else (engine.strata_from_matrix(matrix, m, outcome), matrix.n_periods, True)
        )
        effect = engine.resolve_covariate_effect(covariate_effect, periods if period_effects else 1)
        if not period_effects:
            effect = "pooled"
        self.periods = periods
        self.covariate_effect = effect
        self.samplers = [
            _StratumSampler(st, covariate, periods, effect, period_effects) for st in strata
        ]
        default_truth = {
            "beta0": np.zeros(periods),
            "beta1": 0.0,
            "beta2": np.zeros(periods),
            "beta3": 0.0,
        }
        if truth:
            default_truth.update(truth)
            default_truth["beta0"] = np.broadcast_to(
                np.asarray(default_truth["beta0"], dtype=float), (periods,)
            ).copy()
            default_truth["beta2"] = np.broadcast_to(
                np.asarray(default_truth["beta2"], dtype=float), (periods,)
            ).copy()
        self.truth = default_truth
        self.idx_interaction = self.samplers[0].layout.idx_interaction

    def sample(self, rng: np.random.Generator) -> list[tuple[np.ndarray, np.ndarray]]:
        draws = []
        for s in self.samplers:
            x = s.sample_x(rng)
            y = s.sample_y(rng, x, self.truth)
            draws.append((x, y))
        return draws

    def gls(self, draws) -> tuple[np.ndarray, np.ndarray]:
        p = self.samplers[0].layout.n_columns
        A = np.zeros((p, p))
        b = np.zeros(p)
        for s, (x, y) in zip(self.samplers, draws):
            A_s, b_s = s.gls_blocks(x, y)
            A += A_s
            b += b_s
        try:
            cov = np.linalg.inv(A)
        except np.linalg.LinAlgError as exc:
            raise EstimabilityError(f"GLS information singular in simulation: {exc}") from exc
        return cov @ b, cov


def simulate(
    matrix: TreatmentMatrix,
    m: int,
    outcome: OutcomeModel,
    covariate: CovariateModel,
    beta3: float,
    seed: int,
    spec=None,
    covariate_effect: str = "auto",
    truth: dict | None = None,
) -> SimulatedTrial:
    """One reproducible dataset from the design's mixed model."""
    full_truth = dict(truth or {})
    full_truth["beta3"] = beta3
    sampler = TrialSampler(matrix, m, outcome, covariate, spec, covariate_effect, full_truth)
    rng = np.random.default_rng([seed])
    draws = sampler.sample(rng)
    clusters, periods_col, individuals, w_col, x_col, y_col = [], [], [], [], [], []
    cluster_id = 0
    for s, (x, y) in zip(sampler.samplers, draws):
        J, m_s = s.periods, s.m
        jgrid, kgrid = np.divmod(np.arange(J * m_s), m_s)
        for c in range(s.count):
            clusters.append(np.full(J * m_s, cluster_id))
            periods_col.append(jgrid)
            individuals.append(kgrid)
            w_col.append(s.row[jgrid])
            x_col.append(x[c])
            y_col.append(y[c])
            cluster_id += 1
    return SimulatedTrial(
        cluster=np.concatenate(clusters),
        period=np.concatenate(periods_col),
        individual=np.concatenate(individuals),
        treatment=np.concatenate(w_col),
        x=np.concatenate(x_col),
        y=np.concatenate(y_col),
        seed=seed,
        truth={k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in sampler.truth.items()},
    )


def _realized_matrix(request: SolveRequest) -> TreatmentMatrix:
    if request.design.family == "custom":
        assert request.matrix is not None
        return request.matrix.scaled_to(int(request.n))
    spec = replace(request.design, n_total=int(request.n))
    return generate(spec)


def empirical_power(
    request: SolveRequest,
    true_delta: float,
    reps: int,
    seed: int,
    keep_replicates: bool = True,
) -> MonteCarloResult:
    """Rejection rate of the two-sided interaction Wald test over replicates."""
    if reps < 100:
        raise ValidationError("reps must be >= 100 for a meaningful rate", field="reps")
    if request.n is None or (request.m is None and request.design.family not in (
        "parallel_two_level_by_arm", "irgt",
    )):
        raise ValidationError("empirical_power needs fixed n and m", field="target")
    matrix = _realized_matrix(request)
    spec = request.design if request.design.family in (
        "parallel_three_level", "parallel_two_level_by_arm", "irgt",
    ) else None
    sampler = TrialSampler(
        matrix, request.m or 1, request.outcome, request.covariate,
        spec, request.covariate_effect, {"beta3": true_delta},
    )
    from scipy.stats import norm as _norm

    crit = _norm.ppf(1 - request.alpha_level / 2)
    idx = sampler.idx_interaction
    rejections = 0
    records: list[ReplicateRecord] = []
    for r in range(reps):
        rng = np.random.default_rng([seed, r])
        draws = sampler.sample(rng)
        try:
            beta_hat, cov = sampler.gls(draws)
        except EstimabilityError as exc:
            raise EstimabilityError(f"replicate {r}: {exc}") from exc
        se = float(np.sqrt(cov[idx, idx]))
        z = float(beta_hat[idx] / se)
        reject = abs(z) > crit
        rejections += int(reject)
        if keep_replicates:
            records.append(ReplicateRecord(index=r, beta3_hat=float(beta_hat[idx]), z=z, reject=reject))
    rate = rejections / reps
    se_rate = float(np.sqrt(max(rate * (1 - rate), 1e-12) / reps))
    return MonteCarloResult(
        rejection_rate=rate, mc_standard_error=se_rate, reps=reps, replicates=tuple(records)
    )
