"""Power and sample-size toolkit for treatment-effect-heterogeneity analyses
in cluster-randomized trials: correlation structures, an exact
expected-information variance engine, closed-form fast paths, solvers for
clusters / cluster size / effect size / power, a Monte Carlo verification
harness, and CLI + HTTP front ends.
"""

__version__ = "0.1.0"
SCHEMA_VERSION = "1"
API_VERSION = "1"

from .correlation import (  # noqa: F401
    CovariateCorrelation,
    OutcomeCorrelation,
    build_covariate_matrix,
    build_outcome_matrix,
    eigenvalues_block,
    eigenvalues_nested,
    validate,
)
from .designs import ArmParams, DesignSpec, TreatmentMatrix, emit_csv, generate, parse_csv  # noqa: F401
from .engine import (  # noqa: F401
    CovariateModel,
    OutcomeModel,
    VarianceReport,
    cluster_design_columns,
    expected_information,
    irgt_variance,
    variance_report,
)
from .errors import (  # noqa: F401
    ConfigurationError,
    CrthteError,
    DesignParseError,
    EstimabilityError,
    InfeasibleError,
    ResourceLimitError,
    ValidationError,
)
from .solver import (  # noqa: F401
    IccBand,
    Series,
    SolveRequest,
    SolveResult,
    power_from_variance,
    solve,
    solve_delta,
    solve_m,
    solve_n,
    solve_power,
    sweep,
)
