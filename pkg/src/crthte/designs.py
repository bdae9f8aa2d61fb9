"""Treatment-sequence matrices for the supported trial designs.

A design is a small binary matrix: one row per treatment *sequence* (a unique
on/off pattern over periods), one column per period, plus the number of
clusters following each sequence. Generators cover the stock families
(parallel, crossover, stepped wedge, three-level, IRGT); anything else comes
in through the CSV format below.

CSV format (LF line endings, comma separator):

    n_clusters,p1,p2,...,pJ     <- optional header; present iff the first
    20,1,0                         cell of the file is literally "n_clusters"
    20,0,1

Without the header each line is one sequence of 0/1 cells and carries weight
one cluster; the caller scales counts to the trial size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

from .errors import ConfigurationError, DesignParseError, ValidationError

Family = Literal[
    "parallel_two_level",
    "parallel_two_level_by_arm",
    "parallel_three_level",
    "multi_period_parallel",
    "crxo_two_period",
    "crxo_multi_period",
    "stepped_wedge",
    "irgt",
    "custom",
]
Sampling = Literal["cross_sectional", "closed_cohort"]

FAMILIES: tuple[str, ...] = (
    "parallel_two_level",
    "parallel_two_level_by_arm",
    "parallel_three_level",
    "multi_period_parallel",
    "crxo_two_period",
    "crxo_multi_period",
    "stepped_wedge",
    "irgt",
    "custom",
)

SINGLE_PERIOD_FAMILIES = {
    "parallel_two_level",
    "parallel_two_level_by_arm",
    "parallel_three_level",
    "irgt",
}


@dataclass(frozen=True)
class ArmParams:
    """Per-arm inputs for by-arm and IRGT families (control arm, treated arm)."""

    m_treatment: int
    m_control: int
    alpha1_treatment: float
    alpha1_control: float
    sigma_treatment: float = 1.0
    sigma_control: float = 1.0

    def __post_init__(self):
        if self.m_treatment < 1 or self.m_control < 1:
            raise ValidationError("arm sizes must be >= 1", field="arm_params")
        if self.sigma_treatment <= 0 or self.sigma_control <= 0:
            raise ValidationError("arm outcome SDs must be > 0", field="arm_params")


@dataclass(frozen=True)
class DesignSpec:
    """What the user chose: family, dimensions, allocation and sampling."""

    family: Family
    periods: int = 1
    sequences: int | None = None
    pi: float = 0.5
    sampling: Sampling = "cross_sectional"
    n_total: int | None = None
    n_sub: int | None = None  # subclusters per cluster (three-level only)
    randomization_level: Literal["cluster", "subcluster"] = "cluster"
    arm_params: ArmParams | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown design family {self.family!r}", field="family")
        if self.periods < 1:
            raise ValidationError("periods must be >= 1", field="periods")
        if not 0.0 < self.pi < 1.0:
            raise ValidationError("allocation proportion pi must lie in (0, 1)", field="pi")
        if self.sampling not in ("cross_sectional", "closed_cohort"):
            raise ValidationError(f"unknown sampling scheme {self.sampling!r}", field="sampling")
        if self.family in SINGLE_PERIOD_FAMILIES and self.periods != 1:
            raise ValidationError(f"{self.family} is a single-period design", field="periods")
        if self.family == "crxo_two_period" and self.periods != 2:
            raise ValidationError("crxo_two_period forces periods = 2", field="periods")
        if self.family in ("multi_period_parallel", "crxo_multi_period", "stepped_wedge") and self.periods < 2:
            raise ValidationError(f"{self.family} needs periods >= 2", field="periods")
        if self.family == "stepped_wedge":
            expected = self.periods - 1
            if self.sequences is not None and self.sequences != expected:
                raise ValidationError(
                    f"stepped wedge with {self.periods} periods has {expected} sequences",
                    field="sequences",
                )
            if self.n_total is not None and self.n_total % expected != 0:
                raise ValidationError(
                    "stepped wedge clusters must be balanced across sequences "
                    f"(n_total divisible by {expected})",
                    field="n_total",
                )
        if self.family == "parallel_three_level":
            if self.n_sub is None or self.n_sub < 2:
                raise ValidationError("three-level designs need n_sub >= 2", field="n_sub")
        elif self.randomization_level != "cluster":
            raise ValidationError("randomization_level applies to three-level designs only", field="randomization_level")
        if self.family in ("parallel_two_level_by_arm", "irgt") and self.arm_params is None:
            raise ValidationError(f"{self.family} requires arm_params", field="arm_params")
        if self.n_total is not None and self.n_total < 2:
            raise ValidationError("n_total must be >= 2", field="n_total")

    @property
    def effective_sequences(self) -> int:
        if self.family == "stepped_wedge":
            return self.periods - 1
        if self.family == "parallel_three_level" and self.randomization_level == "subcluster":
            return 1
        return 2


@dataclass(frozen=True)
class TreatmentMatrix:
    """S x J binary sequence-by-period indicators plus clusters per sequence."""

    rows: tuple[tuple[int, ...], ...]
    clusters_per_sequence: tuple[int, ...]

    def __post_init__(self):
        if not self.rows:
            raise ValidationError("treatment matrix needs at least one sequence", field="rows")
        width = len(self.rows[0])
        for r in self.rows:
            if len(r) != width:
                raise ValidationError("all sequences must span the same periods", field="rows")
            if any(v not in (0, 1) for v in r):
                raise ValidationError("treatment indicators must be 0 or 1", field="rows")
        if len(self.clusters_per_sequence) != len(self.rows):
            raise ValidationError("clusters_per_sequence must match the number of sequences", field="clusters_per_sequence")
        if any(c < 1 for c in self.clusters_per_sequence):
            raise ValidationError("clusters_per_sequence entries must be positive", field="clusters_per_sequence")

    @property
    def n_sequences(self) -> int:
        return len(self.rows)

    @property
    def n_periods(self) -> int:
        return len(self.rows[0])

    @property
    def n_total(self) -> int:
        return sum(self.clusters_per_sequence)

    def weights(self) -> tuple[float, ...]:
        """Sequence proportions (sum to one)."""
        total = self.n_total
        return tuple(c / total for c in self.clusters_per_sequence)

    def reduced(self) -> "TreatmentMatrix":
        """Divide cluster counts by their gcd (feasibility granularity)."""
        g = math.gcd(*self.clusters_per_sequence)
        if g == 1:
            return self
        return TreatmentMatrix(self.rows, tuple(c // g for c in self.clusters_per_sequence))

    def scaled_to(self, n_total: int) -> "TreatmentMatrix":
        base = self.reduced()
        unit = base.n_total
        if n_total % unit != 0:
            raise ConfigurationError(
                f"n_total={n_total} is not a multiple of the design's {unit}-cluster sequence split"
            )
        k = n_total // unit
        return TreatmentMatrix(base.rows, tuple(c * k for c in base.clusters_per_sequence))


def allocation_split(pi: float, n: int) -> tuple[int, int]:
    """(treated, control) cluster counts: round half up, ties toward treated."""
    treated = math.floor(pi * n + 0.5)
    if treated < 1 or treated > n - 1:
        raise ConfigurationError(
            f"allocation pi={pi} with n={n} leaves an empty arm; need 1 <= pi*n <= n-1"
        )
    return treated, n - treated


def generate(spec: DesignSpec) -> TreatmentMatrix:
    """Build the treatment matrix for a stock design family."""
    if spec.family == "custom":
        raise ConfigurationError("custom designs are supplied via CSV, not generated")
    n = spec.n_total
    if n is None:
        raise ConfigurationError("generate() needs n_total on the design spec")

    if spec.family in ("parallel_two_level", "parallel_two_level_by_arm", "irgt"):
        treated, control = allocation_split(spec.pi, n)
        return TreatmentMatrix(((1,), (0,)), (treated, control))

    if spec.family == "parallel_three_level":
        if spec.randomization_level == "cluster":
            treated, control = allocation_split(spec.pi, n)
            return TreatmentMatrix(((1,), (0,)), (treated, control))
        # subcluster randomization: every cluster carries the same mixed row
        # over its n_sub subcluster slots
        assert spec.n_sub is not None
        q, _ = allocation_split(spec.pi, spec.n_sub)
        row = tuple(1 if j < q else 0 for j in range(spec.n_sub))
        return TreatmentMatrix((row,), (n,))

    if spec.family == "multi_period_parallel":
        treated, control = allocation_split(spec.pi, n)
        J = spec.periods
        return TreatmentMatrix(((1,) * J, (0,) * J), (treated, control))

    if spec.family == "crxo_two_period":
        treated, control = allocation_split(spec.pi, n)
        return TreatmentMatrix(((1, 0), (0, 1)), (treated, control))

    if spec.family == "crxo_multi_period":
        treated, control = allocation_split(spec.pi, n)
        J = spec.periods
        ab = tuple(1 - (j % 2) for j in range(J))
        ba = tuple(j % 2 for j in range(J))
        return TreatmentMatrix((ab, ba), (treated, control))

    # stepped wedge: S = J-1 sequences, rows ordered by increasing exposure;
    # row r is treated from period S-r on (first column all control, last all
    # treated)
    J = spec.periods
    S = J - 1
    if n % S != 0:
        raise ConfigurationError(f"stepped wedge needs n_total divisible by {S} sequences")
    rows = tuple(tuple(1 if j >= S - r else 0 for j in range(J)) for r in range(S))
    per = n // S
    return TreatmentMatrix(rows, (per,) * S)


# ---------------------------------------------------------------------------
# CSV ingestion / emission
# ---------------------------------------------------------------------------


def parse_csv(text: str) -> TreatmentMatrix:
    """Parse a design CSV; errors carry 1-indexed line/column provenance."""
    lines = [ln for ln in text.replace("\r\n", "\n").replace("\r", "\n").split("\n")]
    # trailing blank lines are tolerated; interior blanks are not
    while lines and lines[-1].strip() == "":
        lines.pop()
    if not lines:
        raise DesignParseError("empty design file")

    first_cells = [c.strip() for c in lines[0].split(",")]
    has_header = first_cells and first_cells[0] == "n_clusters"
    data_start = 1 if has_header else 0
    if has_header and len(lines) == 1:
        raise DesignParseError("design file has a header but no sequences", line=1)

    rows: list[tuple[int, ...]] = []
    counts: list[int] = []
    width: int | None = None
    for idx in range(data_start, len(lines)):
        lineno = idx + 1
        raw = lines[idx]
        if raw.strip() == "":
            raise DesignParseError(f"blank line at line {lineno}", line=lineno)
        cells = [c.strip() for c in raw.split(",")]
        if has_header:
            try:
                count = int(cells[0])
            except ValueError:
                raise DesignParseError(
                    f"non-integer cluster count at line {lineno}, column 1", line=lineno, column=1
                ) from None
            if count < 1:
                raise DesignParseError(
                    f"cluster count must be positive at line {lineno}, column 1", line=lineno, column=1
                )
            cells = cells[1:]
            col_offset = 1
        else:
            count = 1
            col_offset = 0
        if width is None:
            width = len(cells)
            if width == 0:
                raise DesignParseError(f"no treatment cells at line {lineno}", line=lineno)
        elif len(cells) != width:
            raise DesignParseError(
                f"ragged row at line {lineno}: expected {width} cells, got {len(cells)}",
                line=lineno,
            )
        row = []
        for c_idx, cell in enumerate(cells):
            col = c_idx + 1 + col_offset
            if cell == "0":
                row.append(0)
            elif cell == "1":
                row.append(1)
            else:
                raise DesignParseError(
                    f"non-binary cell at line {lineno}, column {col}", line=lineno, column=col
                )
        rows.append(tuple(row))
        counts.append(count)

    if not rows:
        raise DesignParseError("empty design file")
    return TreatmentMatrix(tuple(rows), tuple(counts))


def emit_csv(matrix: TreatmentMatrix) -> str:
    """Serialize a matrix in header form; parse_csv(emit_csv(x)) == x."""
    J = matrix.n_periods
    header = "n_clusters," + ",".join(f"p{j + 1}" for j in range(J))
    body = [
        f"{count}," + ",".join(str(v) for v in row)
        for row, count in zip(matrix.rows, matrix.clusters_per_sequence)
    ]
    return "\n".join([header] + body) + "\n"
