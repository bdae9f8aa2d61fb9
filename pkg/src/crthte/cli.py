"""Command-line front end.

Subcommands: power, solve-n, solve-m, solve-delta, sweep, validate,
design gen|check, simulate, serve. Flags mirror the calculator vocabulary
(ICC, CAC, cluster-period size); results are emitted as human-readable text,
canonical JSON (schema-versioned, byte-stable across runs), or CSV. The JSON
"result" object is identical to the HTTP API's result payload.

Exit codes: 0 success, 2 validation error, 3 infeasible target, 4 parse
error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import SCHEMA_VERSION, __version__
from . import correlation, montecarlo, scenario, solver
from .designs import emit_csv, generate, parse_csv
from .errors import (
    ConfigurationError,
    CrthteError,
    DesignParseError,
    EstimabilityError,
    InfeasibleError,
    ResourceLimitError,
    ValidationError,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_PARSE = 4


def canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def _pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected lo,hi — got {text!r}")
    return float(parts[0]), float(parts[1])


def _range_spec(text: str) -> tuple[float, ...]:
    parts = [p for p in text.split(",") if p != ""]
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError(f"expected lo,hi[,count] — got {text!r}")
    return tuple(float(p) for p in parts)


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("design")
    g.add_argument("--design", choices=sorted(scenario.DESIGN_NAMES), help="design family")
    g.add_argument("--periods", type=int, default=None, help="number of periods J")
    g.add_argument("--sequences", type=int, default=None, help="stepped-wedge sequences (= J-1)")
    g.add_argument("--clusters", type=int, default=None, help="total clusters n")
    g.add_argument("--cluster-size", type=int, default=None, help="cluster-period size m")
    g.add_argument("--pi", type=float, default=0.5, help="allocation proportion (default 0.5)")
    g.add_argument("--sampling", choices=["cross-sectional", "closed-cohort"],
                   default="cross-sectional")
    g.add_argument("--subclusters", type=int, default=None, help="subclusters per cluster (three-level)")
    g.add_argument("--randomization-level", choices=["cluster", "subcluster"], default="cluster")
    g.add_argument("--design-csv", default=None, metavar="PATH", help="custom design CSV file")
    g.add_argument("--arm-m", type=_pair, default=None, metavar="T,C", help="per-arm sizes (treated, control)")
    g.add_argument("--arm-icc", type=_pair, default=None, metavar="T,C", help="per-arm outcome ICCs")
    g.add_argument("--arm-sd", type=_pair, default=None, metavar="T,C", help="per-arm outcome SDs")

    o = p.add_argument_group("outcome")
    o.add_argument("--outcome-type", choices=["continuous", "binary"], default="continuous")
    o.add_argument("--outcome-sd", type=float, default=None, help="conditional outcome SD")
    o.add_argument("--outcome-prevalence", type=float, default=None, help="binary outcome prevalence")
    o.add_argument("--icc-outcome", type=float, default=0.0, help="within-period outcome ICC (alpha1)")
    o.add_argument("--cac-outcome", type=float, default=None, help="outcome CAC (alpha2/alpha1)")
    o.add_argument("--icc0-outcome", type=float, default=None, help="within-individual ICC (alpha0, closed cohort)")
    o.add_argument("--icc-outcome-range", type=_pair, default=None, metavar="LO,HI")
    o.add_argument("--cac-outcome-range", type=_pair, default=None, metavar="LO,HI")

    c = p.add_argument_group("covariate")
    c.add_argument("--covariate-type", choices=["continuous", "binary"], default="continuous")
    c.add_argument("--covariate-sd", type=float, default=None)
    c.add_argument("--covariate-mean", type=float, default=0.0)
    c.add_argument("--prevalence", type=float, default=None, help="binary covariate prevalence")
    c.add_argument("--covariate-level", choices=["individual", "cluster"], default="individual")
    c.add_argument("--icc-covariate", type=float, default=0.0, help="within-period covariate ICC")
    c.add_argument("--cac-covariate", type=float, default=None, help="covariate CAC")
    c.add_argument("--icc-covariate-range", type=_pair, default=None, metavar="LO,HI")
    c.add_argument("--cac-covariate-range", type=_pair, default=None, metavar="LO,HI")

    t = p.add_argument_group("test")
    t.add_argument("--delta", type=float, default=None, help="HTE effect size")
    t.add_argument("--standardized", action="store_true", help="delta is standardized; outcome SD fixed at 1")
    t.add_argument("--alpha", type=float, default=0.05, help="two-sided significance level")
    t.add_argument("--power", type=float, default=None)
    t.add_argument("--df", choices=["normal", "t"], default="normal", help="normal or t with df = n-2")
    t.add_argument("--direction", choices=["positive", "negative"], default="positive",
                   help="sign of the solved effect size")


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=["human", "json", "csv"], default="human")
    p.add_argument("--output", default=None, metavar="PATH", help="write to file instead of stdout")


def _scenario_params(args: argparse.Namespace) -> dict:
    params = {
        "design": args.design,
        "periods": args.periods,
        "sequences": args.sequences,
        "clusters": args.clusters,
        "cluster_size": args.cluster_size,
        "pi": args.pi,
        "sampling": args.sampling.replace("-", "_"),
        "subclusters": args.subclusters,
        "randomization_level": args.randomization_level,
        "outcome_type": args.outcome_type,
        "outcome_sd": args.outcome_sd,
        "outcome_prevalence": args.outcome_prevalence,
        "icc_outcome": args.icc_outcome,
        "cac_outcome": args.cac_outcome,
        "icc0_outcome": args.icc0_outcome,
        "covariate_type": args.covariate_type,
        "covariate_sd": args.covariate_sd,
        "covariate_mean": args.covariate_mean,
        "prevalence": args.prevalence,
        "covariate_level": args.covariate_level,
        "icc_covariate": args.icc_covariate,
        "cac_covariate": args.cac_covariate,
        "delta": args.delta,
        "standardized": args.standardized,
        "alpha": args.alpha,
        "power": args.power,
        "df": args.df,
        "direction": args.direction,
        "icc_outcome_range": args.icc_outcome_range,
        "cac_outcome_range": args.cac_outcome_range,
        "icc_covariate_range": args.icc_covariate_range,
        "cac_covariate_range": args.cac_covariate_range,
    }
    if args.design_csv:
        try:
            with open(args.design_csv, encoding="utf-8") as fh:
                params["design_csv"] = fh.read()
        except OSError as exc:
            raise DesignParseError(f"cannot read design CSV {args.design_csv}: {exc}") from exc
        if params["design"] is None:
            params["design"] = "custom"
    return params


def _emit(args: argparse.Namespace, text: str) -> None:
    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise CrthteError(f"cannot write {args.output}: {exc}") from exc
    else:
        sys.stdout.write(text)


def _document(args: argparse.Namespace, command: str, result: dict, human: str, csv_text: str | None = None) -> str:
    if args.format == "json":
        return canonical_json({"schema_version": SCHEMA_VERSION, "command": command, "result": result})
    if args.format == "csv":
        if csv_text is not None:
            return csv_text
        lines = ["key,value"]
        for key, value in sorted(_flatten(result).items()):
            lines.append(f"{key},{value}")
        return "\n".join(lines) + "\n"
    return human


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, list):
            out[key] = json.dumps(v)
        else:
            out[key] = v
    return out


def _human_solve(result: solver.SolveResult) -> str:
    v = result.variance
    lines = [
        f"target          : {result.target}",
        f"solved value    : {result.solved_value:g}",
        f"achieved power  : {result.achieved_power:.4f}",
        f"clusters (n)    : {result.n if result.n is not None else '-'}",
        f"cluster size (m): {result.m if result.m is not None else '-'}",
        f"delta           : {result.delta if result.delta is not None else '-'}",
        f"alpha           : {result.alpha_level}",
        f"df mode         : {result.df_mode}",
        "variance report :",
        f"  sigma2_hte_norm   = {_fmt(v.sigma2_hte_norm)}",
        f"  sigma2_ate_norm   = {_fmt(v.sigma2_ate_norm)}",
        f"  HTE design effect = {_fmt(v.design_effect_hte)}",
        f"  Var(beta3) total  = {_fmt(v.var_hte_total)}",
        f"  estimable (HTE/ATE): {v.estimable_hte}/{v.estimable_ate}",
        f"  covariate effect  : {v.covariate_effect}",
    ]
    return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    return "-" if x is None else f"{x:.10g}"


def emit_series(series_list: list[solver.Series], fmt: str) -> str:
    """Plot-ready document for a sweep: CSV (x,y,band_label) or JSON array."""
    if fmt == "csv":
        lines = ["x,y,band_label"]
        for s in series_list:
            for x, y in s.points:
                lines.append(f"{x!r},{y!r},{s.label}")
        return "\n".join(lines) + "\n"
    if fmt == "json":
        return canonical_json(
            {
                "schema_version": SCHEMA_VERSION,
                "command": "sweep",
                "result": {"series": [s.to_payload() for s in series_list]},
            }
        )
    lines = []
    for s in series_list:
        lines.append(f"[{s.label}] {s.x_name} vs {s.y_name}")
        for x, y in s.points:
            lines.append(f"  {x:g}\t{y:.6g}")
    return "\n".join(lines) + "\n"


def _sweep_values(args: argparse.Namespace) -> list[float]:
    lo_hi = args.range
    if lo_hi is None:
        raise ValidationError("sweep needs --range lo,hi[,count]", field="range")
    count = int(lo_hi[2]) if len(lo_hi) == 3 else 25
    lo, hi = lo_hi[0], lo_hi[1]
    if count < 1 or hi < lo:
        raise ValidationError("sweep range must be lo <= hi with count >= 1", field="range")
    if args.axis in ("m_vs_power", "n_vs_power", "m_vs_n"):
        values = np.unique(np.round(np.linspace(lo, hi, count)).astype(int))
        values = values[values >= 1]
        return [float(v) for v in values]
    return [float(v) for v in np.linspace(lo, hi, count)]


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def _run_solve(args: argparse.Namespace, target: str, command: str) -> int:
    request = scenario.build_request(_scenario_params(args), target)
    result = solver.solve(request)
    doc = _document(args, command, result.to_payload(), _human_solve(result))
    _emit(args, doc)
    return EXIT_OK


def _run_sweep(args: argparse.Namespace) -> int:
    params = _scenario_params(args)
    request = scenario.build_sweep_request(params, args.axis)
    series_list = solver.sweep(request, args.axis, _sweep_values(args))
    _emit(args, emit_series(series_list, args.format))
    return EXIT_OK


def _run_validate(args: argparse.Namespace) -> int:
    params = _scenario_params(args)
    scn = scenario.build_scenario(params)
    m_range = (args.cluster_size, args.cluster_size) if args.cluster_size else (2, 50)
    periods = scn.matrix.n_periods if scn.matrix is not None else scn.design.periods
    findings = []
    for label, corr in (("outcome", scn.outcome.correlation), ("covariate", scn.covariate.correlation)):
        findings.extend((label, v) for v in correlation.validate(corr, m_range, periods))
    result = {
        "ok": not any(v.is_hard for _, v in findings),
        "violations": [
            {"scope": label, "severity": v.severity, "message": v.message} for label, v in findings
        ],
    }
    human_lines = ["validation: " + ("ok" if result["ok"] else "FAILED")]
    for item in result["violations"]:
        human_lines.append(f"  [{item['severity']}] {item['scope']}: {item['message']}")
    _emit(args, _document(args, "validate", result, "\n".join(human_lines) + "\n"))
    return EXIT_OK if result["ok"] else EXIT_VALIDATION


def _run_design(args: argparse.Namespace) -> int:
    if args.design_action == "gen":
        params = _scenario_params(args)
        scn = scenario.build_scenario(params)
        if scn.design.family == "custom":
            matrix = scn.matrix
        else:
            if scn.design.n_total is None:
                raise ValidationError("design gen needs --clusters", field="clusters")
            matrix = generate(scn.design)
        assert matrix is not None
        csv_text = emit_csv(matrix)
        result = {
            "csv": csv_text,
            "rows": [list(r) for r in matrix.rows],
            "clusters_per_sequence": list(matrix.clusters_per_sequence),
        }
        _emit(args, _document(args, "design gen", result, csv_text, csv_text))
        return EXIT_OK
    # check
    if not args.design_csv:
        raise ValidationError("design check needs --design-csv", field="design_csv")
    with open(args.design_csv, encoding="utf-8") as fh:
        matrix = parse_csv(fh.read())
    result = {
        "rows": [list(r) for r in matrix.rows],
        "clusters_per_sequence": list(matrix.clusters_per_sequence),
        "periods": matrix.n_periods,
        "sequences": matrix.n_sequences,
        "n_total": matrix.n_total,
    }
    human = (
        f"sequences: {matrix.n_sequences}, periods: {matrix.n_periods}, clusters: {matrix.n_total}\n"
        + "\n".join(
            f"  x{count}: {' '.join(str(v) for v in row)}"
            for row, count in zip(matrix.rows, matrix.clusters_per_sequence)
        )
        + "\n"
    )
    _emit(args, _document(args, "design check", result, human))
    return EXIT_OK


def _run_simulate(args: argparse.Namespace) -> int:
    params = _scenario_params(args)
    request = scenario.build_request(params, "power")
    analytic = solver.solve_power(request).achieved_power
    mc = montecarlo.empirical_power(request, request.delta, args.reps, args.seed)
    if args.replicates_out:
        with open(args.replicates_out, "w", encoding="utf-8") as fh:
            fh.write(montecarlo.replicates_csv(mc))
    result = {
        "rejection_rate": mc.rejection_rate,
        "mc_standard_error": mc.mc_standard_error,
        "reps": mc.reps,
        "analytic_power": analytic,
        "seed": args.seed,
    }
    human = (
        f"empirical power : {mc.rejection_rate:.4f} (MC SE {mc.mc_standard_error:.4f}, {mc.reps} reps)\n"
        f"analytic power  : {analytic:.4f}\n"
    )
    _emit(args, _document(args, "simulate", result, human))
    return EXIT_OK


def _run_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import app, mount_ui

    if args.ui:
        mount_ui(app, args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crthte",
        description="Power and sample size for treatment-effect-heterogeneity analyses in cluster-randomized trials",
    )
    parser.add_argument("--version", action="version", version=f"crthte {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, target in (
        ("power", "power"),
        ("solve-n", "n"),
        ("solve-m", "m"),
        ("solve-delta", "delta"),
    ):
        p = sub.add_parser(name, help=f"solve for {target}")
        _add_scenario_flags(p)
        _add_output_flags(p)
        p.set_defaults(func=lambda a, t=target, c=name: _run_solve(a, t, c))

    p = sub.add_parser("sweep", help="series over a design grid")
    _add_scenario_flags(p)
    _add_output_flags(p)
    p.add_argument("--axis", required=True,
                   choices=["m_vs_power", "n_vs_power", "m_vs_n", "delta_vs_power"])
    p.add_argument("--range", type=_range_spec, required=True, metavar="LO,HI[,COUNT]")
    p.set_defaults(func=_run_sweep)

    p = sub.add_parser("validate", help="check ICC/design validity")
    _add_scenario_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=_run_validate)

    p = sub.add_parser("design", help="design matrix I/O")
    p.add_argument("design_action", choices=["gen", "check"])
    _add_scenario_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=_run_design)

    p = sub.add_parser("simulate", help="Monte Carlo empirical power")
    _add_scenario_flags(p)
    _add_output_flags(p)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicates-out", default=None, metavar="PATH",
                   help="write one CSV row per replicate")
    p.set_defaults(func=_run_simulate)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui", default=None, metavar="DIR",
                   help="also serve a static web-UI bundle from DIR at /")
    p.set_defaults(func=_run_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DesignParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InfeasibleError as exc:
        extra = f" (asymptotic power {exc.asymptotic_power:.4f})" if exc.asymptotic_power is not None else ""
        print(f"infeasible: {exc}{extra}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValidationError, ConfigurationError, EstimabilityError, ResourceLimitError) as exc:
        field = getattr(exc, "field", None)
        where = f" (--{field.replace('_', '-')})" if field else ""
        print(f"invalid input{where}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CrthteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
