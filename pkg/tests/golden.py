"""The four benchmark command lines shared by the CLI and service tests."""

UMDEX_2X2_CSV = "0,0\n0,1\n"

LIRE_SOLVE_M = [
    "solve-m",
    "--design", "stepped-wedge", "--sequences", "5", "--periods", "6",
    "--clusters", "100",
    "--icc-outcome", "0.022", "--cac-outcome", "0.5",
    "--icc-covariate", "0.1", "--cac-covariate", "0.9",
    "--covariate-type", "binary", "--prevalence", "0.2",
    "--delta", "-0.05", "--standardized", "--power", "0.9", "--alpha", "0.05",
]

UMDEX_SOLVE_N_M11 = [
    "solve-n",
    "--design", "parallel", "--cluster-size", "11",
    "--icc-outcome", "0.02", "--icc-covariate", "0.2",
    "--covariate-type", "binary", "--prevalence", "0.36",
    "--delta", "0.7", "--standardized", "--power", "0.9",
]

UMDEX_SOLVE_N_M8 = [
    "solve-n",
    "--design", "parallel", "--cluster-size", "8",
    "--icc-outcome", "0.02", "--icc-covariate", "0.2",
    "--covariate-type", "binary", "--prevalence", "0.36",
    "--delta", "0.7", "--standardized", "--power", "0.9",
]


def umdex_2x2_power(csv_path: str) -> list[str]:
    return [
        "power",
        "--design", "custom", "--design-csv", csv_path,
        "--sampling", "closed-cohort",
        "--icc0-outcome", "0.7", "--icc-outcome", "0.04", "--cac-outcome", "0.9",
        "--icc-covariate", "0.2",
        "--covariate-type", "binary", "--prevalence", "0.36",
        "--delta", "0.7", "--standardized",
        "--clusters", "32", "--cluster-size", "6",
    ]


LIRE_SOLVE_M_BODY = {
    "design": "stepped-wedge", "sequences": 5, "periods": 6, "clusters": 100,
    "icc_outcome": 0.022, "cac_outcome": 0.5,
    "icc_covariate": 0.1, "cac_covariate": 0.9,
    "covariate_type": "binary", "prevalence": 0.2,
    "delta": -0.05, "standardized": True, "power": 0.9, "alpha": 0.05,
    "target": "m",
}

UMDEX_SOLVE_N_M11_BODY = {
    "design": "parallel", "cluster_size": 11,
    "icc_outcome": 0.02, "icc_covariate": 0.2,
    "covariate_type": "binary", "prevalence": 0.36,
    "delta": 0.7, "standardized": True, "power": 0.9,
    "target": "n",
}

UMDEX_SOLVE_N_M8_BODY = {**UMDEX_SOLVE_N_M11_BODY, "cluster_size": 8}

UMDEX_2X2_POWER_BODY = {
    "design": "custom", "design_csv": UMDEX_2X2_CSV,
    "sampling": "closed_cohort",
    "icc0_outcome": 0.7, "icc_outcome": 0.04, "cac_outcome": 0.9,
    "icc_covariate": 0.2,
    "covariate_type": "binary", "prevalence": 0.36,
    "delta": 0.7, "standardized": True,
    "clusters": 32, "cluster_size": 6,
    "target": "power",
}
