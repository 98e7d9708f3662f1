"""
Constants for the ATT survival estimator
"""

# Newton-Raphson settings for the Cox partial likelihood
COX_DEFAULTS = {
    "score_tolerance": 1e-8,
    "step_tolerance": 1e-10,
    "max_iterations": 50,
    "max_halvings": 20,
    "min_rcond": 1e-12,
}

# Analysis horizons and evaluation grid
ANALYSIS_DEFAULTS = {
    "tau": 3.0,
    "tau1": 5.0,
    "times": (0.5, 1.0, 1.5),
    "caliper": 1.1,
    "confidence_level": 0.95,
}

# Monte-Carlo settings
SIMULATION_DEFAULTS = {
    "n": 1000,
    "reps": 1000,
    "seed": 20240101,
    "truth_m": 1_000_000,
    "truth_chunk": 250_000,
    "min_truth_m": 100_000,
    "failed_budget": 0.005,
}

# Matching modes accepted on the command line
MATCH_MODES = ["prognostic", "propensity", "double"]

# Quantities reported by the simulation tables, in table order
QUANTITIES = [
    ("S0", "S0(t)"),
    ("S1", "S1(t)"),
    ("delta", "delta(t)"),
]

# Cohort CSV layout
COHORT_COLUMNS = ["id", "obs_time", "death", "treated", "treat_time"]
COVARIATE_PREFIX = "z"

# Output files
OUTPUT_FILES = {
    "curves": "curves.csv",
    "matches": "matches.csv",
    "summary": "summary.json",
    "mc_summary": "mc_summary.csv",
    "truth": "truth.csv",
    "cohort": "cohort.csv",
    "report": "report.html",
}

# 17 significant digits round-trips a float64 exactly
FLOAT_FORMAT = "%.16e"

# CLI exit codes
EXIT_CODES = {
    "ok": 0,
    "error": 1,
    "schema": 2,
    "cox": 3,
    "budget": 4,
}

# Parameters shared by the first simulation set (matching comparison ladders)
FIRST_SET_BASE = {
    "lambda_0t": 0.5,
    "lambda_0d": 0.5,
    "lambda_1d": 0.2,
    "lambda_0c": 0.2,
    "beta_10": 0.15,
    "beta_11": 1.0,
    "beta_20": 0.25,
    "beta_21": 1.0,
    "beta_30": 0.20,
    "beta_31": 0.15,
    "beta_32": -0.7,
    "beta_40": 0.2,
    "tau": 3.0,
    "tau1": 5.0,
    "xi_t": 1.1,
    "xi_d": 1.1,
}

TABLE1_LADDER = (0.0, 0.5, 1.0, 1.5)

# Parameters shared by the second simulation set (Null/Strong/Medium/Negative)
SECOND_SET_BASE = {
    "beta_10": 0.15,
    "beta_11": 0.5,
    "lambda_0c": 0.2,
    "beta_40": 0.2,
    "tau": 3.0,
    "tau1": 5.0,
    "mode": "prognostic",
    "xi_d": 1.1,
}

PRESETS = {
    "null": {
        **SECOND_SET_BASE,
        "lambda_0t": 0.7,
        "lambda_0d": 0.7,
        "lambda_1d": 0.7,
        "beta_20": 0.25,
        "beta_21": 0.50,
        "beta_30": 0.20,
        "beta_31": 0.50,
        "beta_32": 0.0,
    },
    "strong": {
        **SECOND_SET_BASE,
        "lambda_0t": 0.5,
        "lambda_0d": 0.5,
        "lambda_1d": 0.5,
        "beta_20": 0.5,
        "beta_21": 1.0,
        "beta_30": 0.20,
        "beta_31": 0.15,
        "beta_32": -1.0,
    },
    "medium": {
        **SECOND_SET_BASE,
        "lambda_0t": 0.5,
        "lambda_0d": 0.5,
        "lambda_1d": 0.7,
        "beta_20": 0.25,
        "beta_21": 0.5,
        "beta_30": 0.20,
        "beta_31": 0.15,
        "beta_32": -0.7,
    },
    "negative": {
        **SECOND_SET_BASE,
        "lambda_0t": 0.5,
        "lambda_0d": 0.5,
        "lambda_1d": 0.7,
        "beta_20": 0.25,
        "beta_21": 0.5,
        "beta_30": 0.20,
        "beta_31": 0.15,
        "beta_32": 0.4,
    },
}

# Keys accepted in a configuration file
CONFIG_KEYS = {
    "command", "input", "out", "mode", "xi_t", "xi_d", "tau", "tau1", "times",
    "seed", "reps", "threads", "preset", "n", "truth_m", "ipcw", "weight_cap",
    "weight_cap_quantile", "report", "rep_index",
    "lambda_0t", "lambda_0d", "lambda_1d", "lambda_0c",
    "beta_10", "beta_11", "beta_20", "beta_21",
    "beta_30", "beta_31", "beta_32", "beta_40",
}

# Validation messages
VALIDATION_MESSAGES = {
    "duplicate_id": "Subject id {subject_id} appears more than once",
    "negative_time": "Subject {subject_id}: observation and treatment times must be nonnegative and finite",
    "treatment_after_observation": "Subject {subject_id}: treatment time {treat_time} is not before observation time {obs_time}",
    "covariate_length": "Subject {subject_id}: expected {expected} covariates, found {found}",
    "nonfinite_covariate": "Subject {subject_id}: covariates must be finite",
    "bad_indicator": "Subject {subject_id}: {field} must be 0 or 1",
    "missing_header": "Header row is missing or does not start with {columns}",
    "missing_value": "Line {line}: column '{column}' is empty",
    "not_a_number": "Line {line}: column '{column}' value '{value}' is not a number",
    "not_utf8": "Line {line}: file is not valid UTF-8 text",
    "scalar_quantile_cap": "weight_cap_quantile applies to the weight matrices of a whole side; single weights honour weight_cap only",
    "no_events": "{model} model has no events",
    "singular_information": "{model} model information matrix is singular (rcond={rcond:.3e})",
    "max_iterations": "{model} model did not converge within {iterations} iterations",
    "dimension": "Expected covariate vector of length {expected}, found {found}",
    "reversed_interval": "Interval end {b} precedes start {a}",
    "bad_caliper": "Caliper {name} must be greater than 1, got {value}",
    "missing_caliper": "Matching mode '{mode}' requires caliper {name}",
    "not_treated": "Subject {subject_id} has no observed treatment",
    "empty_treated_population": "No simulated subject is treated before death with T <= tau",
    "horizon_mismatch": "Curves differ in n, tau or tau1",
    "cohort_mismatch": "Influence tables were computed on different cohorts",
    "failed_budget": "{failed} of {reps} replications failed, above the {budget:.1%} budget",
    "unknown_config_key": "Unknown configuration key '{key}'",
    "bad_config_value": "Configuration key '{key}' has invalid value '{value}'",
    "outside_horizon": "Curve is undefined beyond tau1={tau1}, requested t={t}",
}
