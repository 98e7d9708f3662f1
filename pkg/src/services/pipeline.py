"""
End-to-end estimation: hazard models, risk-set matching, weights, curves and variances
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..models.cox_fit import CoxFit, FitOptions, HazardKind, HazardSpec
from ..models.curve import SurvivalCurve
from ..models.match import MatchCriterion, MatchResult
from ..models.subject import Cohort
from ..utils.constants import ANALYSIS_DEFAULTS, VALIDATION_MESSAGES
from ..utils.errors import ConfigError, MaxIterationsExceededError, NoEventsError
from .cox_regression import CoxRegressionService
from .estimators import EstimatorService, RiskTable, estimate_delta
from .matching import MatchingService, standardized_differences
from .validation import ValidationService
from .weights import WeightOptions, WeightService
from .variance import VarianceService

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EstimationOptions:
    criterion: MatchCriterion
    tau: float = ANALYSIS_DEFAULTS["tau"]
    tau1: float = ANALYSIS_DEFAULTS["tau1"]
    times: Tuple[float, ...] = ANALYSIS_DEFAULTS["times"]
    ipcw: bool = True
    weight_cap: Optional[float] = None
    weight_cap_quantile: Optional[float] = None
    confidence_level: float = ANALYSIS_DEFAULTS["confidence_level"]
    fit_options: FitOptions = field(default_factory=FitOptions)

    def __post_init__(self):
        ValidationService.validate_horizons(self.tau, self.tau1)
        ValidationService.validate_times(self.times)
        beyond = [t for t in self.times if t > self.tau1]
        if beyond:
            raise ConfigError(VALIDATION_MESSAGES["outside_horizon"].format(tau1=self.tau1, t=beyond[0]))
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))

    @property
    def weight_options(self) -> WeightOptions:
        return WeightOptions(ipcw=self.ipcw, cap=self.weight_cap, cap_quantile=self.weight_cap_quantile)


@dataclass(frozen=True, eq=False)
class EstimationResult:
    cohort: Cohort
    options: EstimationOptions
    fits: Dict[HazardKind, CoxFit]
    match: MatchResult
    s1: SurvivalCurve
    s0: SurvivalCurve
    delta: SurvivalCurve
    treated_table: RiskTable
    control_table: RiskTable
    warnings: Tuple[str, ...] = ()

    def grid(self, times: Optional[Sequence[float]] = None) -> np.ndarray:
        """0, every jump of either curve and the requested times, restricted to [0, tau1]"""
        requested = np.asarray(self.options.times if times is None else times, dtype=float)
        grid = np.union1d(np.union1d([0.0], self.delta.jump_times), requested)
        return grid[grid <= self.options.tau1]

    def estimates_at(self, times: Sequence[float]) -> Dict[str, Dict[str, np.ndarray]]:
        """Point estimates and standard errors of S0, S1 and delta at the given times"""
        times = np.asarray(times, dtype=float)
        return {
            name: {"est": np.atleast_1d(curve.value(times)), "se": np.atleast_1d(curve.standard_error(times))}
            for name, curve in (("S0", self.s0), ("S1", self.s1), ("delta", self.delta))
        }

    def curve_table(self, times: Optional[Sequence[float]] = None) -> pd.DataFrame:
        """Estimates, standard errors and Wald limits at the jump and requested times"""
        grid = self.grid(times)
        level = self.options.confidence_level
        columns = {"t": grid}
        for name, curve in (("S1", self.s1), ("S0", self.s0), ("delta", self.delta)):
            lower, upper = curve.confidence_band(grid, level)
            columns[f"{name}_hat"] = np.atleast_1d(curve.value(grid))
            columns[f"{name}_se"] = np.atleast_1d(curve.standard_error(grid))
            columns[f"{name}_lower"] = np.atleast_1d(lower)
            columns[f"{name}_upper"] = np.atleast_1d(upper)
        return pd.DataFrame(columns)

    def matches_table(self) -> pd.DataFrame:
        columns = ["treated_id", "control_id", "T_k", "log_psi_T", "log_psi_D"]
        return pd.DataFrame([p.to_dict() for p in self.match.pairs], columns=columns)

    def weight_summary(self) -> dict:
        summary = {}
        for name, table in (("treated", self.treated_table), ("control", self.control_table)):
            positive = table.weights[table.weights > 0]
            summary[name] = {
                "columns": int(table.owners.size),
                "event_times": int(table.event_times.size),
                "max_weight": float(positive.max()) if positive.size else None,
                "mean_weight": float(positive.mean()) if positive.size else None,
            }
        return summary

    def summary(self) -> dict:
        """Fitted models, matching, balance, weights and warnings as a JSON-ready dict"""
        return {
            "n": self.cohort.n,
            "p": self.cohort.p,
            "tau": self.options.tau,
            "tau1": self.options.tau1,
            "criterion": self.options.criterion.to_dict(),
            "ipcw": self.options.ipcw,
            "weight_cap": self.options.weight_cap,
            "weight_cap_quantile": self.options.weight_cap_quantile,
            "matching": self.match.to_dict(),
            "balance": standardized_differences(self.cohort, self.match),
            "events": {
                "treated_deaths": self.s1.n_events,
                "treatment_free_deaths": self.s0.n_events,
                "skipped_jumps": self.s1.skipped_jumps + self.s0.skipped_jumps,
            },
            "weights": self.weight_summary(),
            "models": {kind.value: fit.to_dict() for kind, fit in self.fits.items()},
            "warnings": list(self.warnings),
        }


class EstimationPipeline:
    """Runs every estimation stage on one validated cohort"""

    def __init__(self, options: EstimationOptions, covariate_names: Sequence[str] = ()):
        self.options = options
        self.covariate_names = tuple(covariate_names)
        self.cox = CoxRegressionService(options.fit_options)

    def fit_models(self, cohort: Cohort) -> Tuple[Dict[HazardKind, CoxFit], List[str]]:
        """
        Fit the treatment, pre-treatment death and censoring models. A model without
        events is replaced by a null fit (beta = 0, empty baseline) and a warning.
        """
        fits: Dict[HazardKind, CoxFit] = {}
        warnings: List[str] = []
        for kind in HazardKind:
            try:
                fit = self.cox.fit(cohort, HazardSpec(kind), self.covariate_names)
            except NoEventsError as e:
                message = f"{e}; using a null fit"
                logger.warning(message)
                warnings.append(message)
                fit = CoxRegressionService.null_fit(kind, cohort.p, cohort.n)
            if not fit.converged:
                raise MaxIterationsExceededError(
                    VALIDATION_MESSAGES["max_iterations"].format(
                        model=kind.display_name, iterations=self.options.fit_options.max_iterations),
                    kind.value,
                    fit,
                )
            fits[kind] = fit
        return fits, warnings

    def run(self, cohort: Cohort) -> EstimationResult:
        """Fit the three models, match, then estimate both curves with their variances"""
        opts = self.options
        cohort = ValidationService.validate_cohort(cohort)
        logger.info("Estimating on %d subjects (%d treated), tau=%g, tau1=%g",
                    cohort.n, int(cohort.treated.sum()), opts.tau, opts.tau1)

        fits, warnings = self.fit_models(cohort)
        treat_fit = fits[HazardKind.TREATMENT]
        prognostic_fit = fits[HazardKind.PRETREATMENT_DEATH]
        censor_fit = fits[HazardKind.CENSORING]

        match = MatchingService(cohort, treat_fit, prognostic_fit, opts.criterion).run_matching(opts.tau)
        if match.n_eligible_treated == 0:
            message = f"No treated subject with treatment time <= tau={opts.tau}"
            logger.warning(message)
            warnings.append(message)

        weights = WeightService(cohort, match, censor_fit, treat_fit, opts.tau, opts.weight_options)
        estimator = EstimatorService(weights, opts.tau1)
        s1 = estimator.estimate_S1()
        s0 = estimator.estimate_S0()
        delta = estimate_delta(s1, s0)

        variance = VarianceService(estimator.treated_table, estimator.control_table, cohort.n)
        s1, s0, delta = variance.attach(s1, s0, delta)

        return EstimationResult(
            cohort=cohort,
            options=opts,
            fits=fits,
            match=match,
            s1=s1,
            s0=s0,
            delta=delta,
            treated_table=estimator.treated_table,
            control_table=estimator.control_table,
            warnings=tuple(warnings) + s1.warnings + s0.warnings,
        )


def estimate(cohort: Cohort, options: EstimationOptions, covariate_names: Sequence[str] = ()) -> EstimationResult:
    return EstimationPipeline(options, covariate_names).run(cohort)
