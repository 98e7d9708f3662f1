"""
Hazard model specifications and fitted Cox models
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy.stats import norm

from .step_function import StepFunction
from .subject import Cohort
from ..utils.constants import COX_DEFAULTS


class HazardKind(str, Enum):
    TREATMENT = "treatment"
    PRETREATMENT_DEATH = "pretreatment_death"
    CENSORING = "censoring"

    @property
    def display_name(self) -> str:
        return {
            HazardKind.TREATMENT: "Treatment",
            HazardKind.PRETREATMENT_DEATH: "Pre-treatment death",
            HazardKind.CENSORING: "Censoring",
        }[self]


@dataclass(frozen=True)
class HazardSpec:
    kind: HazardKind

    def survival_data(self, c: Cohort) -> Tuple[np.ndarray, np.ndarray]:
        """
        Derive the (stop time, event indicator) pair the model is fitted on.
        A subject is at risk on [0, stop].
        """
        U = c.obs_time
        T = c.treat_time
        if self.kind is HazardKind.TREATMENT:
            # death and censoring censor treatment
            stop = np.minimum(U, T)
            event = c.treated.astype(bool)
        elif self.kind is HazardKind.PRETREATMENT_DEATH:
            # treatment and censoring censor treatment-free death
            stop = np.minimum(U, T)
            event = (c.death == 1) & (c.treated == 0)
        else:
            # death censors censoring; treatment does not end observation
            stop = U.copy()
            event = c.death == 0
        return stop, event.astype(np.int8)


@dataclass(frozen=True)
class FitOptions:
    score_tolerance: float = COX_DEFAULTS["score_tolerance"]
    step_tolerance: float = COX_DEFAULTS["step_tolerance"]
    max_iterations: int = COX_DEFAULTS["max_iterations"]
    max_halvings: int = COX_DEFAULTS["max_halvings"]
    min_rcond: float = COX_DEFAULTS["min_rcond"]


@dataclass(frozen=True, eq=False)
class CoxFit:
    kind: HazardKind
    beta: np.ndarray
    baseline_cumhaz: StepFunction
    loglik_path: Tuple[float, ...] = ()
    converged: bool = True
    n_events: int = 0
    n_subjects: int = 0
    information: Optional[np.ndarray] = field(default=None, repr=False)
    covariate_names: Tuple[str, ...] = ()
    is_null: bool = False

    @property
    def p(self) -> int:
        return int(self.beta.size)

    @property
    def loglik(self) -> float:
        return self.loglik_path[-1] if self.loglik_path else float("nan")

    @property
    def iterations(self) -> int:
        """Newton iterations taken"""
        return max(len(self.loglik_path) - 1, 0)

    def standard_errors(self) -> np.ndarray:
        """Square roots of the inverse observed information diagonal"""
        if self.information is None or self.p == 0:
            return np.full(self.p, np.nan)
        try:
            covariance = np.linalg.inv(self.information)
        except np.linalg.LinAlgError:
            return np.full(self.p, np.nan)
        return np.sqrt(np.clip(np.diag(covariance), 0.0, None))

    def coefficient_table(self) -> list:
        """Rows of coefficient, standard error, z and p-value per covariate"""
        se = self.standard_errors()
        names = self.covariate_names or tuple(f"z{j + 1}" for j in range(self.p))
        rows = []
        for j in range(self.p):
            z = self.beta[j] / se[j] if se[j] > 0 else float("nan")
            rows.append({
                "covariate": names[j],
                "coef": float(self.beta[j]),
                "exp_coef": float(np.exp(self.beta[j])),
                "se": float(se[j]),
                "z": float(z),
                "p": float(2 * norm.sf(abs(z))) if np.isfinite(z) else float("nan"),
            })
        return rows

    def to_dict(self) -> dict:
        return {
            "model": self.kind.value,
            "converged": self.converged,
            "iterations": self.iterations,
            "n_events": self.n_events,
            "n_subjects": self.n_subjects,
            "loglik": self.loglik,
            "null_fit": self.is_null,
            "coefficients": self.coefficient_table(),
        }
