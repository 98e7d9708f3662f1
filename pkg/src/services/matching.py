"""
Risk-set matching on propensity and prognostic score ratios
"""

import logging
import math
from typing import List, Optional

import numpy as np

from ..models.cox_fit import CoxFit
from ..models.match import MatchCriterion, MatchedPair, MatchMode, MatchResult
from ..models.subject import Cohort
from ..utils.constants import VALIDATION_MESSAGES
from ..utils.errors import DimensionMismatchError, NotTreatedError

logger = logging.getLogger(__name__)


def log_score_ratio(beta, Z_l, Z_k) -> float:
    """log psi = beta'(Z_l - Z_k); the baseline hazard cancels"""
    beta = np.asarray(beta, dtype=float).reshape(-1)
    Z_l = np.asarray(Z_l, dtype=float).reshape(-1)
    Z_k = np.asarray(Z_k, dtype=float).reshape(-1)
    if not (beta.size == Z_l.size == Z_k.size):
        raise DimensionMismatchError(
            VALIDATION_MESSAGES["dimension"].format(expected=beta.size, found=max(Z_l.size, Z_k.size)))
    return float(beta @ Z_l - beta @ Z_k)


class MatchingService:
    """
    Nearest-neighbour within-caliper matching with replacement.

    Each treated subject k is compared, at its treatment time T_k, with every
    subject alive, uncensored and not yet treated at T_k. Controls are never
    consumed, so the same subject may serve several treated subjects.
    """

    def __init__(
        self,
        cohort: Cohort,
        treatment_fit: CoxFit,
        prognostic_fit: CoxFit,
        criterion: MatchCriterion,
    ):
        self.cohort = cohort
        self.criterion = criterion
        self.treatment_fit = treatment_fit
        self.prognostic_fit = prognostic_fit
        Z = cohort.covariates
        # linear predictors; log psi is a difference of these
        self._lp_t = Z @ treatment_fit.beta if treatment_fit is not None else np.zeros(cohort.n)
        self._lp_d = Z @ prognostic_fit.beta if prognostic_fit is not None else np.zeros(cohort.n)

    def _objective(self, log_psi_t: np.ndarray, log_psi_d: np.ndarray) -> np.ndarray:
        mode = self.criterion.mode
        if mode is MatchMode.PROGNOSTIC:
            return np.abs(log_psi_d)
        if mode is MatchMode.PROPENSITY:
            return np.abs(log_psi_t)
        return np.abs(log_psi_t + log_psi_d)

    def find_match(self, k: int) -> Optional[MatchedPair]:
        """Best eligible control for treated subject k, or None when the caliper excludes everyone"""
        c = self.cohort
        idx = c.index_of[k]
        if not c.treated[idx]:
            raise NotTreatedError(VALIDATION_MESSAGES["not_treated"].format(subject_id=k), k)

        T_k = c.treat_time[idx]
        candidates = c.at_risk_untreated_mask(T_k)
        candidates[idx] = False
        log_psi_t = self._lp_t - self._lp_t[idx]
        log_psi_d = self._lp_d - self._lp_d[idx]

        eligible = candidates
        if self.criterion.uses_propensity:
            eligible = eligible & (np.abs(log_psi_t) < math.log(self.criterion.xi_t))
        if self.criterion.uses_prognostic:
            eligible = eligible & (np.abs(log_psi_d) < math.log(self.criterion.xi_d))

        positions = np.flatnonzero(eligible)
        if positions.size == 0:
            return None

        objective = self._objective(log_psi_t[positions], log_psi_d[positions])
        # ties on the objective go to the smallest subject id
        winner = positions[np.lexsort((c.ids[positions], objective))[0]]
        return MatchedPair(
            treated_id=int(k),
            control_id=int(c.ids[winner]),
            match_time=float(T_k),
            log_psi_t=float(log_psi_t[winner]),
            log_psi_d=float(log_psi_d[winner]),
        )

    def run_matching(self, tau: float) -> MatchResult:
        """Match every treated subject with T_k <= tau in (T_k, id) order"""
        if not tau > 0:
            raise ValueError(f"tau must be positive, got {tau}")
        c = self.cohort
        eligible = np.flatnonzero((c.treated == 1) & (c.treat_time <= tau))
        order = eligible[np.lexsort((c.ids[eligible], c.treat_time[eligible]))]

        pairs: List[MatchedPair] = []
        unmatched: List[int] = []
        for position in order:
            subject_id = int(c.ids[position])
            pair = self.find_match(subject_id)
            if pair is None:
                unmatched.append(subject_id)
            else:
                pairs.append(pair)

        result = MatchResult(
            pairs=tuple(pairs),
            unmatched_treated=tuple(unmatched),
            n_eligible_treated=int(order.size),
            tau=float(tau),
        )
        logger.info(
            "%s matching: %d of %d treated subjects matched (rate %.3f), %d distinct controls",
            self.criterion.mode.display_name, len(pairs), order.size, result.match_rate,
            len(result.control_multiplicity()),
        )
        return result


def find_match(k: int, c: Cohort, treatment_fit: CoxFit, prognostic_fit: CoxFit,
               crit: MatchCriterion) -> Optional[MatchedPair]:
    return MatchingService(c, treatment_fit, prognostic_fit, crit).find_match(k)


def run_matching(c: Cohort, treatment_fit: CoxFit, prognostic_fit: CoxFit,
                 crit: MatchCriterion, tau: float) -> MatchResult:
    return MatchingService(c, treatment_fit, prognostic_fit, crit).run_matching(tau)


def standardized_differences(c: Cohort, match: MatchResult) -> List[dict]:
    """Covariate balance between matched treated subjects and their controls"""
    if not match.pairs:
        return []
    treated = c.covariates[[c.index_of[p.treated_id] for p in match.pairs]]
    controls = c.covariates[[c.index_of[p.control_id] for p in match.pairs]]
    rows = []
    for j in range(c.p):
        pooled = math.sqrt((treated[:, j].var(ddof=0) + controls[:, j].var(ddof=0)) / 2)
        diff = treated[:, j].mean() - controls[:, j].mean()
        rows.append({
            "covariate": f"z{j + 1}",
            "mean_treated": float(treated[:, j].mean()),
            "mean_control": float(controls[:, j].mean()),
            "smd": float(diff / pooled) if pooled > 0 else 0.0,
        })
    return rows
