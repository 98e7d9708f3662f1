"""
Inverse probability of censoring weights on the time-since-treatment scale
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..models.cox_fit import CoxFit
from ..models.match import MatchedPair, MatchResult
from ..models.subject import Cohort
from ..utils.constants import VALIDATION_MESSAGES
from ..utils.errors import ConfigError, NotTreatedError
from .cox_regression import cumulative_hazard, increment_between

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightOptions:
    ipcw: bool = True
    cap: Optional[float] = None
    cap_quantile: Optional[float] = None


@dataclass(frozen=True, eq=False)
class TreatedSide:
    """Matched treated subjects with T_k <= tau, one row each"""

    positions: np.ndarray
    ids: np.ndarray
    treat_time: np.ndarray
    shifted_stop: np.ndarray
    death: np.ndarray
    rr_censor: np.ndarray

    @property
    def size(self) -> int:
        return int(self.positions.size)

    def event_mask(self, tau1: float) -> np.ndarray:
        return (self.death == 1) & (self.shifted_stop > 0) & (self.shifted_stop <= tau1)


@dataclass(frozen=True, eq=False)
class ControlSide:
    """One row per matched pair (i:k), on the time scale of the treated subject k"""

    treated_positions: np.ndarray
    control_positions: np.ndarray
    match_time: np.ndarray
    shifted_stop: np.ndarray
    shifted_treat: np.ndarray
    untreated_death: np.ndarray
    rr_censor_treated: np.ndarray
    rr_censor_control: np.ndarray
    rr_treat_control: np.ndarray

    @property
    def size(self) -> int:
        return int(self.control_positions.size)

    def at_risk(self, t: np.ndarray) -> np.ndarray:
        """Y_i^0(T_k + t) on a grid: rows are grid times, columns pairs"""
        t = np.asarray(t, dtype=float)[:, None]
        return (self.shifted_stop[None, :] >= t) & (self.shifted_treat[None, :] > t)

    def event_mask(self, tau1: float) -> np.ndarray:
        return (self.untreated_death == 1) & (self.shifted_stop > 0) & (self.shifted_stop <= tau1)


class WeightService:
    """Builds the treated-side and pair weight processes for one matched cohort"""

    def __init__(
        self,
        cohort: Cohort,
        match: MatchResult,
        censor_fit: CoxFit,
        treat_fit: Optional[CoxFit],
        tau: float,
        options: Optional[WeightOptions] = None,
    ):
        self.cohort = cohort
        self.match = match
        self.censor_fit = censor_fit
        self.treat_fit = treat_fit
        self.tau = tau
        self.options = options or WeightOptions()

        Z = cohort.covariates
        self._rr_censor = np.exp(Z @ censor_fit.beta)
        self._rr_treat = np.exp(Z @ treat_fit.beta) if treat_fit is not None else np.zeros(cohort.n)
        self.treated_side = self._build_treated_side()
        self.control_side = self._build_control_side()

    def _censor_baseline(self, t):
        if not self.options.ipcw:
            return np.zeros_like(np.asarray(t, dtype=float))
        return self.censor_fit.baseline_cumhaz(t)

    def _treat_baseline(self, t):
        if not self.options.ipcw or self.treat_fit is None:
            return np.zeros_like(np.asarray(t, dtype=float))
        return self.treat_fit.baseline_cumhaz(t)

    def _build_treated_side(self) -> TreatedSide:
        c = self.cohort
        positions = np.array(
            [c.index_of[p.treated_id] for p in self.match.pairs if p.match_time <= self.tau], dtype=np.int64)
        return TreatedSide(
            positions=positions,
            ids=c.ids[positions],
            treat_time=c.treat_time[positions],
            shifted_stop=c.obs_time[positions] - c.treat_time[positions],
            death=c.death[positions].astype(np.int8),
            rr_censor=self._rr_censor[positions],
        )

    def _build_control_side(self) -> ControlSide:
        c = self.cohort
        pairs = [p for p in self.match.pairs if p.match_time <= self.tau]
        k = np.array([c.index_of[p.treated_id] for p in pairs], dtype=np.int64)
        i = np.array([c.index_of[p.control_id] for p in pairs], dtype=np.int64)
        T_k = c.treat_time[k]
        return ControlSide(
            treated_positions=k,
            control_positions=i,
            match_time=T_k,
            shifted_stop=c.obs_time[i] - T_k,
            shifted_treat=c.treat_time[i] - T_k,
            untreated_death=((c.death[i] == 1) & (c.treated[i] == 0)).astype(np.int8),
            rr_censor_treated=self._rr_censor[k],
            rr_censor_control=self._rr_censor[i],
            rr_treat_control=self._rr_treat[i],
        )

    def treated_weights(self, times: np.ndarray) -> np.ndarray:
        """w_k^1(t) for every grid time (rows) and matched treated subject (columns)"""
        side = self.treated_side
        times = np.asarray(times, dtype=float)
        at_risk = side.shifted_stop[None, :] >= times[:, None]
        exponent = side.rr_censor[None, :] * self._censor_baseline(side.treat_time[None, :] + times[:, None])
        return self._apply_cap(np.where(at_risk, np.exp(exponent), 0.0))

    def control_weights(self, times: np.ndarray) -> np.ndarray:
        """w_{i:k}^0(t) for every grid time (rows) and matched pair (columns)"""
        side = self.control_side
        times = np.asarray(times, dtype=float)
        start = side.match_time[None, :]
        end = start + times[:, None]
        inherited = side.rr_censor_treated * self._censor_baseline(side.match_time)
        censor_gain = side.rr_censor_control[None, :] * (self._censor_baseline(end) - self._censor_baseline(start))
        treat_gain = side.rr_treat_control[None, :] * (self._treat_baseline(end) - self._treat_baseline(start))
        exponent = inherited[None, :] + censor_gain + treat_gain
        return self._apply_cap(np.where(side.at_risk(times), np.exp(exponent), 0.0))

    def _apply_cap(self, weights: np.ndarray) -> np.ndarray:
        cap = self.options.cap
        if self.options.cap_quantile is not None:
            positive = weights[weights > 0]
            if positive.size:
                quantile_cap = float(np.quantile(positive, self.options.cap_quantile))
                cap = quantile_cap if cap is None else min(cap, quantile_cap)
        if cap is None:
            return weights
        return np.minimum(weights, cap)

    def w1_hat(self, k: int, t: float) -> float:
        return w1_hat(k, t, self.cohort, self.censor_fit, self.match, self.tau, self.options)

    def w0_hat(self, pair: MatchedPair, t: float) -> float:
        return w0_hat(pair, t, self.cohort, self.censor_fit, self.treat_fit, self.tau, self.options)


def _check_scalar_options(options: WeightOptions) -> None:
    # a quantile cap is a property of a whole side on an event grid
    if options.cap_quantile is not None:
        raise ConfigError(VALIDATION_MESSAGES["scalar_quantile_cap"])


def w1_hat(
    k: int,
    t: float,
    cohort: Cohort,
    censor_fit: CoxFit,
    match: MatchResult,
    tau: float,
    options: Optional[WeightOptions] = None,
) -> float:
    """N_k^T(tau) I_k Y_k(T_k + t) exp{Lambda_kC(T_k + t)}"""
    options = options or WeightOptions()
    _check_scalar_options(options)
    subject = cohort.subject(k)
    if not subject.treated:
        raise NotTreatedError(VALIDATION_MESSAGES["not_treated"].format(subject_id=k), k)
    T_k = subject.effective_treat_time
    if T_k > tau or match.pair_for(k) is None or subject.obs_time - T_k < t:
        return 0.0
    if not options.ipcw:
        return 1.0
    value = float(np.exp(cumulative_hazard(censor_fit, subject.covariates, T_k + t)))
    return min(value, options.cap) if options.cap is not None else value


def w0_hat(
    pair: MatchedPair,
    t: float,
    cohort: Cohort,
    censor_fit: CoxFit,
    treat_fit: Optional[CoxFit],
    tau: float,
    options: Optional[WeightOptions] = None,
) -> float:
    """N_k^T(tau) I_{i:k} Y_i^0(T_k + t) exp{Lambda_kC(T_k) + censoring and treatment hazard of i over (T_k, T_k + t]}"""
    options = options or WeightOptions()
    _check_scalar_options(options)
    treated = cohort.subject(pair.treated_id)
    control = cohort.subject(pair.control_id)
    T_k = pair.match_time
    if T_k > tau:
        return 0.0
    shifted_stop = control.obs_time - T_k
    shifted_treat = control.effective_treat_time - T_k
    if not (shifted_stop >= t and shifted_treat > t):
        return 0.0
    if not options.ipcw:
        return 1.0
    exponent = (
        cumulative_hazard(censor_fit, treated.covariates, T_k)
        + increment_between(censor_fit, control.covariates, T_k, T_k + t)
    )
    if treat_fit is not None:
        exponent += increment_between(treat_fit, control.covariates, T_k, T_k + t)
    value = float(np.exp(exponent))
    return min(value, options.cap) if options.cap is not None else value
