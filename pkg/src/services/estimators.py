"""
Weighted Nelson-Aalen estimation of the treated and treatment-free survival curves
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..models.cox_fit import CoxFit
from ..models.curve import CurveSide, SurvivalCurve
from ..models.match import MatchResult
from ..models.step_function import StepFunction
from ..models.subject import Cohort
from ..utils.constants import VALIDATION_MESSAGES
from ..utils.errors import HorizonMismatchError
from .weights import WeightOptions, WeightService

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RiskTable:
    """
    Weighted counting-process data of one side at its distinct death times.

    Columns are the side's members: matched treated subjects for S1, matched
    pairs for S0. ``owners`` maps each column to the cohort position of the
    subject whose experience it carries.
    """

    side: CurveSide
    event_times: np.ndarray
    weights: np.ndarray
    deaths: np.ndarray
    owners: np.ndarray
    totals: np.ndarray
    increments: np.ndarray

    @property
    def skipped(self) -> int:
        return int(np.sum(self.totals <= 0))

    @classmethod
    def build(cls, side: CurveSide, shifted_stop: np.ndarray, event_mask: np.ndarray,
              owners: np.ndarray, weight_fn) -> "RiskTable":
        """Weights, deaths and Nelson-Aalen increments at every distinct death time"""
        event_times = np.unique(shifted_stop[event_mask])
        deaths = (shifted_stop[None, :] == event_times[:, None]) & event_mask[None, :]
        weights = weight_fn(event_times) if event_times.size else np.zeros((0, owners.size))
        numerators = (weights * deaths).sum(axis=1)
        totals = weights.sum(axis=1)
        increments = np.zeros(event_times.size)
        positive = totals > 0
        increments[positive] = numerators[positive] / totals[positive]
        return cls(side, event_times, weights, deaths, owners, totals, increments)

    def cumulative_hazard(self) -> StepFunction:
        """Step function of the increments with a positive risk set"""
        keep = self.totals > 0
        return StepFunction(self.event_times[keep], self.increments[keep])


class EstimatorService:
    """Estimates S1, S0 and their difference from one WeightService"""

    def __init__(self, weights: WeightService, tau1: float):
        self.weights = weights
        self.tau1 = tau1
        self.n = weights.cohort.n
        self.tau = weights.tau
        self._treated_table: Optional[RiskTable] = None
        self._control_table: Optional[RiskTable] = None

    @property
    def treated_table(self) -> RiskTable:
        if self._treated_table is None:
            side = self.weights.treated_side
            self._treated_table = RiskTable.build(
                CurveSide.TREATED,
                side.shifted_stop,
                side.event_mask(self.tau1),
                side.positions,
                self.weights.treated_weights,
            )
        return self._treated_table

    @property
    def control_table(self) -> RiskTable:
        if self._control_table is None:
            side = self.weights.control_side
            self._control_table = RiskTable.build(
                CurveSide.TREATMENT_FREE,
                side.shifted_stop,
                side.event_mask(self.tau1),
                side.control_positions,
                self.weights.control_weights,
            )
        return self._control_table

    def _curve(self, table: RiskTable) -> SurvivalCurve:
        warnings = []
        if table.event_times.size == 0:
            message = f"No observed deaths on the {table.side.value} side; curve is flat at 1"
            logger.warning(message)
            warnings.append(message)
        if table.skipped:
            message = f"{table.skipped} death time(s) on the {table.side.value} side had zero weighted risk set"
            logger.warning(message)
            warnings.append(message)
        curve = SurvivalCurve(
            side=table.side,
            n=self.n,
            tau=self.tau,
            tau1=self.tau1,
            cumhaz=table.cumulative_hazard(),
            n_events=int(table.deaths.sum()),
            skipped_jumps=table.skipped,
            warnings=tuple(warnings),
        )
        logger.info("%s curve: %d deaths at %d jump times", table.side.value, curve.n_events,
                    curve.jump_times.size)
        return curve

    def estimate_S1(self) -> SurvivalCurve:
        return self._curve(self.treated_table)

    def estimate_S0(self) -> SurvivalCurve:
        return self._curve(self.control_table)


def estimate_S1(
    c: Cohort,
    match: MatchResult,
    censor_fit: CoxFit,
    tau: float,
    tau1: float,
    options: Optional[WeightOptions] = None,
) -> SurvivalCurve:
    weights = WeightService(c, match, censor_fit, None, tau, options)
    return EstimatorService(weights, tau1).estimate_S1()


def estimate_S0(
    c: Cohort,
    match: MatchResult,
    censor_fit: CoxFit,
    treat_fit: Optional[CoxFit],
    tau: float,
    tau1: float,
    options: Optional[WeightOptions] = None,
) -> SurvivalCurve:
    weights = WeightService(c, match, censor_fit, treat_fit, tau, options)
    return EstimatorService(weights, tau1).estimate_S0()


def estimate_delta(s1: SurvivalCurve, s0: SurvivalCurve) -> SurvivalCurve:
    """delta_hat(t) = S1_hat(t) - S0_hat(t)"""
    if (s1.n, s1.tau, s1.tau1) != (s0.n, s0.tau, s0.tau1):
        raise HorizonMismatchError(VALIDATION_MESSAGES["horizon_mismatch"])
    return SurvivalCurve(
        side=CurveSide.DELTA,
        n=s1.n,
        tau=s1.tau,
        tau1=s1.tau1,
        components=(s1, s0),
        warnings=s1.warnings + s0.warnings,
    )
