"""
Survival curve and influence table data models
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np
from scipy.stats import norm

from .step_function import StepFunction
from ..utils.constants import VALIDATION_MESSAGES
from ..utils.errors import OutsideHorizonError


class CurveSide(str, Enum):
    TREATED = "S1"
    TREATMENT_FREE = "S0"
    DELTA = "delta"


def _lookup(grid: np.ndarray, values: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Right-continuous lookup of a piecewise-constant function, 0 before the first grid point"""
    if grid.size == 0:
        return np.zeros_like(t, dtype=float)
    idx = np.searchsorted(grid, t, side="right") - 1
    return np.where(idx >= 0, values[np.maximum(idx, 0)], 0.0)


@dataclass(frozen=True, eq=False)
class SurvivalCurve:
    side: CurveSide
    n: int
    tau: float
    tau1: float
    cumhaz: Optional[StepFunction] = None
    components: Optional[Tuple["SurvivalCurve", "SurvivalCurve"]] = None
    variance_grid: Optional[np.ndarray] = None
    variance_values: Optional[np.ndarray] = None
    n_events: int = 0
    skipped_jumps: int = 0
    warnings: Tuple[str, ...] = ()

    @property
    def jump_times(self) -> np.ndarray:
        if self.side is CurveSide.DELTA:
            s1, s0 = self.components
            return np.union1d(s1.jump_times, s0.jump_times)
        return self.cumhaz.jump_times

    @property
    def has_variance(self) -> bool:
        return self.variance_values is not None

    def _check(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t > self.tau1) or np.any(t < 0):
            bad = t[(t > self.tau1) | (t < 0)].reshape(-1)[0]
            raise OutsideHorizonError(VALIDATION_MESSAGES["outside_horizon"].format(tau1=self.tau1, t=bad))
        return t

    def value(self, t) -> Union[float, np.ndarray]:
        """S_hat(t) for a survival side, delta_hat(t) for the difference"""
        t = self._check(t)
        if self.side is CurveSide.DELTA:
            s1, s0 = self.components
            out = np.asarray(s1.value(t)) - np.asarray(s0.value(t))
        else:
            out = np.exp(-np.asarray(self.cumhaz(t)))
        return float(out) if np.ndim(out) == 0 else out

    def cumulative_hazard(self, t) -> Union[float, np.ndarray]:
        """Lambda_hat(t) on [0, tau1]"""
        t = self._check(t)
        return self.cumhaz(t)

    def variance(self, t) -> Union[float, np.ndarray]:
        """sigma_hat^2(t); the standard error of the curve is sqrt(variance / n)"""
        if not self.has_variance:
            raise ValueError("variance has not been attached to this curve")
        t = self._check(t)
        out = _lookup(self.variance_grid, self.variance_values, t)
        return float(out) if np.ndim(out) == 0 else out

    def standard_error(self, t) -> Union[float, np.ndarray]:
        """sqrt(sigma^2(t) / n); zero before the first variance grid point"""
        out = np.sqrt(np.asarray(self.variance(t)) / self.n)
        return float(out) if np.ndim(out) == 0 else out

    def confidence_band(self, t, level: float = 0.95):
        """Plain Wald limits on the probability scale"""
        z = norm.ppf(0.5 + level / 2)
        estimate = np.asarray(self.value(t))
        se = np.asarray(self.standard_error(t))
        return estimate - z * se, estimate + z * se

    def with_variance(self, grid: np.ndarray, values: np.ndarray) -> "SurvivalCurve":
        """Copy carrying sigma^2 on a grid"""
        return replace(self, variance_grid=np.asarray(grid, dtype=float),
                       variance_values=np.asarray(values, dtype=float))

    def with_components(self, s1: "SurvivalCurve", s0: "SurvivalCurve") -> "SurvivalCurve":
        return replace(self, components=(s1, s0))

    def to_dict(self) -> dict:
        return {
            "side": self.side.value,
            "n": self.n,
            "tau": self.tau,
            "tau1": self.tau1,
            "n_events": self.n_events,
            "n_jumps": int(self.jump_times.size),
            "skipped_jumps": self.skipped_jumps,
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True, eq=False)
class InfluenceTable:
    """
    phi_hat_i(u) at every jump time u of one side, stored for the subjects
    that contribute to that side only; every other subject has phi = 0.
    """

    side: CurveSide
    n: int
    jump_times: np.ndarray
    positions: np.ndarray
    values: np.ndarray
    pi_hat: np.ndarray
    # running sum over jumps of |pi^-1 w dM| before owners are merged
    magnitude: np.ndarray

    def at(self, t) -> np.ndarray:
        """phi_hat(t) for the contributing subjects, shape (len(t), len(positions))"""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.jump_times.size == 0:
            return np.zeros((t.size, self.positions.size))
        idx = np.searchsorted(self.jump_times, t, side="right") - 1
        out = self.values[np.maximum(idx, 0)]
        out[idx < 0] = 0.0
        return out

    def at_full(self, t) -> np.ndarray:
        """phi_hat(t) for all n subjects in cohort order, shape (len(t), n)"""
        partial = self.at(t)
        full = np.zeros((partial.shape[0], self.n))
        full[:, self.positions] = partial
        return full

    def column_sums(self) -> np.ndarray:
        """sum_i phi_hat_i(u) at every jump time u"""
        return self.values.sum(axis=1)


@dataclass(frozen=True, eq=False)
class VarianceCurves:
    grid_s1: np.ndarray
    sigma2_s1: np.ndarray
    grid_s0: np.ndarray
    sigma2_s0: np.ndarray
    grid_delta: np.ndarray
    sigma2_delta: np.ndarray
