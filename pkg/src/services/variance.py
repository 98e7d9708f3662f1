"""
Influence-function variance of the matched weighted survival estimators

Randomness from matching and from the estimated weights is ignored: the weights
are treated as known, so each side's influence reduces to a weighted martingale
residual accumulated over that side's jump times.
"""

import logging
from typing import Tuple

import numpy as np

from ..models.curve import CurveSide, InfluenceTable, SurvivalCurve, VarianceCurves
from ..utils.constants import VALIDATION_MESSAGES
from ..utils.errors import CohortMismatchError
from .estimators import RiskTable

logger = logging.getLogger(__name__)

CANCELLATION_ULPS = 8


def compensated_cumsum(increments: np.ndarray) -> np.ndarray:
    """Running sums down axis 0 with Neumaier compensation, one running total per column"""
    increments = np.asarray(increments, dtype=float)
    out = np.empty_like(increments)
    total = np.zeros(increments.shape[1:])
    carry = np.zeros_like(total)
    for row, step in enumerate(increments):
        running = total + step
        carry += np.where(np.abs(total) >= np.abs(step), (total - running) + step, (step - running) + total)
        total = running
        out[row] = total + carry
    return out


def _influence(table: RiskTable, n: int) -> InfluenceTable:
    """
    phi_i(t) = sum over jumps u <= t of pi(u)^-1 w_i(u) {dN_i(u) - dLambda(u)},
    pi(u) = n^-1 sum_i w_i(u). Columns of the risk table that share an owner are
    summed into that owner's column.
    """
    keep = table.totals > 0
    times = table.event_times[keep]
    W = table.weights[keep]
    D = table.deaths[keep].astype(float)
    totals = table.totals[keep]
    dL = table.increments[keep]

    contributions = (n / totals)[:, None] * W * (D - dL[:, None])
    magnitude = np.abs(contributions)
    positions, owner_column = np.unique(table.owners, return_inverse=True)
    per_owner = np.zeros((times.size, positions.size))
    owner_magnitude = np.zeros_like(per_owner)
    # transpose so that each owner's pair columns are added in place
    np.add.at(per_owner.T, owner_column, contributions.T)
    np.add.at(owner_magnitude.T, owner_column, magnitude.T)
    # pair residuals of one owner that cancel up to rounding are exactly zero
    per_owner[np.abs(per_owner) <= CANCELLATION_ULPS * np.finfo(float).eps * owner_magnitude] = 0.0
    return InfluenceTable(
        side=table.side,
        n=n,
        jump_times=times,
        positions=positions,
        values=compensated_cumsum(per_owner),
        pi_hat=totals / n,
        magnitude=compensated_cumsum(magnitude.sum(axis=1)[:, None])[:, 0],
    )


def influence_treated(table: RiskTable, n: int) -> InfluenceTable:
    """phi_i^1 for every matched treated subject; all other subjects carry zero"""
    if table.side is not CurveSide.TREATED:
        raise ValueError(f"expected the treated risk table, got {table.side.value}")
    return _influence(table, n)


def influence_control(table: RiskTable, n: int) -> InfluenceTable:
    """phi_i^0 summed over every matched set in which subject i serves as control"""
    if table.side is not CurveSide.TREATMENT_FREE:
        raise ValueError(f"expected the treatment-free risk table, got {table.side.value}")
    return _influence(table, n)


def _row_sum_of_squares(matrix: np.ndarray) -> np.ndarray:
    """Sum of squares of each row; numpy reduces a contiguous last axis pairwise"""
    return np.sum(np.ascontiguousarray(matrix) ** 2, axis=1)


def _scaled_full(phi: InfluenceTable, curve: SurvivalCurve, grid: np.ndarray) -> np.ndarray:
    """S_hat(t) phi_i(t) for every grid time (rows) and cohort subject (columns)"""
    if grid.size == 0:
        return np.zeros((0, phi.n))
    return np.asarray(curve.value(grid)).reshape(-1, 1) * phi.at_full(grid)


def _side_variance(phi: InfluenceTable, curve: SurvivalCurve) -> Tuple[np.ndarray, np.ndarray]:
    grid = phi.jump_times
    if grid.size == 0:
        return grid, np.zeros(0)
    scaled = np.ascontiguousarray(np.asarray(curve.value(grid)).reshape(-1, 1) * phi.at(grid))
    # subjects outside the side contribute zero; divide by the full cohort size
    return grid, _row_sum_of_squares(scaled) / phi.n


class VarianceService:
    """Computes sigma_hat^2 curves for S1, S0 and delta and attaches them to the estimates"""

    def __init__(self, treated: RiskTable, control: RiskTable, n: int):
        self.n = n
        self.phi1 = influence_treated(treated, n)
        self.phi0 = influence_control(control, n)

    def variance_curves(self, s1: SurvivalCurve, s0: SurvivalCurve) -> VarianceCurves:
        return variance_curves(self.phi1, self.phi0, s1, s0)

    def attach(self, s1: SurvivalCurve, s0: SurvivalCurve,
               delta: SurvivalCurve) -> Tuple[SurvivalCurve, SurvivalCurve, SurvivalCurve]:
        """Attach the variance curves to S1, S0 and delta"""
        curves = self.variance_curves(s1, s0)
        s1 = s1.with_variance(curves.grid_s1, curves.sigma2_s1)
        s0 = s0.with_variance(curves.grid_s0, curves.sigma2_s0)
        delta = delta.with_components(s1, s0).with_variance(curves.grid_delta, curves.sigma2_delta)
        return s1, s0, delta


def variance_curves(phi1: InfluenceTable, phi0: InfluenceTable,
                    s1: SurvivalCurve, s0: SurvivalCurve) -> VarianceCurves:
    """
    sigma_1^2(t) = n^-1 sum_i {S1(t) phi_i^1(t)}^2, likewise for S0, and
    sigma_delta^2(t) = n^-1 sum_i {S0(t) phi_i^0(t) - S1(t) phi_i^1(t)}^2 with the two
    sides combined per subject before squaring. Each curve is piecewise constant
    between the returned grid points and 0 before the first one.
    """
    sizes = {phi1.n, phi0.n, s1.n, s0.n}
    if len(sizes) != 1:
        raise CohortMismatchError(VALIDATION_MESSAGES["cohort_mismatch"])
    n = phi1.n

    grid1, sigma2_1 = _side_variance(phi1, s1)
    grid0, sigma2_0 = _side_variance(phi0, s0)

    grid_delta = np.union1d(phi1.jump_times, phi0.jump_times)
    combined = _scaled_full(phi0, s0, grid_delta) - _scaled_full(phi1, s1, grid_delta)
    sigma2_delta = _row_sum_of_squares(combined) / n

    logger.debug("Variance grids: %d (S1), %d (S0), %d (delta) points", grid1.size, grid0.size,
                 grid_delta.size)
    return VarianceCurves(grid1, sigma2_1, grid0, sigma2_0, grid_delta, sigma2_delta)
