"""
Cox proportional hazards fitting by Newton-Raphson on the Breslow partial likelihood
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from ..models.cox_fit import CoxFit, FitOptions, HazardKind, HazardSpec
from ..models.step_function import StepFunction
from ..models.subject import Cohort
from ..utils.constants import VALIDATION_MESSAGES
from ..utils.errors import (
    DimensionMismatchError,
    NoEventsError,
    ReversedIntervalError,
    SingularInformationError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RiskSetData:
    """Survival data in canonical order with tie groups precomputed"""

    stop: np.ndarray
    event: np.ndarray
    Z: np.ndarray
    group_start: np.ndarray
    group_times: np.ndarray
    group_events: np.ndarray
    event_groups: np.ndarray

    @classmethod
    def build(cls, stop: np.ndarray, event: np.ndarray, Z: np.ndarray) -> "RiskSetData":
        Z = np.asarray(Z, dtype=float)
        if Z.ndim == 1:
            Z = Z.reshape(-1, 1)
        # canonical order: time, then event flag, then covariates, so row permutations give identical sums
        keys = [Z[:, j] for j in range(Z.shape[1] - 1, -1, -1)] + [event, stop]
        order = np.lexsort(keys)
        stop_s = np.asarray(stop, dtype=float)[order]
        event_s = np.asarray(event, dtype=np.int8)[order]
        Z_s = Z[order]
        group_times, group_start, inverse = np.unique(stop_s, return_index=True, return_inverse=True)
        group_events = np.bincount(inverse, weights=event_s, minlength=group_times.size)
        event_groups = np.flatnonzero(group_events > 0)
        return cls(stop_s, event_s, Z_s, group_start, group_times, group_events, event_groups)

    @property
    def n_events(self) -> int:
        return int(self.event.sum())

    @property
    def p(self) -> int:
        return self.Z.shape[1]


def _risk_sums(data: RiskSetData, beta: np.ndarray, order: int = 2):
    """
    Risk-set sums of exp(eta), exp(eta) Z and exp(eta) ZZ' at each event group,
    all scaled by exp(-shift) where shift = max(eta).
    """
    eta = data.Z @ beta
    shift = float(eta.max()) if eta.size else 0.0
    r = np.exp(eta - shift)
    starts = data.group_start[data.event_groups]

    s0 = np.cumsum(r[::-1])[::-1][starts]
    s1 = s2 = None
    if order >= 1:
        rz = r[:, None] * data.Z
        s1 = np.cumsum(rz[::-1], axis=0)[::-1][starts]
    if order >= 2:
        rzz = rz[:, :, None] * data.Z[:, None, :]
        s2 = np.cumsum(rzz[::-1], axis=0)[::-1][starts]
    return eta, shift, s0, s1, s2


def log_partial_likelihood(data: RiskSetData, beta: np.ndarray) -> float:
    """Breslow log partial likelihood at beta"""
    eta, shift, s0, _, _ = _risk_sums(data, beta, order=0)
    d = data.group_events[data.event_groups]
    return float(eta[data.event == 1].sum() - np.sum(d * (np.log(s0) + shift)))


def score_and_information(data: RiskSetData, beta: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    """Log partial likelihood, score vector and observed information at beta"""
    eta, shift, s0, s1, s2 = _risk_sums(data, beta)
    d = data.group_events[data.event_groups]
    events = data.event == 1

    loglik = float(eta[events].sum() - np.sum(d * (np.log(s0) + shift)))
    zbar = s1 / s0[:, None]
    score = data.Z[events].sum(axis=0) - (d[:, None] * zbar).sum(axis=0)
    information = np.einsum(
        "g,gjk->jk", d, s2 / s0[:, None, None] - zbar[:, :, None] * zbar[:, None, :]
    )
    return loglik, score, information


def breslow_baseline(data: RiskSetData, beta: np.ndarray) -> StepFunction:
    """Jump d(u) / sum over the risk set at u of exp(beta'Z) at every event time u"""
    _, shift, s0, _, _ = _risk_sums(data, beta, order=0)
    d = data.group_events[data.event_groups]
    jumps = d * np.exp(-shift) / s0
    return StepFunction(data.group_times[data.event_groups], jumps)


class CoxRegressionService:
    """Service for fitting the treatment, pre-treatment death and censoring hazard models"""

    def __init__(self, options: Optional[FitOptions] = None):
        self.options = options or FitOptions()

    def fit(
        self,
        c: Cohort,
        spec: HazardSpec,
        covariate_names: Sequence[str] = (),
    ) -> CoxFit:
        """
        Maximise the Breslow partial likelihood starting from beta = 0.

        A fit that exhausts the iteration budget is returned with converged=False;
        callers decide whether that is fatal.
        """
        model = spec.kind.display_name
        stop, event = spec.survival_data(c)
        if int(event.sum()) == 0:
            raise NoEventsError(VALIDATION_MESSAGES["no_events"].format(model=model), spec.kind.value)

        data = RiskSetData.build(stop, event, c.covariates)
        opts = self.options
        beta = np.zeros(data.p)
        loglik, score, information = score_and_information(data, beta)
        path = [loglik]
        converged = False

        for iteration in range(1, opts.max_iterations + 1):
            if data.p == 0 or np.max(np.abs(score)) <= opts.score_tolerance:
                converged = True
                break

            delta = self._newton_direction(information, score, model, spec.kind.value)

            # ascent is judged up to rounding of the log-likelihood itself
            floor = loglik - 16 * np.finfo(float).eps * max(1.0, abs(loglik))
            step = 1.0
            accepted = False
            for _ in range(opts.max_halvings + 1):
                candidate = beta + step * delta
                candidate_loglik = log_partial_likelihood(data, candidate)
                if np.isfinite(candidate_loglik) and candidate_loglik >= floor:
                    accepted = True
                    break
                step *= 0.5

            if not accepted:
                converged = bool(np.max(np.abs(delta)) <= opts.step_tolerance)
                if not converged:
                    logger.warning("%s model: no ascent after %d step halvings", model, opts.max_halvings)
                break

            change = np.max(np.abs(step * delta))
            beta = candidate
            loglik, score, information = score_and_information(data, beta)
            path.append(loglik)
            logger.debug(
                "%s model iteration %d: loglik=%.10f max|score|=%.3e step=%.4g",
                model, iteration, loglik, np.max(np.abs(score)), step,
            )
            if change <= opts.step_tolerance:
                converged = True
                break
        else:
            converged = data.p == 0 or bool(np.max(np.abs(score)) <= opts.score_tolerance)

        if not converged:
            logger.warning(VALIDATION_MESSAGES["max_iterations"].format(
                model=model, iterations=opts.max_iterations))

        fit = CoxFit(
            kind=spec.kind,
            beta=beta,
            baseline_cumhaz=breslow_baseline(data, beta),
            loglik_path=tuple(path),
            converged=converged,
            n_events=data.n_events,
            n_subjects=c.n,
            information=information,
            covariate_names=tuple(covariate_names),
        )
        logger.info(
            "%s model fitted: %d events, beta=%s, converged=%s",
            model, fit.n_events, np.array2string(beta, precision=4), converged,
        )
        return fit

    def _newton_direction(self, information: np.ndarray, score: np.ndarray, model: str, kind: str) -> np.ndarray:
        rcond = 1.0 / np.linalg.cond(information) if np.all(np.isfinite(information)) else 0.0
        if not np.isfinite(rcond) or rcond < self.options.min_rcond:
            raise SingularInformationError(
                VALIDATION_MESSAGES["singular_information"].format(model=model, rcond=rcond), kind)
        try:
            return linalg.solve(information, score, assume_a="pos", check_finite=False)
        except linalg.LinAlgError as e:
            raise SingularInformationError(str(e), kind) from e

    @staticmethod
    def null_fit(kind: HazardKind, p: int, n_subjects: int = 0) -> CoxFit:
        """Fit stand-in for a model without events: beta = 0 and an empty baseline"""
        return CoxFit(
            kind=kind,
            beta=np.zeros(p),
            baseline_cumhaz=StepFunction.empty(),
            loglik_path=(),
            converged=True,
            n_events=0,
            n_subjects=n_subjects,
            is_null=True,
        )


def fit_cox(c: Cohort, spec: HazardSpec, opts: Optional[FitOptions] = None) -> CoxFit:
    """Fit one hazard model with the given options"""
    return CoxRegressionService(opts).fit(c, spec)


def _check_dimension(fit: CoxFit, Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=float).reshape(-1)
    if Z.size != fit.p:
        raise DimensionMismatchError(VALIDATION_MESSAGES["dimension"].format(expected=fit.p, found=Z.size))
    return Z


def relative_risk(fit: CoxFit, Z) -> Union[float, np.ndarray]:
    """exp(beta'Z) for one vector or each row of a matrix"""
    Z = np.asarray(Z, dtype=float)
    if Z.shape[-1] != fit.p:
        raise DimensionMismatchError(VALIDATION_MESSAGES["dimension"].format(expected=fit.p, found=Z.shape[-1]))
    return np.exp(Z @ fit.beta)


def cumulative_hazard(fit: CoxFit, Z, t: float) -> float:
    """exp(beta'Z) Lambda_0(t) for one subject"""
    Z = _check_dimension(fit, Z)
    if t < 0:
        raise ValueError(f"cumulative_hazard requires t >= 0, got {t}")
    return float(np.exp(Z @ fit.beta) * fit.baseline_cumhaz(t))


def increment_between(fit: CoxFit, Z, a: float, b: float) -> float:
    """Integral of the subject's cumulative hazard over (a, b]"""
    Z = _check_dimension(fit, Z)
    if a < 0 or b < a:
        raise ReversedIntervalError(VALIDATION_MESSAGES["reversed_interval"].format(a=a, b=b))
    if a == b:
        return 0.0
    return float(np.exp(Z @ fit.beta) * (fit.baseline_cumhaz(b) - fit.baseline_cumhaz(a)))
