"""
Cohort, record and option validation service
"""

import math
from typing import Any, Dict, List

from ..models.subject import Cohort, SubjectRecord
from ..utils.constants import VALIDATION_MESSAGES
from ..utils.errors import (
    CohortValidationError,
    ConfigError,
    CovariateLengthMismatchError,
    DuplicateIdError,
    NegativeTimeError,
    TreatmentAfterObservationError,
)


class ValidationService:
    """Service for validating subject records and cohorts"""

    @staticmethod
    def validate_indicator(value: Any) -> bool:
        return value in (0, 1)

    @staticmethod
    def validate_time(value: Any) -> bool:
        """Finite nonnegative time"""
        try:
            return math.isfinite(value) and value >= 0
        except TypeError:
            return False

    @staticmethod
    def validate_subject(subject: SubjectRecord, p: int) -> List[CohortValidationError]:
        """
        Validate one subject record against cohort rules

        Returns:
            List of errors, empty when the record is valid
        """
        errors: List[CohortValidationError] = []
        sid = subject.id

        for field in ("death", "treated"):
            if not ValidationService.validate_indicator(getattr(subject, field)):
                errors.append(CohortValidationError(
                    VALIDATION_MESSAGES["bad_indicator"].format(subject_id=sid, field=field), sid))

        if not ValidationService.validate_time(subject.obs_time):
            errors.append(NegativeTimeError(VALIDATION_MESSAGES["negative_time"].format(subject_id=sid), sid))
        elif subject.treated == 1:
            if subject.treat_time is None or not ValidationService.validate_time(subject.treat_time):
                errors.append(NegativeTimeError(VALIDATION_MESSAGES["negative_time"].format(subject_id=sid), sid))
            elif subject.treat_time >= subject.obs_time:
                errors.append(TreatmentAfterObservationError(
                    VALIDATION_MESSAGES["treatment_after_observation"].format(
                        subject_id=sid, treat_time=subject.treat_time, obs_time=subject.obs_time),
                    sid))

        if subject.p != p:
            errors.append(CovariateLengthMismatchError(
                VALIDATION_MESSAGES["covariate_length"].format(subject_id=sid, expected=p, found=subject.p),
                sid))
        elif not all(math.isfinite(z) for z in subject.covariates):
            errors.append(CohortValidationError(
                VALIDATION_MESSAGES["nonfinite_covariate"].format(subject_id=sid), sid))

        return errors

    @staticmethod
    def collect_cohort_errors(raw: Cohort) -> List[CohortValidationError]:
        """Every violated rule, in subject order"""
        errors: List[CohortValidationError] = []
        if not raw.subjects:
            return errors

        p = raw.subjects[0].p
        seen = set()
        for subject in raw.subjects:
            if subject.id in seen:
                errors.append(DuplicateIdError(
                    VALIDATION_MESSAGES["duplicate_id"].format(subject_id=subject.id), subject.id))
            seen.add(subject.id)
            errors.extend(ValidationService.validate_subject(subject, p))
        return errors

    @staticmethod
    def validate_cohort(raw: Cohort) -> Cohort:
        """Return the cohort unchanged, or raise the first violated rule"""
        errors = ValidationService.collect_cohort_errors(raw)
        if errors:
            raise errors[0]
        return raw

    @staticmethod
    def validate_cohort_report(raw: Cohort) -> Dict[str, Any]:
        """
        Validate a cohort without raising

        Returns:
            Dict with validation results containing:
            - valid: bool
            - errors: list of messages
            - warnings: list of messages
        """
        errors = [str(e) for e in ValidationService.collect_cohort_errors(raw)]
        warnings = []
        if raw.n and not any(s.treated for s in raw.subjects):
            warnings.append("Cohort has no treated subjects")
        if raw.n and all(s.death == 1 for s in raw.subjects):
            warnings.append("Cohort has no censored subjects")
        zero_time = [s.id for s in raw.subjects if s.treated and s.treat_time == 0]
        if zero_time:
            warnings.append(f"{len(zero_time)} subject(s) treated at time 0 contribute no treatment-free exposure")
        return {
            "valid": len(errors) == 0,
            "errors": errors,
            "warnings": warnings,
        }

    @staticmethod
    def validate_horizons(tau: float, tau1: float) -> None:
        """tau and tau1 must both be positive"""
        for name, value in (("tau", tau), ("tau1", tau1)):
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(VALIDATION_MESSAGES["bad_config_value"].format(key=name, value=value))

    @staticmethod
    def validate_times(times) -> None:
        for t in times:
            if not ValidationService.validate_time(t):
                raise ConfigError(VALIDATION_MESSAGES["bad_config_value"].format(key="times", value=t))


def validate_cohort(raw: Cohort) -> Cohort:
    return ValidationService.validate_cohort(raw)
