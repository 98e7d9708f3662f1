"""
Exception hierarchy for the ATT survival estimator
"""

from typing import Optional


class AttSurvivalError(Exception):
    """Base class for every error raised by this package"""


class CohortValidationError(AttSurvivalError):
    """A subject record violates a cohort rule"""

    rule = "cohort"

    def __init__(self, message: str, subject_id: Optional[int] = None):
        super().__init__(message)
        self.subject_id = subject_id


class DuplicateIdError(CohortValidationError):
    rule = "DuplicateId"


class NegativeTimeError(CohortValidationError):
    rule = "NegativeTime"


class TreatmentAfterObservationError(CohortValidationError):
    rule = "TreatmentAfterObservation"


class CovariateLengthMismatchError(CohortValidationError):
    rule = "CovariateLengthMismatch"


class SchemaError(AttSurvivalError):
    """Malformed cohort CSV"""

    def __init__(self, message: str, line_number: Optional[int] = None, column: Optional[str] = None):
        super().__init__(message)
        self.line_number = line_number
        self.column = column


class ConfigError(AttSurvivalError):
    """Invalid configuration file or flag"""


class DimensionMismatchError(AttSurvivalError, ValueError):
    pass


class ReversedIntervalError(AttSurvivalError, ValueError):
    pass


class HorizonMismatchError(AttSurvivalError, ValueError):
    pass


class CohortMismatchError(AttSurvivalError, ValueError):
    pass


class OutsideHorizonError(AttSurvivalError, ValueError):
    pass


class CoxFitError(AttSurvivalError):
    """Fitting one of the hazard models failed"""

    def __init__(self, message: str, model: str):
        super().__init__(message)
        self.model = model


class NoEventsError(CoxFitError):
    pass


class SingularInformationError(CoxFitError):
    pass


class MaxIterationsExceededError(CoxFitError):
    def __init__(self, message: str, model: str, fit=None):
        super().__init__(message, model)
        self.fit = fit


class NotTreatedError(AttSurvivalError):
    def __init__(self, message: str, subject_id: Optional[int] = None):
        super().__init__(message)
        self.subject_id = subject_id


class EmptyTreatedPopulationError(AttSurvivalError):
    pass


class FailedReplicationBudgetError(AttSurvivalError):
    def __init__(self, message: str, failed: int, reps: int):
        super().__init__(message)
        self.failed = failed
        self.reps = reps
