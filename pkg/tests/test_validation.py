import math

import pytest

from src.models.subject import Cohort
from src.services.validation import ValidationService, validate_cohort
from src.utils.errors import (
    ConfigError,
    CovariateLengthMismatchError,
    DuplicateIdError,
    NegativeTimeError,
    TreatmentAfterObservationError,
)
from tests.conftest import subject


def test_valid_cohort_is_returned_unchanged(fig1_cohort):
    assert validate_cohort(fig1_cohort) is fig1_cohort


def test_duplicate_id():
    cohort = Cohort.from_records([subject(1, 2.0, 1), subject(1, 3.0, 0)])
    with pytest.raises(DuplicateIdError) as info:
        validate_cohort(cohort)
    assert info.value.subject_id == 1


def test_negative_time():
    with pytest.raises(NegativeTimeError):
        validate_cohort(Cohort.from_records([subject(1, -1.0, 1)]))


def test_treatment_must_precede_observation_end():
    with pytest.raises(TreatmentAfterObservationError):
        validate_cohort(Cohort.from_records([subject(1, 2.0, 1, treat_time=2.0)]))


def test_treatment_at_time_zero_is_accepted_with_warning():
    cohort = Cohort.from_records([subject(1, 2.0, 1, treat_time=0.0), subject(2, 3.0, 0)])
    assert validate_cohort(cohort) is cohort
    report = ValidationService.validate_cohort_report(cohort)
    assert report["valid"]
    assert any("time 0" in w for w in report["warnings"])


def test_covariate_length_mismatch():
    cohort = Cohort.from_records([subject(1, 2.0, 1, z=(0.1, 0.2)), subject(2, 3.0, 0, z=(0.1,))])
    with pytest.raises(CovariateLengthMismatchError):
        validate_cohort(cohort)


def test_report_collects_every_error():
    cohort = Cohort.from_records([
        subject(1, 2.0, 1, treat_time=3.0),
        subject(1, -2.0, 1),
        subject(3, 1.0, 0, z=(math.nan,)),
    ])
    report = ValidationService.validate_cohort_report(cohort)
    assert not report["valid"]
    assert len(report["errors"]) == 4


def test_horizons_must_be_positive():
    with pytest.raises(ConfigError):
        ValidationService.validate_horizons(0.0, 5.0)
    with pytest.raises(ConfigError):
        ValidationService.validate_times([0.5, -1.0])


def test_at_risk_untreated_excludes_subjects_treated_at_t(fig1_cohort):
    assert fig1_cohort.at_risk_untreated(1.0) == frozenset({1, 3, 4})
    assert fig1_cohort.at_risk_untreated(2.0) == frozenset({3})
    with pytest.raises(ValueError):
        fig1_cohort.at_risk_untreated(-1.0)
