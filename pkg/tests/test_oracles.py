"""
Small-cohort equivalence between the vectorised estimators and the brute-force sums in tests/naive.py
"""

import numpy as np
import pytest

from src.models.cox_fit import HazardKind
from src.models.match import MatchCriterion
from src.services.estimators import EstimatorService, estimate_delta
from src.services.matching import run_matching
from src.services.variance import VarianceService
from src.services.weights import WeightOptions, WeightService
from tests.conftest import ORACLE_SEEDS, corpus_case
from tests.naive import NaiveEstimator, naive_matches

TAU, TAU1, CALIPER = 3.0, 5.0, 1.5
REL, ABS = 1e-12, 1e-13


def calipers(mode):
    return {
        "prognostic": (None, CALIPER),
        "propensity": (CALIPER, None),
        "double": (CALIPER, CALIPER),
    }[mode]


def run_case(seed, ipcw=True):
    cohort, fits, mode = corpus_case(seed)
    xi_t, xi_d = calipers(mode)
    match = run_matching(cohort, fits[HazardKind.TREATMENT], fits[HazardKind.PRETREATMENT_DEATH],
                         MatchCriterion(mode, xi_t=xi_t, xi_d=xi_d), TAU)
    weights = WeightService(cohort, match, fits[HazardKind.CENSORING], fits[HazardKind.TREATMENT], TAU,
                            WeightOptions(ipcw=ipcw))
    estimator = EstimatorService(weights, TAU1)
    s1, s0 = estimator.estimate_S1(), estimator.estimate_S0()
    variance = VarianceService(estimator.treated_table, estimator.control_table, cohort.n)
    s1, s0, delta = variance.attach(s1, s0, estimate_delta(s1, s0))
    naive_pairs = naive_matches(cohort, fits, mode, xi_t, xi_d, TAU)
    naive = NaiveEstimator(cohort, fits, naive_pairs, TAU, TAU1, ipcw=ipcw)
    return cohort, match, naive_pairs, naive, s1, s0, delta


def check_grid(naive):
    points = set(naive.jump_times("S1")) | set(naive.jump_times("S0")) | {0.0, 0.5, 1.7, TAU1}
    return sorted(points)


@pytest.mark.parametrize("seed", ORACLE_SEEDS)
def test_matching_agrees_with_exhaustive_search(seed):
    _, match, naive_pairs, _, _, _, _ = run_case(seed)
    assert [(p.treated_id, p.control_id, p.match_time) for p in match.pairs] == naive_pairs


@pytest.mark.parametrize("seed", ORACLE_SEEDS)
@pytest.mark.parametrize("ipcw", [True, False])
def test_cumulative_hazards_agree(seed, ipcw):
    _, _, _, naive, s1, s0, _ = run_case(seed, ipcw)
    assert s1.jump_times.tolist() == naive.jump_times("S1")
    assert s0.jump_times.tolist() == naive.jump_times("S0")
    for t in check_grid(naive):
        assert s1.cumulative_hazard(t) == pytest.approx(naive.cumulative_hazard("S1", t), rel=REL, abs=ABS)
        assert s0.cumulative_hazard(t) == pytest.approx(naive.cumulative_hazard("S0", t), rel=REL, abs=ABS)


@pytest.mark.parametrize("seed", ORACLE_SEEDS)
def test_variances_agree(seed):
    _, _, _, naive, s1, s0, delta = run_case(seed)
    for t in check_grid(naive):
        assert s1.variance(t) == pytest.approx(naive.sigma2("S1", t), rel=REL, abs=ABS)
        assert s0.variance(t) == pytest.approx(naive.sigma2("S0", t), rel=REL, abs=ABS)
        assert delta.variance(t) == pytest.approx(naive.sigma2_delta(t), rel=REL, abs=ABS)


def test_corpus_covers_the_awkward_cases():
    censored = late_treated_controls = unmatched = treated_after_tau = 0
    for seed in ORACLE_SEEDS:
        cohort, match, _, _, _, _, _ = run_case(seed)
        censored += int(np.sum(cohort.death == 0))
        unmatched += len(match.unmatched_treated)
        treated_after_tau += int(np.sum((cohort.treated == 1) & (cohort.treat_time > TAU)))
        late_treated_controls += sum(cohort.subject(p.control_id).treated for p in match.pairs)
    assert censored > 0
    assert unmatched > 0
    assert treated_after_tau > 0
    assert late_treated_controls > 0
