import math

import numpy as np
import pytest

from src.models.cox_fit import HazardKind
from src.models.match import MatchedPair, MatchResult
from src.models.subject import Cohort
from src.services.weights import WeightOptions, WeightService, w0_hat, w1_hat
from src.utils.errors import ConfigError, NotTreatedError
from tests.conftest import make_fit, subject


def one_pair(t_k, z_k=0.0, z_i=0.0, control_treat_time=None, tau=3.0):
    cohort = Cohort.from_records([
        subject(1, 4.0, 1, treat_time=t_k, z=(z_k,)),
        subject(2, 5.0, 0, treat_time=control_treat_time, z=(z_i,)),
    ])
    pair = MatchedPair(1, 2, t_k, 0.0, 0.0)
    match = MatchResult(pairs=(pair,), unmatched_treated=(), n_eligible_treated=1, tau=tau)
    return cohort, pair, match


CENSOR = make_fit(HazardKind.CENSORING, [0.5], [(1.0, 0.2)])
TREAT = make_fit(HazardKind.TREATMENT, [0.3], [(1.5, 0.4)])


def test_treated_weight_reads_censoring_hazard_at_shifted_time():
    cohort, _, match = one_pair(0.5)
    assert w1_hat(1, 0.6, cohort, CENSOR, match, 3.0) == pytest.approx(math.exp(0.2), rel=1e-14)
    assert w1_hat(1, 0.4, cohort, CENSOR, match, 3.0) == 1.0


def test_treated_weight_without_censoring_events_is_the_at_risk_indicator():
    cohort, _, match = one_pair(0.5)
    empty = make_fit(HazardKind.CENSORING, [0.5])
    assert w1_hat(1, 2.0, cohort, empty, match, 3.0) == 1.0
    # U - T_k = 3.5
    assert w1_hat(1, 3.6, cohort, empty, match, 3.0) == 0.0


def test_treated_weight_gating():
    cohort, _, match = one_pair(0.5)
    unmatched = MatchResult(pairs=(), unmatched_treated=(1,), n_eligible_treated=1, tau=3.0)
    assert w1_hat(1, 0.6, cohort, CENSOR, unmatched, 3.0) == 0.0
    assert w1_hat(1, 0.6, cohort, CENSOR, match, 0.4) == 0.0
    with pytest.raises(NotTreatedError):
        w1_hat(2, 0.6, cohort, CENSOR, match, 3.0)


def test_control_weight_combines_censoring_and_treatment_hazards():
    cohort, pair, _ = one_pair(0.8)
    assert w0_hat(pair, 0.9, cohort, CENSOR, TREAT, 3.0) == pytest.approx(math.exp(0.6), rel=1e-14)


def test_control_weight_at_time_zero():
    cohort, pair, _ = one_pair(0.8)
    assert w0_hat(pair, 0.0, cohort, CENSOR, TREAT, 3.0) == 1.0


def test_control_weight_inherits_the_treated_censoring_hazard():
    censor = make_fit(HazardKind.CENSORING, [0.5], [(0.5, 0.1), (1.0, 0.2)])
    cohort, pair, _ = one_pair(0.8, z_k=1.0, z_i=-1.0)
    expected = math.exp(math.exp(0.5) * 0.1 + math.exp(-0.5) * 0.2)
    assert w0_hat(pair, 0.5, cohort, censor, None, 3.0) == pytest.approx(expected, rel=1e-14)


def test_control_weight_stops_when_the_control_is_treated():
    cohort, pair, _ = one_pair(0.75, control_treat_time=1.25)
    assert w0_hat(pair, 0.4, cohort, CENSOR, TREAT, 3.0) > 0
    assert w0_hat(pair, 0.5, cohort, CENSOR, TREAT, 3.0) == 0.0


def test_unweighted_and_capped_options():
    cohort, pair, match = one_pair(0.8)
    unweighted = WeightOptions(ipcw=False)
    assert w0_hat(pair, 0.9, cohort, CENSOR, TREAT, 3.0, unweighted) == 1.0
    assert w1_hat(1, 0.9, cohort, CENSOR, match, 3.0, unweighted) == 1.0
    capped = WeightOptions(cap=1.5)
    assert w0_hat(pair, 0.9, cohort, CENSOR, TREAT, 3.0, capped) == 1.5


def test_weight_matrices_agree_with_scalar_weights():
    cohort = Cohort.from_records([
        subject(1, 4.0, 1, treat_time=0.5, z=(0.3,)),
        subject(2, 3.5, 1, treat_time=1.2, z=(-0.4,)),
        subject(3, 5.0, 0, treat_time=2.0, z=(0.1,)),
        subject(4, 6.0, 0, z=(0.0,)),
    ])
    pairs = (MatchedPair(1, 3, 0.5, 0.0, 0.0), MatchedPair(2, 4, 1.2, 0.0, 0.0))
    match = MatchResult(pairs=pairs, unmatched_treated=(), n_eligible_treated=2, tau=3.0)
    censor = make_fit(HazardKind.CENSORING, [0.5], [(0.7, 0.1), (1.6, 0.2), (3.0, 0.15)])
    treat = make_fit(HazardKind.TREATMENT, [-0.2], [(0.4, 0.3), (2.2, 0.25)])
    service = WeightService(cohort, match, censor, treat, 3.0)
    grid = np.array([0.0, 0.3, 1.0, 1.5, 2.5, 3.4, 4.0])
    w1 = service.treated_weights(grid)
    w0 = service.control_weights(grid)
    assert w1.shape == (7, 2) and w0.shape == (7, 2)
    for j, t in enumerate(grid):
        assert w1[j, 0] == pytest.approx(service.w1_hat(1, t), rel=1e-13)
        assert w1[j, 1] == pytest.approx(service.w1_hat(2, t), rel=1e-13)
        for column, pair in enumerate(pairs):
            assert w0[j, column] == pytest.approx(service.w0_hat(pair, t), rel=1e-13)
    # control 3 is treated 1.5 after its match time
    assert w0[3, 0] == 0.0 and w0[2, 0] > 0


def test_quantile_cap_limits_the_largest_weights():
    cohort, _, match = one_pair(0.5)
    service = WeightService(cohort, match, CENSOR, TREAT, 3.0, WeightOptions(cap_quantile=0.5))
    weights = service.treated_weights(np.array([0.1, 0.2, 0.6, 1.0]))
    assert weights.max() == pytest.approx(np.quantile([1.0, 1.0, math.exp(0.2), math.exp(0.2)], 0.5))
    with pytest.raises(ConfigError, match="weight_cap_quantile"):
        service.w1_hat(1, 0.6)
    with pytest.raises(ConfigError):
        w0_hat(match.pairs[0], 0.6, cohort, CENSOR, TREAT, 3.0, WeightOptions(cap_quantile=0.5))
