import math

import numpy as np
import pytest
from scipy import stats

from src.models.simulation import CounterfactualRecords, MCSummary, ReplicationResult, SimConfig, TruthCurves, table1_configs
from src.services import simulation
from src.services.simulation import (
    draw_counterfactuals,
    generate_cohort,
    replication_rng,
    run_mc,
    run_replication,
    run_replications,
    true_att,
)
from src.utils.errors import ConfigError, EmptyTreatedPopulationError, FailedReplicationBudgetError

EXACT_NULL = dict(lambda_0t=0.7, lambda_0d=0.7, lambda_1d=0.7, beta_20=0.25, beta_21=0.5,
                  beta_30=0.25, beta_31=0.5, beta_32=0.0)


def test_same_seed_gives_identical_cohorts():
    cfg = SimConfig.from_preset("medium", n=300, seed=42)
    a, _ = generate_cohort(cfg, 3)
    b, _ = generate_cohort(cfg, 3)
    c, _ = generate_cohort(cfg, 4)
    np.testing.assert_array_equal(a.obs_time, b.obs_time)
    np.testing.assert_array_equal(a.covariates, b.covariates)
    assert not np.array_equal(a.obs_time, c.obs_time)
    assert a.p == 3 and a.ids.tolist() == list(range(1, 301))


def test_observed_record_assembly():
    records = CounterfactualRecords(
        Z=np.zeros((3, 3)),
        treat_time=np.array([1.0, 3.0, 0.5]),
        death_untreated=np.array([2.0, 2.5, 4.0]),
        residual=np.array([1.5, 1.0, 1.0]),
        censor_time=np.array([5.0, 6.0, 1.2]),
    )
    cohort = records.to_cohort()
    # treated, dies at 2.5 / untreated death at 2.5 / treated, censored at 1.2 before death at 1.5
    assert cohort.treated.tolist() == [1, 0, 1]
    assert cohort.obs_time.tolist() == [2.5, 2.5, 1.2]
    assert cohort.death.tolist() == [1, 1, 0]
    assert cohort.subject(2).treat_time is None


def test_vanishing_censoring_rate_leaves_every_death_observed():
    cohort, _ = generate_cohort(SimConfig.from_preset("strong", n=500, lambda_0c=1e-12), 0)
    assert np.all(cohort.death == 1)


def test_treatment_times_are_exponential():
    cfg = SimConfig(beta_10=0.0, beta_11=0.0, lambda_0t=0.5)
    records = draw_counterfactuals(cfg, 100_000, replication_rng(cfg.seed, 0))
    statistic = stats.kstest(records.treat_time, "expon", args=(0, 1 / 0.5)).statistic
    assert statistic < 1.628 / math.sqrt(100_000)


def test_truth_of_exact_null_design_is_zero():
    cfg = SimConfig(**EXACT_NULL)
    truth = true_att(cfg, [0.5, 1.0, 1.5], m=100_000)
    assert truth.population > 0
    assert np.all(np.abs(truth.delta) <= 4 * truth.se_delta + 1e-12)
    assert np.all(np.diff(truth.s1) <= 0)


def test_truth_is_stable_when_m_doubles():
    cfg = SimConfig.from_preset("strong")
    small = true_att(cfg, [1.5], m=100_000)
    large = true_att(cfg, [1.5], m=200_000, chunk=50_000)
    combined = math.hypot(small.se_delta[0], large.se_delta[0])
    assert abs(small.delta[0] - large.delta[0]) <= 4 * combined


def test_truth_needs_enough_subjects_and_a_population():
    with pytest.raises(ConfigError):
        true_att(SimConfig(), [1.0], m=1000)
    empty = SimConfig(lambda_0t=1e-12, tau=1e-9)
    with pytest.raises(EmptyTreatedPopulationError):
        true_att(empty, [1.0], m=100_000)


def test_replication_is_deterministic_and_finite():
    cfg = SimConfig.from_preset("medium", n=300)
    a = run_replication(cfg, 1)
    b = run_replication(cfg, 1)
    assert not a.failed
    for name in ("S0", "S1", "delta"):
        np.testing.assert_array_equal(a.estimates[name], b.estimates[name])
        assert np.all(np.isfinite(a.estimates[name])) and np.all(np.isfinite(a.standard_errors[name]))
    assert 0 < a.match_rate <= 1


def test_worker_count_does_not_change_results():
    cfg = SimConfig.from_preset("null", n=200)
    serial = run_replications(cfg, 4, threads=1, progress=False)
    parallel = run_replications(cfg, 4, threads=2, progress=False)
    assert [r.rep_index for r in parallel] == [0, 1, 2, 3]
    for a, b in zip(serial, parallel):
        for name in ("S0", "S1", "delta"):
            np.testing.assert_array_equal(a.estimates[name], b.estimates[name])
            np.testing.assert_array_equal(a.standard_errors[name], b.standard_errors[name])


def fixed_truth(times=(0.5, 1.0)):
    times = np.asarray(times)
    half = np.full(times.size, 0.5)
    return TruthCurves(times, half, half, np.zeros(times.size), half * 0, half * 0, half * 0, 10, 100_000)


def replication(index, s1, s0, se=0.1):
    estimates = {"S1": np.array(s1), "S0": np.array(s0), "delta": np.array(s1) - np.array(s0)}
    errors = {name: np.full(2, se) for name in estimates}
    return ReplicationResult(index, (0.5, 1.0), estimates, errors, match_rate=0.8, n_pairs=5)


def test_summary_of_two_replications():
    results = [replication(0, [0.6, 0.5], [0.5, 0.4]), replication(1, [0.4, 0.3], [0.5, 0.6])]
    summary = MCSummary.from_replications("two", results, fixed_truth(), z=1.96)
    row = summary.row("S1", 0.5)
    assert row["Est"] == pytest.approx(0.5)
    assert row["Bias"] == pytest.approx(0.0)
    assert row["ESD"] == pytest.approx(np.std([0.6, 0.4], ddof=1))
    assert row["ASE"] == pytest.approx(0.1)
    assert row["CP"] == 1.0
    assert summary.row("S0", 1.0)["CP"] == 1.0
    assert summary.match_rate_mean == pytest.approx(0.8)


def test_summary_of_one_replication_has_no_spread():
    summary = MCSummary.from_replications("one", [replication(0, [0.6, 0.5], [0.5, 0.4])], fixed_truth(), z=1.96)
    assert summary.table["ESD"].isna().all()
    assert math.isnan(summary.match_rate_sd)


def test_failed_replications_are_excluded_and_budgeted(monkeypatch):
    good = [replication(i, [0.5, 0.4], [0.5, 0.4]) for i in range(3)]
    failed = ReplicationResult(3, (0.5, 1.0), error="Censoring model information matrix is singular")
    summary = MCSummary.from_replications("mixed", good + [failed], fixed_truth(), z=1.96)
    assert summary.reps == 4 and summary.failed == 1

    monkeypatch.setattr(simulation, "run_replications", lambda cfg, reps, threads, progress: good + [failed])
    with pytest.raises(FailedReplicationBudgetError) as info:
        run_mc(SimConfig(times=(0.5, 1.0)), 4, truth=fixed_truth(), progress=False)
    assert (info.value.failed, info.value.reps) == (1, 4)


def test_table1_block():
    configs = table1_configs()
    assert len(configs) == 24
    prognostic = [c for c in configs if c.mode == "prognostic"]
    assert all(c.xi_t is None and c.xi_d == 1.1 for c in prognostic)
    assert all(c.xi_d is None for c in configs if c.mode == "propensity")
    assert {(c.beta_11, c.beta_21) for c in configs} >= {(0.0, 1.0), (1.5, 1.0), (1.0, 0.0), (1.0, 1.5)}
    assert configs[0].setting == "table1 beta_11=0 prognostic"


def test_first_set_match_rates_by_mode():
    rates = {}
    for cfg in table1_configs():
        if cfg.beta_11 == 1.0 and cfg.beta_21 == 1.0 and cfg.mode not in rates:
            rates[cfg.mode] = np.mean([run_replication(cfg, rep).match_rate for rep in range(2)])
    # one caliper leaves a control for almost every treated subject; both calipers together often do not
    assert rates["prognostic"] >= 0.9
    assert rates["propensity"] >= 0.9
    assert rates["double"] <= min(rates["prognostic"], rates["propensity"]) - 0.15


def test_config_validation():
    with pytest.raises(ConfigError):
        SimConfig(n=1)
    with pytest.raises(ConfigError):
        SimConfig(lambda_0d=0.0)
    with pytest.raises(ConfigError):
        SimConfig.from_preset("unknown")
    with pytest.raises(ConfigError):
        SimConfig(mode="double", xi_t=None)
    assert SimConfig.from_preset("null").lambda_0t == 0.7
