"""
Monte-Carlo acceptance runs for the simulation presets. Each setting runs
1000 replications of n = 1000 subjects; run with ``pytest -m slow``.
"""

import numpy as np
import pytest

from src.models.simulation import SimConfig, table1_configs
from src.services.simulation import default_threads, run_mc

pytestmark = pytest.mark.slow

REPS = 1000
TIMES = (0.5, 1.0, 1.5)

EXPECTED = {
    "null": {
        "S0": {"Est": (0.710, 0.519, 0.391), "ESD": (0.027, 0.038, 0.044)},
        "S1": {"Est": (0.711, 0.520, 0.389), "ESD": (0.022, 0.026, 0.027)},
    },
    "strong": {"delta": {"Est": (0.126, 0.187, 0.215)}},
    "medium": {"delta": {"Est": (0.063, 0.092, 0.104)}},
    "negative": {"delta": {"Est": (-0.178, -0.250, -0.270)}},
}

_cache = {}


def study(cfg: SimConfig):
    if cfg.setting not in _cache:
        _cache[cfg.setting] = run_mc(cfg, REPS, threads=default_threads(), progress=False)[0]
    return _cache[cfg.setting]


def column(summary, quantity, name):
    return np.array([summary.row(quantity, t)[name] for t in TIMES])


def test_null_setting():
    summary = study(SimConfig.from_preset("null"))
    for quantity in ("S0", "S1"):
        expected = EXPECTED["null"][quantity]
        assert np.all(np.abs(column(summary, quantity, "Est") - expected["Est"]) <= 0.01)
        assert np.all(np.abs(column(summary, quantity, "Bias")) <= 0.01)
        esd = column(summary, quantity, "ESD")
        assert np.all(np.abs(esd / np.array(expected["ESD"]) - 1) <= 0.2)
        cp = column(summary, quantity, "CP")
        assert np.all((cp >= 0.925) & (cp <= 0.975))


def test_strong_setting():
    summary = study(SimConfig.from_preset("strong"))
    assert abs(summary.row("delta", 1.5)["Est"] - 0.215) <= 0.02
    for quantity in ("S0", "S1", "delta"):
        ratio = column(summary, quantity, "ASE") / column(summary, quantity, "ESD")
        assert np.all((ratio >= 0.9) & (ratio <= 1.1))


@pytest.mark.parametrize("preset", ["medium", "negative"])
def test_medium_and_negative_settings(preset):
    summary = study(SimConfig.from_preset(preset))
    est = column(summary, "delta", "Est")
    assert np.all(np.abs(est - EXPECTED[preset]["delta"]["Est"]) <= 0.02)
    for quantity in ("S0", "S1", "delta"):
        cp = column(summary, quantity, "CP")
        assert np.all((cp >= 0.925) & (cp <= 0.975))


def first_set(mode, beta_11=1.0, beta_21=1.0):
    for cfg in table1_configs():
        if cfg.mode == mode and cfg.beta_11 == beta_11 and cfg.beta_21 == beta_21:
            return cfg
    raise LookupError(mode)


def test_prognostic_matching_is_more_efficient_than_propensity_matching():
    prognostic = study(first_set("prognostic")).row("S0", 1.5)["ESD"]
    propensity = study(first_set("propensity")).row("S0", 1.5)["ESD"]
    assert prognostic <= 0.75 * propensity


def test_propensity_spread_grows_with_treatment_association():
    ladder = [study(first_set("propensity", beta_11=b)).row("S0", 1.5)["ESD"] for b in (0.0, 0.5, 1.0, 1.5)]
    assert all(later >= earlier - 0.01 for earlier, later in zip(ladder, ladder[1:]))
    assert ladder[-1] > ladder[0]


@pytest.mark.parametrize("mode", ["prognostic", "propensity"])
def test_single_score_matching_finds_almost_every_match(mode):
    assert study(first_set(mode)).match_rate_mean >= 0.95


def test_double_matching_loses_the_most_treated_subjects():
    double = study(first_set("double")).match_rate_mean
    assert 0.5 <= double <= 0.75
    pooled = np.mean([study(first_set(mode)).match_rate_mean for mode in ("prognostic", "propensity", "double")])
    assert 0.75 <= pooled <= 0.9
