"""
Shared fixtures: hand-built cohorts, fixed hazard fits and the small-cohort oracle corpus
"""

from pathlib import Path

import numpy as np
import pytest

from src.models.cox_fit import CoxFit, HazardKind
from src.models.step_function import StepFunction
from src.models.subject import Cohort, SubjectRecord

COHORT_HEADER = "id,obs_time,death,treated,treat_time"


def make_fit(kind: HazardKind, beta, jumps=()) -> CoxFit:
    """Fixed fit with the given coefficients and baseline jumps [(time, size), ...]"""
    jumps = list(jumps)
    times = [u for u, _ in jumps]
    sizes = [s for _, s in jumps]
    return CoxFit(kind=kind, beta=np.asarray(beta, dtype=float).reshape(-1),
                  baseline_cumhaz=StepFunction(times, sizes))


def subject(sid, obs_time, death, treat_time=None, z=(0.0,)) -> SubjectRecord:
    return SubjectRecord(
        id=sid,
        obs_time=obs_time,
        death=death,
        treated=int(treat_time is not None),
        treat_time=treat_time,
        covariates=tuple(float(v) for v in z),
    )


def write_cohort_csv(path: Path, rows, p: int = 1) -> Path:
    header = COHORT_HEADER + "".join(f",z{j}" for j in range(1, p + 1))
    path.write_text("\n".join([header] + list(rows)) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def fig1_cohort() -> Cohort:
    """
    Four subjects: 2 is treated first (T=1), then 1 (T=2); 3 and 4 stay untreated,
    4 leaving observation at 1.5.
    """
    return Cohort.from_records([
        subject(1, 5.0, 1, treat_time=2.0, z=(0.10,)),
        subject(2, 4.0, 1, treat_time=1.0, z=(0.00,)),
        subject(3, 6.0, 0, z=(0.05,)),
        subject(4, 1.5, 1, z=(-0.02,)),
    ])


@pytest.fixture
def null_fits():
    return {
        kind: make_fit(kind, [0.0])
        for kind in HazardKind
    }


def corpus_case(seed: int):
    """
    One small random cohort (n <= 8) with fixed hazard fits and calipers chosen so
    that censoring, late treatment of controls and unmatched treated subjects all occur
    across the corpus.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 9))
    p = 1 + seed % 2
    records = []
    for i in range(1, n + 1):
        obs = float(rng.uniform(0.5, 6.0))
        treated = rng.random() < 0.5
        treat_time = float(obs * rng.uniform(0.05, 0.95)) if treated else None
        death = int(rng.random() < 0.7)
        z = tuple(float(v) for v in rng.uniform(-1.0, 1.0, size=p))
        records.append(subject(i, obs, death, treat_time=treat_time, z=z))
    cohort = Cohort.from_records(records)

    def random_jumps(count):
        times = np.sort(rng.uniform(0.0, 8.0, size=count))
        return list(zip(times.tolist(), rng.uniform(0.05, 0.3, size=count).tolist()))

    fits = {
        HazardKind.TREATMENT: make_fit(HazardKind.TREATMENT, rng.normal(0, 0.5, size=p), random_jumps(5)),
        HazardKind.PRETREATMENT_DEATH: make_fit(HazardKind.PRETREATMENT_DEATH, rng.normal(0, 1.0, size=p),
                                                random_jumps(5)),
        HazardKind.CENSORING: make_fit(HazardKind.CENSORING, rng.normal(0, 0.5, size=p), random_jumps(6)),
    }
    modes = ("prognostic", "propensity", "double")
    mode = modes[seed % 3]
    return cohort, fits, mode


ORACLE_SEEDS = list(range(30))
