"""
Cohort generator, counterfactual truth and Monte-Carlo driver
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm
from tqdm import tqdm

from ..models.simulation import CounterfactualRecords, MCSummary, ReplicationResult, SimConfig, TruthCurves
from ..models.subject import Cohort
from ..utils.constants import ANALYSIS_DEFAULTS, SIMULATION_DEFAULTS, VALIDATION_MESSAGES
from ..utils.errors import (
    AttSurvivalError,
    ConfigError,
    EmptyTreatedPopulationError,
    FailedReplicationBudgetError,
)
from .pipeline import EstimationOptions, EstimationPipeline

logger = logging.getLogger(__name__)

# spawn key reserved for the truth stream; replications use (seed, rep_index) entropy
TRUTH_SPAWN_KEY = (0x7472757468,)


def replication_rng(seed: int, rep_index: int) -> np.random.Generator:
    """Counter-based stream for one replication; independent of execution order"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, rep_index])))


def truth_rng(seed: int) -> np.random.Generator:
    """Generator for the truth population, independent of every replication"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=TRUTH_SPAWN_KEY)))


def _exponential(u: np.ndarray, rate: np.ndarray) -> np.ndarray:
    """Inverse-CDF exponential draw from uniforms on [0, 1)"""
    return -np.log1p(-u) / rate


def draw_counterfactuals(cfg: SimConfig, m: int, rng: np.random.Generator) -> CounterfactualRecords:
    """Covariates and every potential time of m subjects"""
    Z = rng.standard_normal((m, 3))
    U = rng.random((m, 4))
    z1, zt, zd = Z[:, 0], Z[:, 1], Z[:, 2]
    rate_t = cfg.lambda_0t * np.exp(cfg.beta_10 * z1 + cfg.beta_11 * zt)
    rate_d0 = cfg.lambda_0d * np.exp(cfg.beta_20 * z1 + cfg.beta_21 * zd)
    rate_r = cfg.lambda_1d * np.exp(cfg.beta_30 * z1 + cfg.beta_31 * zd + cfg.beta_32)
    rate_c = cfg.lambda_0c * np.exp(cfg.beta_40 * z1)
    return CounterfactualRecords(
        Z=Z,
        treat_time=_exponential(U[:, 0], rate_t),
        death_untreated=_exponential(U[:, 1], rate_d0),
        residual=_exponential(U[:, 2], rate_r),
        censor_time=_exponential(U[:, 3], rate_c),
    )


def generate_cohort(cfg: SimConfig, rep_index: int = 0) -> Tuple[Cohort, CounterfactualRecords]:
    """Observed cohort and counterfactual records of one replication"""
    records = draw_counterfactuals(cfg, cfg.n, replication_rng(cfg.seed, rep_index))
    return records.to_cohort(), records


def true_att(
    cfg: SimConfig,
    t_grid: Optional[Sequence[float]] = None,
    m: int = SIMULATION_DEFAULTS["truth_m"],
    chunk: int = SIMULATION_DEFAULTS["truth_chunk"],
) -> TruthCurves:
    """
    S1*(t), S0*(t) and delta*(t) among subjects treated before death with T <= tau,
    computed from uncensored counterfactuals. Standard errors are binomial (S1*, S0*)
    and the sample deviation of the paired indicator difference (delta*).
    """
    if m < SIMULATION_DEFAULTS["min_truth_m"]:
        raise ConfigError(VALIDATION_MESSAGES["bad_config_value"].format(key="truth_m", value=m))
    times = np.asarray(cfg.times if t_grid is None else t_grid, dtype=float)
    rng = truth_rng(cfg.seed)

    population = 0
    alive1 = np.zeros(times.size)
    alive0 = np.zeros(times.size)
    diff_sq = np.zeros(times.size)
    remaining = m
    while remaining > 0:
        size = min(chunk, remaining)
        records = draw_counterfactuals(cfg, size, rng)
        keep = (records.treat_time < records.death_untreated) & (records.treat_time <= cfg.tau)
        r = records.residual[keep][:, None]
        gap = (records.death_untreated - records.treat_time)[keep][:, None]
        s1 = r > times[None, :]
        s0 = gap > times[None, :]
        population += int(keep.sum())
        alive1 += s1.sum(axis=0)
        alive0 += s0.sum(axis=0)
        diff_sq += ((s1.astype(float) - s0.astype(float)) ** 2).sum(axis=0)
        remaining -= size

    if population == 0:
        raise EmptyTreatedPopulationError(VALIDATION_MESSAGES["empty_treated_population"])

    p1 = alive1 / population
    p0 = alive0 / population
    delta = p1 - p0
    var_delta = np.clip(diff_sq / population - delta ** 2, 0.0, None)
    truth = TruthCurves(
        times=times,
        s1=p1,
        s0=p0,
        delta=delta,
        se_s1=np.sqrt(p1 * (1 - p1) / population),
        se_s0=np.sqrt(p0 * (1 - p0) / population),
        se_delta=np.sqrt(var_delta / population),
        population=population,
        m=m,
    )
    logger.info("Truth for %s: %d of %d counterfactual subjects in the treated population",
                cfg.setting, population, m)
    return truth


def estimation_options(cfg: SimConfig) -> EstimationOptions:
    return EstimationOptions(
        criterion=cfg.criterion,
        tau=cfg.tau,
        tau1=cfg.tau1,
        times=cfg.times,
        ipcw=cfg.ipcw,
        weight_cap=cfg.weight_cap,
        weight_cap_quantile=cfg.weight_cap_quantile,
    )


def run_replication(cfg: SimConfig, rep_index: int) -> ReplicationResult:
    """Generate one cohort and run the full estimation pipeline on it"""
    cohort, _ = generate_cohort(cfg, rep_index)
    try:
        result = EstimationPipeline(estimation_options(cfg)).run(cohort)
    except AttSurvivalError as e:
        logger.warning("Replication %d of %s failed: %s", rep_index, cfg.setting, e)
        return ReplicationResult(rep_index=rep_index, times=cfg.times, error=str(e))
    values = result.estimates_at(cfg.times)
    return ReplicationResult(
        rep_index=rep_index,
        times=cfg.times,
        estimates={name: v["est"] for name, v in values.items()},
        standard_errors={name: v["se"] for name, v in values.items()},
        match_rate=result.match.match_rate,
        n_pairs=len(result.match.pairs),
    )


def _replicate_batch(args) -> List[ReplicationResult]:
    """Worker entry point; module level so the process pool can pickle it"""
    cfg, indices = args
    return [run_replication(cfg, r) for r in indices]


def default_threads() -> int:
    return max(os.cpu_count() or 1, 1)


def run_replications(
    cfg: SimConfig,
    reps: int,
    threads: int = 1,
    progress: bool = True,
) -> List[ReplicationResult]:
    """All replications of one setting, ordered by replication index"""
    indices = list(range(reps))
    results: List[ReplicationResult] = []
    with tqdm(total=reps, desc=cfg.setting, unit="rep", disable=not progress) as pbar:
        if threads <= 1:
            for r in indices:
                results.append(run_replication(cfg, r))
                pbar.update(1)
        else:
            n_chunks = min(threads * 4, reps)
            chunks = [list(c) for c in np.array_split(indices, n_chunks) if len(c)]
            with ProcessPoolExecutor(max_workers=threads) as executor:
                futures = [executor.submit(_replicate_batch, (cfg, [int(i) for i in c])) for c in chunks]
                for future in as_completed(futures):
                    batch = future.result()
                    results.extend(batch)
                    pbar.update(len(batch))
    results.sort(key=lambda r: r.rep_index)
    return results


def run_mc(
    cfg: SimConfig,
    reps: int,
    threads: int = 1,
    truth: Optional[TruthCurves] = None,
    truth_m: int = SIMULATION_DEFAULTS["truth_m"],
    progress: bool = True,
    failed_budget: float = SIMULATION_DEFAULTS["failed_budget"],
) -> Tuple[MCSummary, TruthCurves]:
    """
    Monte-Carlo study of one setting against its counterfactual truth.

    Raises:
        FailedReplicationBudgetError: more than ``failed_budget`` of the replications failed
    """
    if reps < 1:
        raise ConfigError(VALIDATION_MESSAGES["bad_config_value"].format(key="reps", value=reps))
    if truth is None:
        truth = true_att(cfg, cfg.times, truth_m)

    results = run_replications(cfg, reps, threads, progress)
    failed = sum(r.failed for r in results)
    if failed > failed_budget * reps:
        raise FailedReplicationBudgetError(
            VALIDATION_MESSAGES["failed_budget"].format(failed=failed, reps=reps, budget=failed_budget),
            failed,
            reps,
        )
    if failed:
        logger.warning("%s: %d of %d replications failed and were excluded", cfg.setting, failed, reps)

    z = float(norm.ppf(0.5 + ANALYSIS_DEFAULTS["confidence_level"] / 2))
    summary = MCSummary.from_replications(cfg.setting, results, truth, z)
    logger.info("%s: %d replications, mean match rate %.3f", cfg.setting, reps, summary.match_rate_mean)
    return summary, truth
