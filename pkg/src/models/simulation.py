"""
Simulation configuration and Monte-Carlo result data models
"""

import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from .match import MatchCriterion, MatchMode
from .subject import Cohort
from ..utils.constants import (
    ANALYSIS_DEFAULTS,
    FIRST_SET_BASE,
    PRESETS,
    QUANTITIES,
    SIMULATION_DEFAULTS,
    TABLE1_LADDER,
    VALIDATION_MESSAGES,
)
from ..utils.errors import ConfigError

RATE_FIELDS = ("lambda_0t", "lambda_0d", "lambda_1d", "lambda_0c")


@dataclass(frozen=True)
class SimConfig:
    """
    Exponential generator for covariates (Z1, Zt, Zd), treatment, treatment-free death,
    post-treatment residual lifetime and censoring, plus the analysis applied to each
    simulated cohort.
    """

    setting: str = "custom"
    n: int = SIMULATION_DEFAULTS["n"]
    lambda_0t: float = 0.5
    lambda_0d: float = 0.5
    lambda_1d: float = 0.7
    lambda_0c: float = 0.2
    beta_10: float = 0.15
    beta_11: float = 0.5
    beta_20: float = 0.25
    beta_21: float = 0.5
    beta_30: float = 0.20
    beta_31: float = 0.15
    beta_32: float = -0.7
    beta_40: float = 0.2
    tau: float = ANALYSIS_DEFAULTS["tau"]
    tau1: float = ANALYSIS_DEFAULTS["tau1"]
    mode: str = "prognostic"
    xi_t: Optional[float] = None
    xi_d: Optional[float] = ANALYSIS_DEFAULTS["caliper"]
    times: Tuple[float, ...] = ANALYSIS_DEFAULTS["times"]
    seed: int = SIMULATION_DEFAULTS["seed"]
    ipcw: bool = True
    weight_cap: Optional[float] = None
    weight_cap_quantile: Optional[float] = None

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(VALIDATION_MESSAGES["bad_config_value"].format(key="n", value=self.n))
        for name in RATE_FIELDS:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(VALIDATION_MESSAGES["bad_config_value"].format(key=name, value=value))
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        MatchCriterion(self.mode, xi_t=self.xi_t, xi_d=self.xi_d)

    @classmethod
    def from_preset(cls, name: str, **overrides) -> "SimConfig":
        """Preset parameters with keyword overrides"""
        if name not in PRESETS:
            raise ConfigError(VALIDATION_MESSAGES["bad_config_value"].format(key="preset", value=name))
        params = {**PRESETS[name], "setting": name}
        params.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**params)

    @property
    def criterion(self) -> MatchCriterion:
        return MatchCriterion(self.mode, xi_t=self.xi_t, xi_d=self.xi_d)

    def with_overrides(self, **overrides) -> "SimConfig":
        """Copy with the non-None overrides applied"""
        known = {f.name for f in fields(self)}
        return replace(self, **{k: v for k, v in overrides.items() if k in known and v is not None})

    def to_dict(self) -> dict:
        data = asdict(self)
        data["times"] = list(self.times)
        return data


def table1_configs(**overrides) -> List[SimConfig]:
    """
    The matching comparison block: beta_11 ladder at beta_21 = 1, then beta_21 ladder
    at beta_11 = 1, each under prognostic, propensity and double matching.
    """
    configs = []
    for varied, fixed in (("beta_11", "beta_21"), ("beta_21", "beta_11")):
        for value in TABLE1_LADDER:
            for mode in MatchMode:
                params = {**FIRST_SET_BASE, fixed: 1.0, varied: value, "mode": mode.value}
                # only the calipers the mode uses; a propensity caliper would otherwise filter prognostic matches
                if mode is MatchMode.PROGNOSTIC:
                    params["xi_t"] = None
                elif mode is MatchMode.PROPENSITY:
                    params["xi_d"] = None
                params["setting"] = f"table1 {varied}={value:g} {mode.value}"
                params.update({k: v for k, v in overrides.items() if v is not None and k != "mode"})
                configs.append(SimConfig(**params))
    return configs


@dataclass(frozen=True, eq=False)
class CounterfactualRecords:
    """Potential times of every simulated subject; D1 = T + R"""

    Z: np.ndarray
    treat_time: np.ndarray
    death_untreated: np.ndarray
    residual: np.ndarray
    censor_time: np.ndarray

    @property
    def n(self) -> int:
        return int(self.treat_time.size)

    @property
    def death_treated(self) -> np.ndarray:
        return self.treat_time + self.residual

    @property
    def observed_treated(self) -> np.ndarray:
        return self.treat_time < np.minimum(self.death_untreated, self.censor_time)

    def to_cohort(self) -> Cohort:
        """Observed cohort: follow-up ends at death or censoring, whichever comes first"""
        treated = self.observed_treated
        end = np.where(treated, self.death_treated, self.death_untreated)
        obs_time = np.minimum(end, self.censor_time)
        death = (end < self.censor_time).astype(np.int8)
        return Cohort.from_arrays(
            ids=np.arange(1, self.n + 1),
            obs_time=obs_time,
            death=death,
            treated=treated.astype(np.int8),
            treat_time=self.treat_time,
            covariates=self.Z,
        )


@dataclass(frozen=True, eq=False)
class TruthCurves:
    """Counterfactual S1*, S0* and delta* on the treated-by-tau population"""

    times: np.ndarray
    s1: np.ndarray
    s0: np.ndarray
    delta: np.ndarray
    se_s1: np.ndarray
    se_s0: np.ndarray
    se_delta: np.ndarray
    population: int
    m: int

    def value(self, quantity: str) -> np.ndarray:
        return {"S0": self.s0, "S1": self.s1, "delta": self.delta}[quantity]

    def to_frame(self, setting: str = "") -> pd.DataFrame:
        rows = []
        for quantity, _ in QUANTITIES:
            value = self.value(quantity)
            se = {"S0": self.se_s0, "S1": self.se_s1, "delta": self.se_delta}[quantity]
            for j, t in enumerate(self.times):
                rows.append({
                    "Setting": setting,
                    "t": float(t),
                    "Quantity": quantity,
                    "Truth": float(value[j]),
                    "MC_SE": float(se[j]),
                    "Population": self.population,
                    "M": self.m,
                })
        return pd.DataFrame(rows)


@dataclass(frozen=True, eq=False)
class ReplicationResult:
    rep_index: int
    times: Tuple[float, ...]
    estimates: Dict[str, np.ndarray] = field(default_factory=dict)
    standard_errors: Dict[str, np.ndarray] = field(default_factory=dict)
    match_rate: float = float("nan")
    n_pairs: int = 0
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass(frozen=True, eq=False)
class MCSummary:
    """Est / Bias / ESD / ASE / CP per quantity and time for one setting"""

    setting: str
    table: pd.DataFrame
    reps: int
    failed: int
    match_rate_mean: float
    match_rate_sd: float

    @classmethod
    def from_replications(
        cls,
        setting: str,
        results: List[ReplicationResult],
        truth: TruthCurves,
        z: float,
    ) -> "MCSummary":
        """Summarise the successful replications against the truth curves"""
        ok = [r for r in results if not r.failed]
        rows = []
        for quantity, _ in QUANTITIES:
            est = np.array([r.estimates[quantity] for r in ok]).reshape(len(ok), truth.times.size)
            se = np.array([r.standard_errors[quantity] for r in ok]).reshape(len(ok), truth.times.size)
            true = truth.value(quantity)
            covered = np.abs(est - true[None, :]) <= z * se
            for j, t in enumerate(truth.times):
                rows.append({
                    "Setting": setting,
                    "t": float(t),
                    "Quantity": quantity,
                    "Est": float(est[:, j].mean()) if ok else float("nan"),
                    "Bias": float(est[:, j].mean() - true[j]) if ok else float("nan"),
                    # a single replication has no spread
                    "ESD": float(est[:, j].std(ddof=1)) if len(ok) > 1 else float("nan"),
                    "ASE": float(se[:, j].mean()) if ok else float("nan"),
                    "CP": float(covered[:, j].mean()) if ok else float("nan"),
                    "Truth": float(true[j]),
                })
        rates = np.array([r.match_rate for r in ok], dtype=float)
        return cls(
            setting=setting,
            table=pd.DataFrame(rows),
            reps=len(results),
            failed=len(results) - len(ok),
            match_rate_mean=float(rates.mean()) if rates.size else float("nan"),
            match_rate_sd=float(rates.std(ddof=1)) if rates.size > 1 else float("nan"),
        )

    def row(self, quantity: str, t: float) -> pd.Series:
        """Est, Bias, ESD, ASE and CP of one quantity at one time"""
        table = self.table
        match = table[(table["Quantity"] == quantity) & np.isclose(table["t"], t)]
        return match.iloc[0]

    def to_dict(self) -> dict:
        return {
            "setting": self.setting,
            "reps": self.reps,
            "failed": self.failed,
            "match_rate_mean": self.match_rate_mean,
            "match_rate_sd": self.match_rate_sd,
        }
