"""
Command-line run configuration
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .match import MatchCriterion, MatchMode
from .simulation import SimConfig, table1_configs
from ..utils.constants import ANALYSIS_DEFAULTS, PRESETS, SIMULATION_DEFAULTS, VALIDATION_MESSAGES
from ..utils.errors import ConfigError
from ..services.pipeline import EstimationOptions

COMMANDS = ("estimate", "simulate", "truth", "generate")

GENERATOR_KEYS = (
    "lambda_0t", "lambda_0d", "lambda_1d", "lambda_0c",
    "beta_10", "beta_11", "beta_20", "beta_21",
    "beta_30", "beta_31", "beta_32", "beta_40",
)


def fill_calipers(mode: MatchMode, xi_t: Optional[float], xi_d: Optional[float]) -> Tuple[Optional[float], Optional[float]]:
    """Default caliper for every caliper the mode requires and the user left unset"""
    caliper = ANALYSIS_DEFAULTS["caliper"]
    if mode in (MatchMode.PROPENSITY, MatchMode.DOUBLE) and xi_t is None:
        xi_t = caliper
    if mode in (MatchMode.PROGNOSTIC, MatchMode.DOUBLE) and xi_d is None:
        xi_d = caliper
    return xi_t, xi_d


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: Optional[Path] = None
    config: Optional[Path] = None
    out: Path = Path("out")
    mode: Optional[str] = None
    xi_t: Optional[float] = None
    xi_d: Optional[float] = None
    tau: Optional[float] = None
    tau1: Optional[float] = None
    times: Optional[Tuple[float, ...]] = None
    seed: int = SIMULATION_DEFAULTS["seed"]
    reps: int = SIMULATION_DEFAULTS["reps"]
    threads: Optional[int] = None
    preset: Optional[str] = None
    n: Optional[int] = None
    truth_m: int = SIMULATION_DEFAULTS["truth_m"]
    rep_index: int = 0
    ipcw: bool = True
    weight_cap: Optional[float] = None
    weight_cap_quantile: Optional[float] = None
    report: bool = False
    generator: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(VALIDATION_MESSAGES["bad_config_value"].format(key="command", value=self.command))
        if self.command == "estimate":
            if self.input is None:
                raise ConfigError("The estimate command requires --input")
            if not Path(self.input).is_file():
                raise ConfigError(f"Input file not found: {self.input}")
        for key in ("tau", "tau1"):
            value = getattr(self, key)
            if value is not None and not value > 0:
                raise ConfigError(VALIDATION_MESSAGES["bad_config_value"].format(key=key, value=value))
        if self.reps < 1:
            raise ConfigError(VALIDATION_MESSAGES["bad_config_value"].format(key="reps", value=self.reps))
        if self.threads is not None and self.threads < 1:
            raise ConfigError(VALIDATION_MESSAGES["bad_config_value"].format(key="threads", value=self.threads))
        if self.preset is not None and self.preset != "table1" and self.preset not in PRESETS:
            raise ConfigError(VALIDATION_MESSAGES["bad_config_value"].format(key="preset", value=self.preset))
        if self.weight_cap_quantile is not None and not 0 < self.weight_cap_quantile <= 1:
            raise ConfigError(VALIDATION_MESSAGES["bad_config_value"].format(
                key="weight_cap_quantile", value=self.weight_cap_quantile))
        if self.weight_cap is not None and not self.weight_cap > 0:
            raise ConfigError(VALIDATION_MESSAGES["bad_config_value"].format(key="weight_cap", value=self.weight_cap))

    @property
    def match_mode(self) -> MatchMode:
        try:
            return MatchMode(self.mode or "prognostic")
        except ValueError:
            raise ConfigError(VALIDATION_MESSAGES["bad_config_value"].format(key="mode", value=self.mode))

    def criterion(self) -> MatchCriterion:
        mode = self.match_mode
        xi_t, xi_d = fill_calipers(mode, self.xi_t, self.xi_d)
        return MatchCriterion(mode, xi_t=xi_t, xi_d=xi_d)

    def estimation_options(self) -> EstimationOptions:
        """Options for the estimation pipeline"""
        return EstimationOptions(
            criterion=self.criterion(),
            tau=self.tau if self.tau is not None else ANALYSIS_DEFAULTS["tau"],
            tau1=self.tau1 if self.tau1 is not None else ANALYSIS_DEFAULTS["tau1"],
            times=self.times if self.times is not None else ANALYSIS_DEFAULTS["times"],
            ipcw=self.ipcw,
            weight_cap=self.weight_cap,
            weight_cap_quantile=self.weight_cap_quantile,
        )

    def _overrides(self) -> dict:
        overrides = {
            "n": self.n,
            "tau": self.tau,
            "tau1": self.tau1,
            "times": self.times,
            "seed": self.seed,
            "ipcw": self.ipcw,
            "weight_cap": self.weight_cap,
            "weight_cap_quantile": self.weight_cap_quantile,
        }
        overrides.update(self.generator)
        return overrides

    def sim_configs(self) -> List[SimConfig]:
        """Settings to simulate: the table1 block, one preset, or the explicit generator parameters"""
        overrides = self._overrides()
        if self.preset == "table1":
            return table1_configs(**overrides)

        if self.preset is not None:
            base = {**PRESETS[self.preset], "setting": self.preset}
        else:
            base = {"setting": "custom"}
        if self.mode is not None:
            base["mode"] = self.mode
        mode = self.match_mode if self.mode is not None else MatchMode(base.get("mode", "prognostic"))
        xi_t = self.xi_t if self.xi_t is not None else base.get("xi_t")
        xi_d = self.xi_d if self.xi_d is not None else base.get("xi_d")
        base["xi_t"], base["xi_d"] = fill_calipers(mode, xi_t, xi_d)
        base.update({k: v for k, v in overrides.items() if v is not None})
        return [SimConfig(**base)]
