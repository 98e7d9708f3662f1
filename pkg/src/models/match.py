"""
Matching criterion and matched-set data models
"""

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple

from ..utils.constants import VALIDATION_MESSAGES
from ..utils.errors import ConfigError


class MatchMode(str, Enum):
    PROGNOSTIC = "prognostic"
    PROPENSITY = "propensity"
    DOUBLE = "double"

    @property
    def display_name(self) -> str:
        return self.value.title()


@dataclass(frozen=True)
class MatchCriterion:
    mode: MatchMode
    xi_t: Optional[float] = None
    xi_d: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "mode", MatchMode(self.mode))
        required = {
            MatchMode.PROGNOSTIC: ("xi_d",),
            MatchMode.PROPENSITY: ("xi_t",),
            MatchMode.DOUBLE: ("xi_t", "xi_d"),
        }[self.mode]
        for name in required:
            if getattr(self, name) is None:
                raise ConfigError(VALIDATION_MESSAGES["missing_caliper"].format(mode=self.mode.value, name=name))
        for name in ("xi_t", "xi_d"):
            value = getattr(self, name)
            if value is not None and not value > 1:
                raise ConfigError(VALIDATION_MESSAGES["bad_caliper"].format(name=name, value=value))

    @property
    def uses_propensity(self) -> bool:
        """A propensity caliper applies (also as an extra filter under prognostic mode)"""
        return self.xi_t is not None

    @property
    def uses_prognostic(self) -> bool:
        return self.xi_d is not None

    def to_dict(self) -> dict:
        return {"mode": self.mode.value, "xi_t": self.xi_t, "xi_d": self.xi_d}


@dataclass(frozen=True)
class MatchedPair:
    treated_id: int
    control_id: int
    match_time: float
    log_psi_t: float
    log_psi_d: float

    def to_dict(self) -> dict:
        """Row for matches.csv"""
        return {
            "treated_id": self.treated_id,
            "control_id": self.control_id,
            "T_k": self.match_time,
            "log_psi_T": self.log_psi_t,
            "log_psi_D": self.log_psi_d,
        }


@dataclass(frozen=True)
class MatchResult:
    pairs: Tuple[MatchedPair, ...]
    unmatched_treated: Tuple[int, ...]
    n_eligible_treated: int
    tau: float

    @property
    def match_rate(self) -> float:
        """Matched share of treated subjects with T_k <= tau; 1.0 when there are none"""
        if self.n_eligible_treated == 0:
            return 1.0
        return len(self.pairs) / self.n_eligible_treated

    @property
    def matched_treated_ids(self) -> Tuple[int, ...]:
        """Treated ids that found a control, in matching order"""
        return tuple(p.treated_id for p in self.pairs)

    def control_multiplicity(self) -> Dict[int, int]:
        """Number of treated subjects each control serves"""
        return dict(Counter(p.control_id for p in self.pairs))

    def pair_for(self, treated_id: int) -> Optional[MatchedPair]:
        """Pair of a treated subject, or None when it went unmatched"""
        for pair in self.pairs:
            if pair.treated_id == treated_id:
                return pair
        return None

    def to_dict(self) -> dict:
        multiplicity = self.control_multiplicity()
        return {
            "tau": self.tau,
            "n_treated_by_tau": self.n_eligible_treated,
            "n_pairs": len(self.pairs),
            "n_unmatched": len(self.unmatched_treated),
            "unmatched_treated": list(self.unmatched_treated),
            "match_rate": self.match_rate,
            "n_distinct_controls": len(multiplicity),
            "max_control_reuse": max(multiplicity.values(), default=0),
        }
