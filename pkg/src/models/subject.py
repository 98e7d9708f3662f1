"""
Subject and cohort data models
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np


@dataclass(frozen=True)
class SubjectRecord:
    id: int
    obs_time: float
    death: int
    treated: int
    treat_time: Optional[float] = None
    covariates: Tuple[float, ...] = ()

    @property
    def effective_treat_time(self) -> float:
        """Treatment time, +inf when no treatment was observed"""
        if self.treated and self.treat_time is not None:
            return float(self.treat_time)
        return math.inf

    @property
    def p(self) -> int:
        return len(self.covariates)

    def at_risk(self, t: float) -> bool:
        """Y_i(t): alive and uncensored at t"""
        return self.obs_time >= t

    def deaths_by(self, t: float) -> int:
        """N_i(t)"""
        return int(self.death == 1 and self.obs_time <= t)

    def treatments_by(self, t: float) -> int:
        """N_i^T(t)"""
        return int(self.treated == 1 and self.effective_treat_time <= t)

    def at_risk_untreated(self, t: float) -> bool:
        """Y_i^0(t); a subject treated exactly at t is no longer untreated"""
        return self.obs_time >= t and self.effective_treat_time > t

    def at_risk_treated(self, t: float) -> bool:
        """Y_i^1(t): treated at or before t and still under observation"""
        return self.treated == 1 and self.effective_treat_time <= t <= self.obs_time

    def to_dict(self) -> dict:
        """Convert to a flat row for CSV output"""
        row = {
            "id": self.id,
            "obs_time": self.obs_time,
            "death": self.death,
            "treated": self.treated,
            "treat_time": self.treat_time if self.treated else None,
        }
        for j, value in enumerate(self.covariates, 1):
            row[f"z{j}"] = value
        return row


@dataclass(frozen=True)
class Cohort:
    subjects: Tuple[SubjectRecord, ...]

    @classmethod
    def from_records(cls, records: Iterable[SubjectRecord]) -> "Cohort":
        """Build the column arrays from subject records"""
        return cls(tuple(records))

    @classmethod
    def from_arrays(
        cls,
        ids: Sequence[int],
        obs_time: Sequence[float],
        death: Sequence[int],
        treated: Sequence[int],
        treat_time: Sequence[float],
        covariates: np.ndarray,
    ) -> "Cohort":
        """Build from column arrays; treat_time entries of untreated subjects are ignored"""
        covariates = np.asarray(covariates, dtype=float)
        if covariates.ndim == 1:
            covariates = covariates.reshape(-1, 1)
        records = []
        for i, subject_id in enumerate(ids):
            is_treated = int(treated[i])
            records.append(SubjectRecord(
                id=int(subject_id),
                obs_time=float(obs_time[i]),
                death=int(death[i]),
                treated=is_treated,
                treat_time=float(treat_time[i]) if is_treated else None,
                covariates=tuple(float(z) for z in covariates[i]),
            ))
        return cls(tuple(records))

    def __len__(self) -> int:
        return len(self.subjects)

    @property
    def n(self) -> int:
        return len(self.subjects)

    @property
    def p(self) -> int:
        return self.subjects[0].p if self.subjects else 0

    @property
    def time_horizon(self) -> float:
        return max((s.obs_time for s in self.subjects), default=0.0)

    @cached_property
    def ids(self) -> np.ndarray:
        return np.array([s.id for s in self.subjects], dtype=np.int64)

    @cached_property
    def obs_time(self) -> np.ndarray:
        return np.array([s.obs_time for s in self.subjects], dtype=float)

    @cached_property
    def death(self) -> np.ndarray:
        return np.array([s.death for s in self.subjects], dtype=np.int8)

    @cached_property
    def treated(self) -> np.ndarray:
        return np.array([s.treated for s in self.subjects], dtype=np.int8)

    @cached_property
    def treat_time(self) -> np.ndarray:
        """Treatment times with +inf for untreated subjects"""
        return np.array([s.effective_treat_time for s in self.subjects], dtype=float)

    @cached_property
    def covariates(self) -> np.ndarray:
        return np.array([s.covariates for s in self.subjects], dtype=float).reshape(self.n, self.p)

    @cached_property
    def index_of(self) -> dict:
        return {s.id: i for i, s in enumerate(self.subjects)}

    def subject(self, subject_id: int) -> SubjectRecord:
        """Record for an id; KeyError when absent"""
        return self.subjects[self.index_of[subject_id]]

    def at_risk_untreated_mask(self, t: float) -> np.ndarray:
        """Subjects with U >= t and no treatment at or before t"""
        return (self.obs_time >= t) & (self.treat_time > t)

    def at_risk_untreated(self, t: float) -> FrozenSet[int]:
        """Ids alive, uncensored and not yet treated at t"""
        if t < 0:
            raise ValueError(f"at_risk_untreated requires t >= 0, got {t}")
        return frozenset(self.ids[self.at_risk_untreated_mask(t)].tolist())

    def treated_ids(self) -> List[int]:
        """Ids of treated subjects in cohort order"""
        return [s.id for s in self.subjects if s.treated]

    def to_records(self) -> List[dict]:
        """Plain dict rows in the cohort CSV column order"""
        return [s.to_dict() for s in self.subjects]


def at_risk_untreated(c: Cohort, t: float) -> FrozenSet[int]:
    """Module-level form of Cohort.at_risk_untreated"""
    return c.at_risk_untreated(t)
