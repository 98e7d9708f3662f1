"""
Cohort CSV ingestion and output file writing
"""

import json
import logging
import math
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..models.subject import Cohort, SubjectRecord
from ..utils.constants import COHORT_COLUMNS, COVARIATE_PREFIX, FLOAT_FORMAT, OUTPUT_FILES, VALIDATION_MESSAGES
from ..utils.errors import SchemaError

logger = logging.getLogger(__name__)

MC_COLUMNS = ["Setting", "t", "Quantity", "Est", "Bias", "ESD", "ASE", "CP", "Truth"]


def _is_missing(value: Any) -> bool:
    return value is None or (isinstance(value, float) and math.isnan(value)) or str(value).strip() == ""


def _sanitize(value: Any) -> Any:
    """JSON-safe copy: numpy scalars to Python, non-finite floats to null"""
    if isinstance(value, dict):
        return {str(k): _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_sanitize(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


class FileManagerService:
    """Service for reading cohorts and writing every result file into one output directory"""

    def __init__(self, base_dir: Optional[str] = None):
        self.base_dir = Path(base_dir) if base_dir is not None else Path("out")

    def setup_directories(self):
        self.base_dir.mkdir(parents=True, exist_ok=True)

    def path_for(self, kind: str) -> Path:
        """Output path of one file kind"""
        return self.base_dir / OUTPUT_FILES[kind]

    # ------------------------------------------------------------------ input

    @staticmethod
    def covariate_columns(header: Sequence[str]) -> List[str]:
        """z1..zp columns after the fixed columns; raises SchemaError on any other layout"""
        header = [h.strip() for h in header]
        fixed = len(COHORT_COLUMNS)
        if header[:fixed] != COHORT_COLUMNS:
            raise SchemaError(VALIDATION_MESSAGES["missing_header"].format(columns=",".join(COHORT_COLUMNS)), 1)
        covariates = header[fixed:]
        expected = [f"{COVARIATE_PREFIX}{j}" for j in range(1, len(covariates) + 1)]
        if covariates != expected:
            raise SchemaError(
                f"Line 1: covariate columns must be {','.join(expected) or 'absent'}, found {','.join(covariates)}",
                1)
        return covariates

    @staticmethod
    def _parse_number(text: str, line: int, column: str, integer: bool = False):
        try:
            value = float(text)
        except ValueError:
            raise SchemaError(
                VALIDATION_MESSAGES["not_a_number"].format(line=line, column=column, value=text), line, column)
        if integer:
            if not value.is_integer():
                raise SchemaError(
                    VALIDATION_MESSAGES["not_a_number"].format(line=line, column=column, value=text), line, column)
            return int(value)
        return value

    def _check_rows(self, raw: pd.DataFrame, covariates: List[str]) -> None:
        """Line-numbered schema checks on the raw text cells; the header is line 1"""
        for offset, row in enumerate(raw.itertuples(index=False), start=2):
            cells = dict(zip(raw.columns, row))
            for column in ["id", "obs_time", "death", "treated"] + covariates:
                if _is_missing(cells[column]):
                    raise SchemaError(
                        VALIDATION_MESSAGES["missing_value"].format(line=offset, column=column), offset, column)
                self._parse_number(cells[column], offset, column, integer=column in ("id", "death", "treated"))
            treated = self._parse_number(cells["treated"], offset, "treated", integer=True)
            if treated == 1 and _is_missing(cells["treat_time"]):
                raise SchemaError(
                    VALIDATION_MESSAGES["missing_value"].format(line=offset, column="treat_time"),
                    offset, "treat_time")
            # untreated rows may leave treat_time empty, but anything written there must be a number
            if not _is_missing(cells["treat_time"]):
                self._parse_number(cells["treat_time"], offset, "treat_time")

    def read_cohort(self, path: Path) -> Tuple[Cohort, List[str]]:
        """
        Read a cohort CSV: id, obs_time, death, treated, treat_time, z1..zp.

        Returns:
            The cohort (not yet validated against cohort rules) and its covariate names
        """
        path = Path(path)
        try:
            raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
        except pd.errors.EmptyDataError:
            raise SchemaError(VALIDATION_MESSAGES["missing_header"].format(columns=",".join(COHORT_COLUMNS)), 1)
        except pd.errors.ParserError as e:
            match = re.search(r"line (\d+)", str(e))
            line = int(match.group(1)) if match else None
            raise SchemaError(f"Line {line}: {e}" if line else str(e), line) from e
        except UnicodeDecodeError as e:
            line = e.object[:e.start].count(b"\n") + 1
            raise SchemaError(VALIDATION_MESSAGES["not_utf8"].format(line=line), line) from e

        covariates = self.covariate_columns(list(raw.columns))
        self._check_rows(raw, covariates)

        # second pass for the values themselves; round_trip keeps every written float exact
        frame = pd.read_csv(path, float_precision="round_trip", encoding="utf-8",
                            dtype={c: float for c in ["obs_time", "treat_time"] + covariates})
        records = []
        for row in frame.itertuples(index=False):
            cells = dict(zip(frame.columns, row))
            treated = int(cells["treated"])
            records.append(SubjectRecord(
                id=int(cells["id"]),
                obs_time=float(cells["obs_time"]),
                death=int(cells["death"]),
                treated=treated,
                treat_time=float(cells["treat_time"]) if treated == 1 else None,
                covariates=tuple(float(cells[c]) for c in covariates),
            ))
        logger.info("Read %d subjects with %d covariates from %s", len(records), len(covariates), path)
        return Cohort.from_records(records), covariates

    # ----------------------------------------------------------------- output

    def write_cohort(self, cohort: Cohort, path: Optional[Path] = None) -> Path:
        path = Path(path) if path is not None else self.path_for("cohort")
        frame = pd.DataFrame(cohort.to_records())
        frame = frame[COHORT_COLUMNS + [f"{COVARIATE_PREFIX}{j}" for j in range(1, cohort.p + 1)]]
        frame["treat_time"] = frame["treat_time"].astype(float)
        return self._write_frame(frame, path)

    def write_curves(self, curves: pd.DataFrame) -> Path:
        return self._write_frame(curves, self.path_for("curves"))

    def write_matches(self, matches: pd.DataFrame) -> Path:
        return self._write_frame(matches, self.path_for("matches"))

    def write_mc_summary(self, table: pd.DataFrame) -> Path:
        return self._write_frame(table[MC_COLUMNS], self.path_for("mc_summary"), na_rep="NA")

    def write_truth(self, table: pd.DataFrame) -> Path:
        return self._write_frame(table, self.path_for("truth"))

    def write_summary(self, summary: Dict[str, Any]) -> Path:
        """Write summary.json with NaN and inf as null"""
        path = self.path_for("summary")
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(_sanitize(summary), f, indent=2, allow_nan=False)
            f.write("\n")
        logger.info("Wrote %s", path)
        return path

    def write_text(self, kind: str, text: str) -> Path:
        path = self.path_for(kind)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.info("Wrote %s", path)
        return path

    @staticmethod
    def _write_frame(frame: pd.DataFrame, path: Path, na_rep: str = "") -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep=na_rep, encoding="utf-8")
        logger.info("Wrote %s (%d rows)", path, len(frame))
        return path
