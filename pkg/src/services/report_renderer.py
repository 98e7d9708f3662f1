"""
Human-readable tables and the HTML report, rendered with Jinja2
"""

import math
import os
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
from jinja2 import Environment, FileSystemLoader, select_autoescape

from ..models.simulation import MCSummary


class ReportRendererService:
    """Service for rendering estimation and Monte-Carlo results"""

    def __init__(self, template_dir: str = None):
        if template_dir is None:
            template_dir = os.path.join(os.path.dirname(__file__), "../templates")

        self.template_dir = template_dir
        self.jinja_env = Environment(
            loader=FileSystemLoader(template_dir),
            autoescape=select_autoescape(enabled_extensions=("html.j2",), default_for_string=False),
            keep_trailing_newline=True,
        )

        # Add custom filters
        self.jinja_env.filters["num"] = self.num_filter
        self.jinja_env.filters["percent"] = self.percent_filter

    @staticmethod
    def num_filter(value: Any, digits: int = 3) -> str:
        """Fixed-point with the given decimals; NA for missing or non-finite values"""
        if value is None:
            return "NA"
        try:
            value = float(value)
        except (TypeError, ValueError):
            return str(value)
        if not math.isfinite(value):
            return "NA"
        text = f"{value:.{digits}f}"
        # no negative zero in printed tables
        return text[1:] if text.startswith("-") and float(text) == 0 else text

    @staticmethod
    def percent_filter(value: Any) -> str:
        if value is None or (isinstance(value, float) and not math.isfinite(value)):
            return "NA"
        return f"{100 * float(value):.1f}"

    @staticmethod
    def _blocks(summaries: Sequence[MCSummary]) -> List[Dict[str, Any]]:
        return [
            {**summary.to_dict(), "rows": summary.table.to_dict("records")}
            for summary in summaries
        ]

    def render_estimate_table(self, summary: Dict[str, Any], curves: pd.DataFrame,
                              times: Optional[Sequence[float]] = None) -> str:
        """3-decimal table of the estimates at the requested times"""
        rows = curves
        if times is not None:
            rows = curves[curves["t"].isin([float(t) for t in times])]
        template = self.jinja_env.get_template("estimate_table.txt.j2")
        return template.render(
            criterion=summary["criterion"],
            tau=summary["tau"],
            tau1=summary["tau1"],
            ipcw=summary["ipcw"],
            matching=summary["matching"],
            rows=rows.to_dict("records"),
            warnings=summary.get("warnings", []),
        )

    def render_mc_table(self, summaries: Sequence[MCSummary]) -> str:
        """Three-decimal Monte-Carlo table for stdout"""
        template = self.jinja_env.get_template("mc_table.txt.j2")
        return template.render(blocks=self._blocks(summaries))

    def render_html(
        self,
        title: str,
        summary: Optional[Dict[str, Any]] = None,
        curves: Optional[pd.DataFrame] = None,
        summaries: Sequence[MCSummary] = (),
        warnings: Sequence[str] = (),
    ) -> str:
        template = self.jinja_env.get_template("report.html.j2")
        return template.render(
            title=title,
            summary=summary,
            curve_rows=curves.to_dict("records") if curves is not None else [],
            blocks=self._blocks(summaries),
            warnings=list(warnings),
            generation_date=datetime.now().strftime("%d %B %Y"),
        )
