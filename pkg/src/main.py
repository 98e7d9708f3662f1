"""
Main entry point for the matched IPCW ATT survival estimator
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd

from .models.run_config import GENERATOR_KEYS, RunConfig
from .services.config_loader import build_run_config
from .services.file_manager import FileManagerService
from .services.pipeline import EstimationPipeline
from .services.report_renderer import ReportRendererService
from .services.simulation import default_threads, generate_cohort, run_mc, true_att
from .services.validation import ValidationService
from .utils.constants import EXIT_CODES, MATCH_MODES, PRESETS
from .utils.errors import (
    AttSurvivalError,
    CohortValidationError,
    ConfigError,
    CoxFitError,
    FailedReplicationBudgetError,
    SchemaError,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"


def setup_logging(verbose: bool = False, quiet: bool = False, log_file: Optional[Path] = None):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    root = logging.getLogger()
    root.handlers = []
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)
    if log_file is not None:
        handler = logging.FileHandler(log_file, encoding="utf-8")
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="att-survival",
        description="Matched IPCW estimation of the treatment effect on the treated for survival "
                    "under a time-dependent treatment",
    )
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    parser.add_argument("--quiet", action="store_true", help="Warnings and errors only; no progress bar")
    parser.add_argument("--log-file", type=Path, default=None, help="Also write the log to this file")
    commands = parser.add_subparsers(dest="command", required=True)

    def common(sub: argparse.ArgumentParser):
        sub.add_argument("--config", type=Path, default=None, help="Flat YAML configuration file")
        sub.add_argument("--out", type=Path, default=None, help="Output directory (default: out)")
        sub.add_argument("--mode", choices=MATCH_MODES, default=None, help="Matching score")
        sub.add_argument("--xi-t", dest="xi_t", type=float, default=None, help="Propensity caliper (> 1)")
        sub.add_argument("--xi-d", dest="xi_d", type=float, default=None, help="Prognostic caliper (> 1)")
        sub.add_argument("--tau", type=float, default=None, help="Latest treatment time admitted for matching")
        sub.add_argument("--tau1", type=float, default=None, help="Post-treatment follow-up analysed")
        sub.add_argument("--times", default=None, help="Comma-separated evaluation times")
        sub.add_argument("--no-ipcw", dest="ipcw", action="store_const", const=False, default=None,
                         help="Unweighted matched Nelson-Aalen (every weight set to its at-risk indicator)")
        sub.add_argument("--weight-cap", dest="weight_cap", type=float, default=None,
                         help="Absolute upper bound on every weight")
        sub.add_argument("--weight-cap-quantile", dest="weight_cap_quantile", type=float, default=None,
                         help="Cap weights at this quantile of the positive weights")
        sub.add_argument("--report", action="store_const", const=True, default=None,
                         help="Also write report.html")

    def simulation(sub: argparse.ArgumentParser):
        sub.add_argument("--preset", choices=sorted(PRESETS) + ["table1"], default=None,
                         help="Generator and analysis settings")
        sub.add_argument("--seed", type=int, default=None, help="Base seed")
        sub.add_argument("--n", type=int, default=None, help="Cohort size")
        for key in GENERATOR_KEYS:
            sub.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float, default=None,
                             help=argparse.SUPPRESS)

    estimate = commands.add_parser("estimate", help="Estimate S1, S0 and delta from a cohort CSV")
    estimate.add_argument("--input", type=Path, default=None, help="Cohort CSV")
    common(estimate)

    simulate = commands.add_parser("simulate", help="Monte-Carlo study of one preset or the table1 block")
    common(simulate)
    simulation(simulate)
    simulate.add_argument("--reps", type=int, default=None, help="Replications per setting")
    simulate.add_argument("--threads", type=int, default=None, help="Worker processes (default: all cores)")
    simulate.add_argument("--truth-m", dest="truth_m", type=int, default=None,
                          help="Counterfactual subjects for the truth")

    truth = commands.add_parser("truth", help="Counterfactual S1*, S0* and delta* of a preset")
    common(truth)
    simulation(truth)
    truth.add_argument("--truth-m", dest="truth_m", type=int, default=None,
                       help="Counterfactual subjects for the truth")

    generate = commands.add_parser("generate", help="Write one simulated cohort as CSV")
    common(generate)
    simulation(generate)
    generate.add_argument("--rep-index", dest="rep_index", type=int, default=None,
                          help="Replication whose cohort is written")
    return parser


def cmd_estimate(cfg: RunConfig) -> int:
    files = FileManagerService(cfg.out)
    cohort, covariate_names = files.read_cohort(cfg.input)
    report = ValidationService.validate_cohort_report(cohort)
    for message in report["warnings"]:
        logger.warning(message)
    ValidationService.validate_cohort(cohort)

    options = cfg.estimation_options()
    result = EstimationPipeline(options, covariate_names).run(cohort)

    files.setup_directories()
    curves = result.curve_table()
    summary = result.summary()
    summary["input"] = str(cfg.input)
    files.write_curves(curves)
    files.write_matches(result.matches_table())
    files.write_summary(summary)

    renderer = ReportRendererService()
    if cfg.report:
        files.write_text("report", renderer.render_html("Matched IPCW estimates", summary=summary, curves=curves,
                                                        warnings=summary["warnings"]))
    sys.stdout.write(renderer.render_estimate_table(summary, curves, options.times))
    return EXIT_CODES["ok"]


def cmd_simulate(cfg: RunConfig) -> int:
    files = FileManagerService(cfg.out)
    threads = cfg.threads or default_threads()
    progress = logging.getLogger().getEffectiveLevel() <= logging.INFO
    summaries = []
    truths: List[pd.DataFrame] = []
    for sim in cfg.sim_configs():
        logger.info("Simulating %s: n=%d, %d replications on %d worker(s)", sim.setting, sim.n, cfg.reps, threads)
        summary, truth = run_mc(sim, cfg.reps, threads=threads, truth_m=cfg.truth_m, progress=progress)
        summaries.append(summary)
        truths.append(truth.to_frame(sim.setting))

    files.setup_directories()
    files.write_mc_summary(pd.concat([s.table for s in summaries], ignore_index=True))
    files.write_truth(pd.concat(truths, ignore_index=True))
    renderer = ReportRendererService()
    if cfg.report:
        files.write_text("report", renderer.render_html("Monte-Carlo study", summaries=summaries))
    sys.stdout.write(renderer.render_mc_table(summaries))
    return EXIT_CODES["ok"]


def cmd_truth(cfg: RunConfig) -> int:
    files = FileManagerService(cfg.out)
    frames = []
    for sim in cfg.sim_configs():
        frames.append(true_att(sim, sim.times, cfg.truth_m).to_frame(sim.setting))
    files.setup_directories()
    table = pd.concat(frames, ignore_index=True)
    files.write_truth(table)
    sys.stdout.write(table.to_string(index=False, float_format=lambda v: f"{v:.3f}") + "\n")
    return EXIT_CODES["ok"]


def cmd_generate(cfg: RunConfig) -> int:
    sims = cfg.sim_configs()
    if len(sims) != 1:
        raise ConfigError("The generate command needs a single setting, not the table1 block")
    cohort, _ = generate_cohort(sims[0], cfg.rep_index)
    files = FileManagerService(cfg.out)
    files.setup_directories()
    path = files.write_cohort(cohort)
    sys.stdout.write(f"{path}\n")
    return EXIT_CODES["ok"]


COMMAND_HANDLERS = {
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "truth": cmd_truth,
    "generate": cmd_generate,
}


def exit_code_for(error: AttSurvivalError) -> int:
    if isinstance(error, (SchemaError, ConfigError, CohortValidationError)):
        return EXIT_CODES["schema"]
    if isinstance(error, CoxFitError):
        return EXIT_CODES["cox"]
    if isinstance(error, FailedReplicationBudgetError):
        return EXIT_CODES["budget"]
    return EXIT_CODES["error"]


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main application entry point"""
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose, args.quiet, args.log_file)

    flags = {key: value for key, value in vars(args).items()
             if key not in ("command", "config", "verbose", "quiet", "log_file")}
    try:
        cfg = build_run_config(args.command, flags, args.config)
        return COMMAND_HANDLERS[cfg.command](cfg)
    except AttSurvivalError as e:
        if isinstance(e, CoxFitError):
            logger.error("%s (model: %s)", e, e.model)
        else:
            logger.error("%s", e)
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
