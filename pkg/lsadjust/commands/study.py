import argparse
import logging

from ..config import load_config_file, resolve
from ..dependencies import staged_output
from ..outputs import RunClock, write_json, write_manifest
from ..schemas import REDUCED_CONTROLS, McmcControl, SimConfig, StudyConfig
from ..study import run_study
from . import add_common_flags, add_model_flags, model_overrides, workers

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("study", help="Monte Carlo bias study of naive vs adjusted estimates")
    add_common_flags(parser)
    parser.add_argument("--reps", type=int, default=None, help="Replications (default: 100)")
    parser.add_argument(
        "--full-controls", action="store_true", help="Use the full MCMC controls instead of the reduced ones"
    )
    parser.add_argument("--no-progress", action="store_true", help="Hide the progress bar")
    add_model_flags(parser, SimConfig, exclude=("seed",))
    add_model_flags(parser, McmcControl, exclude=("seed",))
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    clock = RunClock()
    file_cfg = load_config_file(args.config)
    sim = resolve(SimConfig(), file_cfg.get("sim"), model_overrides(args, SimConfig, seed=None))
    base = McmcControl() if args.full_controls else REDUCED_CONTROLS
    mcmc = resolve(base, file_cfg.get("mcmc"), model_overrides(args, McmcControl, seed=None))
    cfg = resolve(
        StudyConfig(sim=sim, mcmc=mcmc),
        file_cfg.get("study"),
        {"reps": args.reps, "seed": args.seed},
    )

    report = run_study(cfg, workers=workers(args), progress=not args.no_progress)

    with staged_output(args.out_dir) as out:
        write_json(out / "study_report.json", report.model_dump(mode="json"))
        report.to_summary_frame().to_csv(out / "study_summary.csv", index=False)
        write_manifest(out, "study", cfg.model_dump(mode="json"), cfg.seed, [], clock)
    logger.info(
        "Mean bias naive=%.4f (MC se %.4f), adjusted=%.4f (MC se %.4f)",
        report.naive.mean_bias,
        report.naive.mc_se,
        report.adjusted.mean_bias,
        report.adjusted.mc_se,
    )
    return 0
