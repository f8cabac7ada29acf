import argparse
import logging

from ..config import load_config_file, resolve
from ..dependencies import staged_output
from ..outputs import RunClock, write_manifest, write_text
from ..schemas import SimConfig
from ..sim import export_files, simulate_panel
from . import add_common_flags, add_model_flags, model_overrides

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("simulate", help="Simulate a confounded network/behavior panel")
    add_common_flags(parser)
    add_model_flags(parser, SimConfig, exclude=("seed",))
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    clock = RunClock()
    file_cfg = load_config_file(args.config)
    cfg = resolve(SimConfig(), file_cfg.get("sim"), model_overrides(args, SimConfig))
    output = simulate_panel(cfg)

    with staged_output(args.out_dir) as out:
        for name, contents in export_files(output).items():
            write_text(out / name, contents)
        write_manifest(out, "simulate", {"sim": cfg.model_dump()}, cfg.seed, [], clock)
    logger.info("Simulated %d nodes over %d waves into %s", cfg.n, cfg.waves, args.out_dir)
    return 0
