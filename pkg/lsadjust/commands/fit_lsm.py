import argparse
import logging
from pathlib import Path

from ..config import load_config_file, resolve
from ..dataio import parse_adjacency, parse_attribute_panel, read_text
from ..dependencies import derive_seeds, staged_output
from ..errors import ConfigError, DataError
from ..lsm import dyadic_absdiff, fit_chains, pool_fits, posterior_summary
from ..outputs import RunClock, write_json, write_manifest, write_text
from ..schemas import DyadicCovariate, LsmSpec, McmcControl
from . import add_common_flags, add_model_flags, model_overrides, workers

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _parse_attr_flag(value: str) -> list[tuple[str, Path, int]]:
    """'a=s50-alcohol.dat:1,s=s50-smoke.dat:1' -> [(label, path, wave column), ...]"""
    items = []
    for chunk in filter(None, (part.strip() for part in value.split(","))):
        label, sep, rest = chunk.partition("=")
        path, colon, column = rest.rpartition(":")
        if not sep or not colon or not label or not path:
            raise ConfigError(f"Malformed --attrs entry '{chunk}', expected label=path:column")
        try:
            items.append((label, Path(path), int(column)))
        except ValueError:
            raise ConfigError(f"Column in --attrs entry '{chunk}' must be an integer")
    return items


def chain_seeds(seed: int, chains: int) -> list[int]:
    if chains < 1:
        raise ConfigError("--chains must be at least 1")
    return [seed] if chains == 1 else derive_seeds(seed, chains)


# ---------------------------------------------------------------------------
# Command
# ---------------------------------------------------------------------------


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("fit-lsm", help="Fit the latent distance model to one wave")
    add_common_flags(parser)
    parser.add_argument("--adj", type=Path, required=True, help="Adjacency matrix file")
    parser.add_argument("--wave", type=int, default=1, help="Wave index of the adjacency file")
    parser.add_argument("--attrs", default="", help="absdiff covariates as label=path:column,...")
    parser.add_argument("--d", type=int, default=None, help="Latent dimension (default: 1)")
    parser.add_argument("--chains", type=int, default=1, help="Independent chains to pool")
    parser.add_argument("--draws-csv", action="store_true", help="Also write every retained draw")
    parser.add_argument("--progress", action="store_true", help="Show a progress bar per chain")
    add_model_flags(parser, McmcControl, exclude=("seed",))
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    clock = RunClock()
    file_cfg = load_config_file(args.config)
    control = resolve(McmcControl(), file_cfg.get("mcmc"), model_overrides(args, McmcControl))
    d = args.d if args.d is not None else file_cfg.get("lsm", {}).get("d", 1)

    net = parse_adjacency(read_text(args.adj), wave=args.wave)
    inputs = [args.adj]
    covariates = []
    for label, path, column in _parse_attr_flag(args.attrs):
        panel = parse_attribute_panel(read_text(path), label)
        if panel.n != net.n:
            raise DataError(
                f"Attribute file '{path}' has {panel.n} rows, network has {net.n} nodes", kind="dimension_mismatch"
            )
        covariates.append(DyadicCovariate(label=f"absdiff.{label}", matrix=dyadic_absdiff(panel.wave(column))))
        inputs.append(path)
    spec = LsmSpec(d=d, covariates=covariates)

    fits = fit_chains(net, spec, control, chain_seeds(control.seed, args.chains), workers(args))
    fit = pool_fits(fits)

    with staged_output(args.out_dir) as out:
        write_json(out / "lsm_fit.json", fit.to_json_dict())
        write_text(out / "lsm_summary.txt", posterior_summary(fit).to_string(float_format="%.4f") + "\n")
        if args.draws_csv:
            fit.draws_frame().to_csv(out / "lsm_draws.csv", index=False)
        write_manifest(
            out,
            "fit-lsm",
            {"mcmc": control.model_dump(), "d": d, "chains": args.chains, "covariates": spec.labels},
            control.seed,
            inputs,
            clock,
        )
    return 0
