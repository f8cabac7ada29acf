import argparse
import logging
from pathlib import Path

from ..config import load_config_file, resolve
from ..dataio import StudyPaths, load_study
from ..dependencies import staged_output
from ..errors import ConfigError
from ..influence import coefficient_table, fit_panel, stack_panel
from ..outputs import RunClock, read_fit_params, write_json, write_manifest, write_text
from ..schemas import InfluenceModel, InfluenceSpec
from . import add_common_flags

logger = logging.getLogger(__name__)


def _parse_attr_pairs(values: list[str]) -> dict[str, Path]:
    attributes = {}
    for value in values:
        label, sep, path = value.partition("=")
        if not sep or not label or not path:
            raise ConfigError(f"Malformed --attr '{value}', expected label=path")
        attributes[label] = Path(path)
    return attributes


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("fit-influence", help="Fit the linear-in-mean influence model")
    add_common_flags(parser)
    parser.add_argument("--adj", type=Path, nargs="+", required=True, help="Adjacency files in wave order")
    parser.add_argument("--attr", action="append", default=[], help="Attribute file as label=path (repeatable)")
    parser.add_argument("--outcome", default=None, help="Outcome attribute (default: alcohol)")
    parser.add_argument("--covariates", default=None, help="Concurrent covariates, comma separated")
    parser.add_argument("--lag-label", default=None, help="Name of the lagged outcome column")
    parser.add_argument("--adjust", type=Path, nargs="+", default=None, help="Latent space fit JSON per non-final wave")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    clock = RunClock()
    file_cfg = load_config_file(args.config)
    overrides = {
        "outcome": args.outcome,
        "covariates": args.covariates.split(",") if args.covariates else None,
        "lag_label": args.lag_label,
    }
    spec = resolve(InfluenceSpec(), file_cfg.get("influence"), overrides)

    attributes = _parse_attr_pairs(args.attr)
    study = load_study(StudyPaths(networks=args.adj, attributes=attributes))

    model = InfluenceModel.naive
    latent = None
    inputs = [*args.adj, *attributes.values()]
    if args.adjust:
        if len(args.adjust) != study.waves - 1:
            raise ConfigError(f"--adjust needs {study.waves - 1} fit files, got {len(args.adjust)}")
        latent = [read_fit_params(path).positions for path in args.adjust]
        model = InfluenceModel.adjusted
        inputs.extend(args.adjust)

    panel = stack_panel(study, spec, latent=latent)
    fit = fit_panel(panel, model)
    table = coefficient_table(fit)

    with staged_output(args.out_dir) as out:
        write_json(out / "influence_fit.json", {"model": model.value, **fit.model_dump(mode="json")})
        write_text(out / "influence_fit.txt", table)
        panel.to_frame().to_csv(out / "panel.csv", index=False)
        write_manifest(
            out, "fit-influence", {"influence": spec.model_dump(), "model": model.value}, args.seed, inputs, clock
        )
    print(table, end="")
    return 0
