"""
The s50 empirical example end to end: correlations, the naive influence fit,
one latent space fit per non-final wave, the adjusted fit, and how much the
naive exposure effect overstates the adjusted one.
"""

import argparse
import logging
from pathlib import Path

from ..config import S50_ATTRIBUTE_FILES, S50_DIR, S50_NETWORK_FILES, load_config_file, resolve
from ..dataio import StudyPaths, load_study
from ..dependencies import derive_seeds, staged_output
from ..errors import ConfigError
from ..influence import (
    coefficient_table,
    compare_exposure,
    correlation_matrix,
    correlation_table,
    fit_panel,
    stack_panel,
)
from ..lsm import fit_chains, pool_fits, posterior_summary, spec_from_attributes
from ..outputs import RunClock, write_json, write_manifest, write_text
from ..schemas import AttenuationSummary, InfluenceModel, InfluenceSpec, McmcControl
from . import add_common_flags, add_model_flags, model_overrides, workers
from .fit_lsm import chain_seeds

logger = logging.getLogger(__name__)

# absdiff terms of the selection model, in the order they enter
LSM_COVARIATES = ["alcohol", "smoke", "sport", "drug"]

# Concurrent covariates in the column order of the correlation table
CORRELATION_COVARIATES = ["drug", "smoke", "sport"]


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _study_paths(args: argparse.Namespace) -> StudyPaths:
    data_dir = args.data_dir or (Path(S50_DIR) if S50_DIR else None)

    def locate(explicit: Path | None, name: str) -> Path:
        if explicit is not None:
            return explicit
        if data_dir is None:
            raise ConfigError(f"No path for {name}: pass --data-dir or set LSADJUST_S50_DIR")
        return data_dir / name

    networks = args.adj or [locate(None, name) for name in S50_NETWORK_FILES]
    attributes = {label: locate(getattr(args, label), name) for label, name in S50_ATTRIBUTE_FILES.items()}
    return StudyPaths(networks=networks, attributes=attributes)


def _attenuation_text(summary: AttenuationSummary) -> str:
    return (
        f"Exposure effect ({summary.term})\n"
        f"  naive:    {summary.naive:.5f} (se {summary.naive_se:.5f})\n"
        f"  adjusted: {summary.adjusted:.5f} (se {summary.adjusted_se:.5f})\n"
        f"  naive overstates adjusted by {summary.overestimation_pct:.1f}% "
        f"(reference: ~{summary.reference_overestimation_pct:.0f}%)\n"
        f"  adjustment reduces the naive estimate by {summary.attenuation_pct:.1f}%\n"
    )


# ---------------------------------------------------------------------------
# Command
# ---------------------------------------------------------------------------


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("s50", help="Run the s50 empirical example end to end")
    add_common_flags(parser)
    parser.add_argument("--data-dir", type=Path, default=None, help="Directory with the s50 files")
    parser.add_argument("--adj", type=Path, nargs="+", default=None, help="Adjacency files in wave order")
    for label in S50_ATTRIBUTE_FILES:
        parser.add_argument(f"--{label}", type=Path, default=None, help=f"{label} attribute file")
    parser.add_argument("--d", type=int, default=None, help="Latent dimension (default: 1)")
    parser.add_argument("--chains", type=int, default=1, help="Chains pooled per wave")
    add_model_flags(parser, McmcControl, exclude=("seed",))
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    clock = RunClock()
    file_cfg = load_config_file(args.config)
    control = resolve(McmcControl(), file_cfg.get("mcmc"), model_overrides(args, McmcControl))
    d = args.d if args.d is not None else file_cfg.get("lsm", {}).get("d", 1)
    spec = resolve(InfluenceSpec(), file_cfg.get("influence"), {})

    paths = _study_paths(args)
    study = load_study(paths)

    naive_panel = stack_panel(study, spec)
    naive = fit_panel(naive_panel, InfluenceModel.naive)
    logger.info("Naive exposure effect: %.5f (se %.5f)", naive.coef[spec.exposure_label], naive.se[spec.exposure_label])

    fits = []
    for wave, wave_seed in enumerate(derive_seeds(control.seed, study.waves - 1), start=1):
        lsm_spec = spec_from_attributes(study, wave, LSM_COVARIATES, d=d)
        chains = fit_chains(
            study.network(wave), lsm_spec, control, chain_seeds(wave_seed, args.chains), workers(args)
        )
        fits.append(pool_fits(chains))

    adjusted_panel = stack_panel(study, spec, latent=[fit.point.positions for fit in fits])
    adjusted = fit_panel(adjusted_panel, InfluenceModel.adjusted)
    summary = compare_exposure(naive, adjusted, spec.exposure_label)

    columns = [spec.outcome, spec.lag, spec.exposure_label, *CORRELATION_COVARIATES, *adjusted_panel.latent]
    corr = correlation_matrix(adjusted_panel, columns)

    with staged_output(args.out_dir) as out:
        write_text(out / "correlations.txt", correlation_table(corr))
        write_json(out / "correlations.json", {"columns": list(corr.columns), "matrix": corr.to_numpy().tolist()})
        for name, fit in (("naive_fit", naive), ("adjusted_fit", adjusted)):
            write_json(out / f"{name}.json", fit.model_dump(mode="json"))
            write_text(out / f"{name}.txt", coefficient_table(fit))
        for lsm_fit in fits:
            write_json(out / f"lsm_fit_w{lsm_fit.wave}.json", lsm_fit.to_json_dict())
            write_text(
                out / f"lsm_summary_w{lsm_fit.wave}.txt", posterior_summary(lsm_fit).to_string(float_format="%.4f") + "\n"
            )
        write_json(out / "attenuation.json", summary.model_dump())
        write_text(out / "attenuation.txt", _attenuation_text(summary))
        adjusted_panel.to_frame().to_csv(out / "panel.csv", index=False)
        write_manifest(
            out,
            "s50",
            {"mcmc": control.model_dump(), "d": d, "chains": args.chains, "influence": spec.model_dump()},
            control.seed,
            [*paths.networks, *paths.attributes.values()],
            clock,
        )
    print(_attenuation_text(summary), end="")
    return 0
