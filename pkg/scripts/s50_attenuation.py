#!/usr/bin/env python3
"""
Repeat the latent-space adjusted s50 fit over many seeds.

This script:
1. Loads the s50 networks and attributes
2. Fits the naive influence model once (it is deterministic)
3. For every seed, fits one latent space model per non-final wave and the adjusted model
4. Reports how often the adjusted exposure effect falls below the naive one and the
   median overestimation of the naive estimate

Usage:
    python scripts/s50_attenuation.py --data-dir PATH [--runs 20] [--seed 1] [--workers 4]
"""

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from lsadjust.config import S50_ATTRIBUTE_FILES, S50_NETWORK_FILES  # noqa: E402
from lsadjust.dataio import StudyPaths, load_study  # noqa: E402
from lsadjust.dependencies import derive_seeds  # noqa: E402
from lsadjust.errors import LsadjustError  # noqa: E402
from lsadjust.influence import compare_exposure, fit_influence  # noqa: E402
from lsadjust.lsm import mcmc_sample, spec_from_attributes  # noqa: E402
from lsadjust.schemas import InfluenceFit, InfluenceModel, McmcControl, StudyData  # noqa: E402

LSM_COVARIATES = ["alcohol", "smoke", "sport", "drug"]


def load_s50(data_dir: Path) -> StudyData:
    """Load the s50 files from one directory."""
    return load_study(
        StudyPaths(
            networks=[data_dir / name for name in S50_NETWORK_FILES],
            attributes={label: data_dir / name for label, name in S50_ATTRIBUTE_FILES.items()},
        )
    )


def adjusted_run(args: tuple[StudyData, int, McmcControl]) -> InfluenceFit:
    """Adjusted influence fit for one seed."""
    study, seed, control = args
    fits = []
    for wave, wave_seed in enumerate(derive_seeds(seed, study.waves - 1), start=1):
        spec = spec_from_attributes(study, wave, LSM_COVARIATES)
        fits.append(mcmc_sample(study.network(wave), spec, control.model_copy(update={"seed": wave_seed})))
    return fit_influence(study, lsm_fits=fits, model=InfluenceModel.adjusted)


def run_experiment(data_dir: Path, runs: int, seed: int, workers: int, control: McmcControl) -> None:
    print("🚀 Starting s50 attenuation experiment")
    print(f"  Data: {data_dir}")
    print(f"  Runs: {runs}, master seed {seed}, workers {workers}")
    print()

    study = load_s50(data_dir)
    naive = fit_influence(study, model=InfluenceModel.naive)
    b_naive = naive.coef["expo"]
    print(f"📦 Naive exposure effect: {b_naive:.5f} (se {naive.se['expo']:.5f})")

    jobs = [(study, seed + k, control) for k in range(runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            adjusted = list(pool.map(adjusted_run, jobs))
    else:
        adjusted = [adjusted_run(job) for job in jobs]

    overestimation = []
    for k, fit in enumerate(adjusted):
        summary = compare_exposure(naive, fit)
        overestimation.append(summary.overestimation_pct)
        marker = "✅" if summary.adjusted < b_naive else "⚠️ "
        print(f"  {marker} seed {seed + k}: adjusted {summary.adjusted:.5f}, overestimation {summary.overestimation_pct:.1f}%")

    below = float(np.mean([fit.coef["expo"] < b_naive for fit in adjusted]))
    print()
    print("🎉 Experiment finished")
    print(f"  Adjusted below naive in {below:.0%} of runs")
    print(f"  Median overestimation: {np.median(overestimation):.1f}% (reference: ~18%)")


def main():
    parser = argparse.ArgumentParser(description="Repeat the s50 adjusted influence fit over many seeds")
    parser.add_argument(
        "--data-dir",
        default=os.getenv("LSADJUST_S50_DIR"),
        help="Directory with the s50 files (default: $LSADJUST_S50_DIR)",
    )
    parser.add_argument("--runs", type=int, default=20, help="Number of seeds (default: 20)")
    parser.add_argument("--seed", type=int, default=1, help="First seed (default: 1)")
    parser.add_argument("--workers", type=int, default=os.cpu_count() or 1, help="Parallel runs")
    parser.add_argument("--sample-size", type=int, default=5000)
    parser.add_argument("--burnin", type=int, default=20000)
    parser.add_argument("--interval", type=int, default=10)

    args = parser.parse_args()

    if not args.data_dir:
        print("Error: s50 data directory not provided")
        print("  Use --data-dir or set LSADJUST_S50_DIR")
        sys.exit(1)

    control = McmcControl(sample_size=args.sample_size, burnin=args.burnin, interval=args.interval)
    try:
        run_experiment(Path(args.data_dir), args.runs, args.seed, args.workers, control)
    except LsadjustError as e:
        print(f"❌ Experiment failed: {e}")
        sys.exit(e.exit_code)


if __name__ == "__main__":
    main()
