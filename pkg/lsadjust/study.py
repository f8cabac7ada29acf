"""
Monte Carlo comparison of the naive and latent-space adjusted influence estimates.

Replication k uses seed master_seed + k. Inside a replication the seed is split
with numpy's SeedSequence into one stream for the simulator and one per fitted
wave, so every record depends only on its own seed and the report does not
depend on how replications were scheduled.
"""

import logging
from concurrent.futures import as_completed

import numpy as np
from scipy import stats
from tqdm.auto import tqdm

from .dependencies import derive_seeds, get_executor
from .errors import LsadjustError, NumericalError
from .influence import fit_influence
from .lsm import mcmc_sample, spec_from_attributes
from .schemas import (
    EstimatorSummary,
    InfluenceModel,
    ReplicationRecord,
    StudyConfig,
    StudyReport,
)
from .sim import simulate_panel

logger = logging.getLogger(__name__)


def run_replication(cfg: StudyConfig, rep_seed: int, rep_index: int = 0) -> ReplicationRecord:
    """Simulate, fit one latent space model per non-final wave, and fit both influence models."""
    term = cfg.influence.exposure_label
    record = ReplicationRecord(rep_index=rep_index, seed=rep_seed, beta2_true=cfg.sim.beh_b2)
    seeds = derive_seeds(rep_seed, cfg.sim.waves)
    try:
        output = simulate_panel(cfg.sim.model_copy(update={"seed": seeds[0]}))
        study = output.study
        fits = []
        for wave in range(1, study.waves):
            spec = spec_from_attributes(study, wave, cfg.lsm_covariates, d=cfg.d)
            control = cfg.mcmc.model_copy(update={"seed": seeds[wave]})
            fits.append(mcmc_sample(study.network(wave), spec, control))
        naive = fit_influence(study, cfg.influence, model=InfluenceModel.naive)
        adjusted = fit_influence(study, cfg.influence, fits, model=InfluenceModel.adjusted)
    except (LsadjustError, FloatingPointError, np.linalg.LinAlgError) as e:
        logger.warning("Replication %d (seed %d) failed: %s", rep_index, rep_seed, e)
        return record.model_copy(update={"failed": True, "error": str(e)})

    return record.model_copy(
        update={
            "beta2_naive": naive.coef[term],
            "se_naive": naive.se[term],
            "df_naive": naive.df_resid,
            "beta2_adjusted": adjusted.coef[term],
            "se_adjusted": adjusted.se[term],
            "df_adjusted": adjusted.df_resid,
        }
    )


def _run_indexed(args: tuple[StudyConfig, int, int]) -> ReplicationRecord:
    cfg, rep_seed, rep_index = args
    return run_replication(cfg, rep_seed, rep_index)


def summarize(estimates: np.ndarray, ses: np.ndarray, dfs: np.ndarray, truth: float) -> EstimatorSummary:
    bias = estimates - truth
    k = estimates.shape[0]
    critical = stats.t.ppf(0.975, dfs)
    covered = np.abs(bias) <= critical * ses
    return EstimatorSummary(
        mean_estimate=float(estimates.mean()),
        mean_bias=float(bias.mean()),
        mc_se=float(estimates.std(ddof=1) / np.sqrt(k)) if k > 1 else 0.0,
        rmse=float(np.sqrt(np.mean(bias**2))),
        coverage=float(covered.mean()),
    )


def aggregate(cfg: StudyConfig, records: list[ReplicationRecord]) -> StudyReport:
    """Order-independent summary of completed records."""
    records = sorted(records, key=lambda r: r.rep_index)
    ok = [r for r in records if not r.failed]
    n_failed = len(records) - len(ok)
    if not ok:
        raise NumericalError(f"All {len(records)} replications failed")
    if n_failed:
        logger.warning(
            "Excluded %d failed replications (seeds %s)", n_failed, [r.seed for r in records if r.failed]
        )

    truth = cfg.sim.beh_b2
    naive = summarize(
        np.array([r.beta2_naive for r in ok]),
        np.array([r.se_naive for r in ok]),
        np.array([r.df_naive for r in ok]),
        truth,
    )
    adjusted = summarize(
        np.array([r.beta2_adjusted for r in ok]),
        np.array([r.se_adjusted for r in ok]),
        np.array([r.df_adjusted for r in ok]),
        truth,
    )
    ratio = naive.mean_estimate / adjusted.mean_estimate if adjusted.mean_estimate != 0 else float("nan")
    return StudyReport(
        config=cfg,
        records=records,
        naive=naive,
        adjusted=adjusted,
        attenuation_ratio=ratio,
        n_failed=n_failed,
    )


def run_study(cfg: StudyConfig, workers: int | None = None, progress: bool = True) -> StudyReport:
    jobs = [(cfg, cfg.seed + k, k) for k in range(cfg.reps)]
    records: list[ReplicationRecord] = []
    with get_executor(min(workers or 1, cfg.reps)) as pool:
        with tqdm(total=cfg.reps, desc="Replications", disable=not progress) as bar:
            if pool is None:
                for job in jobs:
                    records.append(_run_indexed(job))
                    bar.update()
            else:
                futures = [pool.submit(_run_indexed, job) for job in jobs]
                for future in as_completed(futures):
                    records.append(future.result())
                    bar.update()

    report = aggregate(cfg, records)
    logger.info(
        "Study finished: reps=%d, failed=%d, bias naive=%.4f, bias adjusted=%.4f",
        cfg.reps,
        report.n_failed,
        report.naive.mean_bias,
        report.adjusted.mean_bias,
    )
    return report
