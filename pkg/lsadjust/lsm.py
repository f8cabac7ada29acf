"""
Logistic latent-distance network model.

    logodds(Z_ij = 1) = alpha + beta'x_ij - ||c_i - c_j||

fitted by random-walk Metropolis-Hastings with Normal(0, 10^2) priors on
alpha, beta and every position coordinate. Positions are identified only up to
translation, reflection and rotation, so draws are aligned before they are
summarised.
"""

import logging
import math
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.linalg import orthogonal_procrustes
from scipy.sparse.csgraph import shortest_path
from scipy.spatial.distance import pdist, squareform
from scipy.special import logit
from tqdm.auto import tqdm

from ._kernels import position_sweep
from .dependencies import get_executor, get_rng
from .errors import DataError, NumericalError
from .schemas import DyadicCovariate, LsmDraws, LsmFit, LsmParams, LsmSpec, McmcControl, Network, StudyData

logger = logging.getLogger(__name__)

PRIOR_SD = 10.0
PRIOR_VAR = PRIOR_SD**2

# Acceptance rates outside this band get a warning
ACCEPTANCE_BAND = (0.05, 0.8)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _distances(positions: np.ndarray) -> np.ndarray:
    return squareform(pdist(positions))


def _offset(coef: np.ndarray, covariates: np.ndarray) -> np.ndarray:
    """alpha + beta'x_ij for every dyad; covariates is (p, n, n)."""
    return coef[0] + np.tensordot(coef[1:], covariates, axes=1)


def _loglik(adj: np.ndarray, offset: np.ndarray, dist: np.ndarray, mask: np.ndarray) -> float:
    eta = offset - dist
    terms = adj * eta - np.logaddexp(0.0, eta)
    return float(terms[mask].sum())


def _log_prior(values: np.ndarray) -> float:
    return float(-0.5 * np.sum(values**2) / PRIOR_VAR)


def _check_positions(net: Network, positions: np.ndarray, d: int) -> np.ndarray:
    positions = np.array(positions, dtype=float)
    if positions.ndim == 1:
        positions = positions[:, None]
    if positions.shape != (net.n, d):
        raise DataError(
            f"Positions have shape {positions.shape}, expected ({net.n}, {d})", kind="dimension_mismatch"
        )
    return positions


# ---------------------------------------------------------------------------
# Likelihood and covariates
# ---------------------------------------------------------------------------


def dyadic_absdiff(attr: np.ndarray) -> np.ndarray:
    attr = np.asarray(attr, dtype=float).reshape(-1)
    return np.abs(attr[:, None] - attr[None, :])


def spec_from_attributes(study: StudyData, wave: int, labels: Sequence[str], d: int = 1) -> LsmSpec:
    """absdiff covariates of the given attributes at one wave."""
    covariates = [
        DyadicCovariate(label=f"absdiff.{label}", matrix=dyadic_absdiff(study.attribute(label).wave(wave)))
        for label in labels
    ]
    return LsmSpec(d=d, covariates=covariates)


def log_likelihood(net: Network, spec: LsmSpec, params: LsmParams) -> float:
    covariates = spec.stacked(net.n)
    if params.beta.shape[0] != covariates.shape[0]:
        raise DataError(
            f"beta has {params.beta.shape[0]} entries for {covariates.shape[0]} covariates",
            kind="dimension_mismatch",
        )
    positions = _check_positions(net, params.positions, params.positions.shape[1])
    coef = np.concatenate([[params.alpha], params.beta])
    mask = ~np.eye(net.n, dtype=bool)
    return _loglik(net.adj.astype(float), _offset(coef, covariates), _distances(positions), mask)


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------


def initialize_positions(net: Network, d: int = 1) -> np.ndarray:
    """
    Classical MDS of symmetrized geodesic distances.

    Unreachable pairs get the observed diameter + 1. Dimensions with a
    non-positive eigenvalue are left at zero. Each column is centered and its
    sign fixed so the largest-magnitude coordinate is positive.
    """
    n = net.n
    sym = ((net.adj + net.adj.T) > 0).astype(float)
    geo = shortest_path(sym, method="D", directed=False, unweighted=True)
    finite = np.isfinite(geo)
    diameter = geo[finite].max() if finite.any() else 0.0
    geo[~finite] = diameter + 1.0

    centering = np.eye(n) - np.ones((n, n)) / n
    b = -0.5 * centering @ (geo**2) @ centering
    evals, evecs = np.linalg.eigh(b)
    order = np.argsort(evals)[::-1][:d]
    evals, evecs = evals[order], evecs[:, order]

    positions = np.zeros((n, d))
    tol = 1e-10 * max(1.0, abs(evals).max(initial=0.0))
    for k in range(min(d, n)):
        if evals[k] > tol:
            positions[:, k] = evecs[:, k] * math.sqrt(evals[k])
    positions -= positions.mean(axis=0)
    for k in range(d):
        col = positions[:, k]
        if col[np.argmax(np.abs(col))] < 0:
            positions[:, k] = -col
    return positions


def _initial_alpha(net: Network, positions: np.ndarray) -> float:
    # density matched at the mean latent distance
    density = min(max(net.density, 1e-3), 1 - 1e-3)
    mask = ~np.eye(net.n, dtype=bool)
    return float(logit(density) + _distances(positions)[mask].mean())


# ---------------------------------------------------------------------------
# Alignment and summaries
# ---------------------------------------------------------------------------


def align_draws(draws: LsmDraws | Sequence[LsmParams]) -> LsmDraws:
    """
    Center every draw, flip each dimension's sign towards the first draw, and
    for d > 1 rotate every draw onto the first by orthogonal Procrustes.
    """
    if not isinstance(draws, LsmDraws):
        draws = LsmDraws.from_params(list(draws))
    centered = draws.positions - draws.positions.mean(axis=1, keepdims=True)
    reference = centered[0]

    signs = np.sign(np.einsum("snd,nd->sd", centered, reference))
    signs[signs == 0] = 1.0
    aligned = centered * signs[:, None, :]

    if aligned.shape[2] > 1:
        for s in range(1, aligned.shape[0]):
            rotation, _ = orthogonal_procrustes(aligned[s], reference)
            aligned[s] = aligned[s] @ rotation
    return LsmDraws(alpha=draws.alpha, beta=draws.beta, positions=aligned)


def point_estimates(draws: LsmDraws | Sequence[LsmParams]) -> LsmParams:
    """Coordinate-wise posterior mean of aligned draws, positions re-centered."""
    if not isinstance(draws, LsmDraws):
        draws = LsmDraws.from_params(list(draws))
    positions = draws.positions.mean(axis=0)
    positions -= positions.mean(axis=0)
    return LsmParams(alpha=float(draws.alpha.mean()), beta=draws.beta.mean(axis=0), positions=positions)


def posterior_summary(fit: LsmFit) -> pd.DataFrame:
    """Posterior mean, sd and central 95% interval of alpha and each beta."""
    names = ["alpha", *fit.beta_labels]
    values = np.column_stack([fit.samples.alpha, fit.samples.beta])
    return pd.DataFrame(
        {
            "mean": values.mean(axis=0),
            "sd": values.std(axis=0, ddof=1) if len(fit.samples) > 1 else np.zeros(len(names)),
            "q2.5": np.quantile(values, 0.025, axis=0),
            "q97.5": np.quantile(values, 0.975, axis=0),
        },
        index=names,
    )


# ---------------------------------------------------------------------------
# Sampler
# ---------------------------------------------------------------------------


def mcmc_sample(
    net: Network,
    spec: LsmSpec,
    control: McmcControl,
    init_positions: np.ndarray | None = None,
    progress: bool = False,
) -> LsmFit:
    """
    Random-walk Metropolis-Hastings for the latent distance model.

    Each iteration moves every node in turn (Gaussian step, scale pos_step/sqrt(n))
    and then proposes (alpha, beta) jointly (scale coef_step). After `burnin`
    iterations every `interval`-th state is kept. All proposal noise comes from
    one generator seeded with `control.seed`.
    """
    n, d = net.n, spec.d
    covariates = spec.stacked(n)
    p = covariates.shape[0]
    adj = np.ascontiguousarray(net.adj, dtype=float)
    mask = ~np.eye(n, dtype=bool)
    rng = get_rng(control.seed)

    if init_positions is None:
        positions = initialize_positions(net, d)
    else:
        positions = _check_positions(net, init_positions, d)
    positions = np.ascontiguousarray(positions)
    coef = np.zeros(1 + p)
    coef[0] = _initial_alpha(net, positions)

    dist = _distances(positions)
    current = _loglik(adj, _offset(coef, covariates), dist, mask)
    if not np.isfinite(current):
        raise NumericalError("Log-likelihood is not finite at the initial state")

    total = control.burnin + control.sample_size * control.interval
    pos_scale = control.pos_step / math.sqrt(n)
    alpha_draws = np.empty(control.sample_size)
    beta_draws = np.empty((control.sample_size, p))
    position_draws = np.empty((control.sample_size, n, d))
    loglik_trace = np.empty(control.sample_size)
    accepted_pos = 0
    accepted_coef = 0
    kept = 0

    for it in tqdm(range(total), disable=not progress, desc="MCMC", leave=False):
        if not control.freeze_positions:
            steps = rng.normal(scale=pos_scale, size=(n, d))
            log_u = np.log1p(-rng.random(n))
            accepted_pos += position_sweep(adj, _offset(coef, covariates), positions, steps, log_u, PRIOR_VAR)
            dist = _distances(positions)
            current = _loglik(adj, _offset(coef, covariates), dist, mask)

        proposal = coef + rng.normal(scale=control.coef_step, size=1 + p)
        candidate = _loglik(adj, _offset(proposal, covariates), dist, mask)
        log_ratio = candidate - current + _log_prior(proposal) - _log_prior(coef)
        if np.log1p(-rng.random()) < log_ratio:
            coef = proposal
            current = candidate
            accepted_coef += 1

        if it >= control.burnin and (it - control.burnin + 1) % control.interval == 0:
            alpha_draws[kept] = coef[0]
            beta_draws[kept] = coef[1:]
            position_draws[kept] = positions
            loglik_trace[kept] = current
            kept += 1

    acceptance = {"coefficients": accepted_coef / total}
    if not control.freeze_positions:
        acceptance["positions"] = accepted_pos / (total * n)
    for block, rate in acceptance.items():
        if not ACCEPTANCE_BAND[0] < rate < ACCEPTANCE_BAND[1]:
            logger.warning("Acceptance rate for %s is %.3f, outside %s; consider retuning the step", block, rate, ACCEPTANCE_BAND)

    samples = align_draws(LsmDraws(alpha=alpha_draws, beta=beta_draws, positions=position_draws))
    fit = LsmFit(
        samples=samples,
        acceptance=acceptance,
        point=point_estimates(samples),
        loglik_trace=loglik_trace,
        control=control,
        beta_labels=spec.labels,
        wave=net.wave,
    )
    logger.info(
        "Fitted latent space model on wave %d: n=%d, d=%d, draws=%d, acceptance=%s",
        net.wave,
        n,
        d,
        kept,
        {k: round(v, 3) for k, v in acceptance.items()},
    )
    return fit


def _sample_chain(args: tuple[Network, LsmSpec, McmcControl]) -> LsmFit:
    return mcmc_sample(*args)


def fit_chains(
    net: Network, spec: LsmSpec, control: McmcControl, seeds: Sequence[int], workers: int | None = None
) -> list[LsmFit]:
    """Independent chains, one per seed, returned in seed order."""
    jobs = [(net, spec, control.model_copy(update={"seed": seed})) for seed in seeds]
    with get_executor(min(workers or len(jobs), len(jobs))) as pool:
        if pool is None:
            return [_sample_chain(job) for job in jobs]
        return list(pool.map(_sample_chain, jobs))


def pool_fits(fits: Sequence[LsmFit]) -> LsmFit:
    """Combine chains: draws are re-aligned to the first chain's reference and averaged."""
    if not fits:
        raise DataError("No fits to pool", kind="empty")
    if len(fits) == 1:
        return fits[0]
    combined = align_draws(
        LsmDraws(
            alpha=np.concatenate([f.samples.alpha for f in fits]),
            beta=np.concatenate([f.samples.beta for f in fits]),
            positions=np.concatenate([f.samples.positions for f in fits]),
        )
    )
    acceptance = {
        block: float(np.mean([f.acceptance[block] for f in fits])) for block in fits[0].acceptance
    }
    return LsmFit(
        samples=combined,
        acceptance=acceptance,
        point=point_estimates(combined),
        loglik_trace=np.concatenate([f.loglik_trace for f in fits]),
        control=fits[0].control.model_copy(update={"sample_size": len(combined)}),
        beta_labels=fits[0].beta_labels,
        wave=fits[0].wave,
    )
