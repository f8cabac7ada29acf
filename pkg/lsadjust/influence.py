"""
Dynamic linear-in-mean influence model

    Y_it = b0 + b1 Y_i,t-1 + b2 E_i,t-1 + b3'X_it + e_it

where E is the out-neighbour average of the lagged behavior. Rows of all
transitions are stacked latest-first, and the latent-space adjusted variant
appends the estimated latent positions of every non-final wave as covariates.
"""

import logging
from typing import Sequence

import numpy as np
import pandas as pd
from scipy import stats
from scipy.linalg import solve_triangular

from .errors import ConfigError, DataError, NumericalError
from .schemas import (
    AttenuationSummary,
    InfluenceFit,
    InfluenceModel,
    InfluencePanel,
    InfluenceSpec,
    LsmFit,
    LsmParams,
    Network,
    StudyData,
)

logger = logging.getLogger(__name__)

INTERCEPT = "(Intercept)"

# Relative tolerance on the diagonal of R below which the design counts as rank deficient
RANK_TOL = 1e-7


# ---------------------------------------------------------------------------
# Panel construction
# ---------------------------------------------------------------------------


def exposure(net: Network, behavior: np.ndarray) -> np.ndarray:
    """Average behavior of each node's out-neighbours; isolates get 0."""
    behavior = np.asarray(behavior, dtype=float).reshape(-1)
    if behavior.shape[0] != net.n:
        raise DataError(
            f"Behavior has {behavior.shape[0]} entries, network has {net.n} nodes", kind="dimension_mismatch"
        )
    degree = net.out_degree.astype(float)
    total = net.adj @ behavior
    return np.divide(total, degree, out=np.zeros(net.n), where=degree > 0)


def exposure_matrix(study: StudyData, outcome: str) -> np.ndarray:
    """n x W matrix; column w - 1 uses the wave-w network and wave-w behavior."""
    panel = study.attribute(outcome)
    return np.column_stack([exposure(study.network(w), panel.wave(w)) for w in range(1, study.waves + 1)])


def latent_labels(wave: int, d: int) -> list[str]:
    if d == 1:
        return [f"latent_pos{wave}"]
    return [f"latent_pos{wave}_{k + 1}" for k in range(d)]


def stack_panel(
    study: StudyData,
    spec: InfluenceSpec,
    exposures: np.ndarray | None = None,
    latent: Sequence[np.ndarray] | None = None,
) -> InfluencePanel:
    """
    Stack transitions W -> W-1 first, down to 2 -> 1.

    Outcome and concurrent covariates come from the outcome wave, the lag and
    the exposure from the wave before. `latent[k]` holds the positions fitted
    on wave k + 1 and is repeated across every transition.
    """
    if study.waves < 2:
        raise DataError(f"Influence panel needs at least 2 waves, study has {study.waves}", kind="too_few_waves")
    outcome = study.attribute(spec.outcome)
    if exposures is None:
        exposures = exposure_matrix(study, spec.outcome)
    n = study.n
    if exposures.shape != (n, study.waves):
        raise DataError(
            f"Exposure matrix has shape {exposures.shape}, expected ({n}, {study.waves})", kind="dimension_mismatch"
        )

    outcome_waves = list(range(study.waves, 1, -1))
    columns: dict[str, np.ndarray] = {
        spec.outcome: np.concatenate([outcome.wave(t) for t in outcome_waves]),
        spec.lag: np.concatenate([outcome.wave(t - 1) for t in outcome_waves]),
        spec.exposure_label: np.concatenate([exposures[:, t - 2] for t in outcome_waves]),
    }
    for name in spec.covariates:
        panel = study.attribute(name)
        columns[name] = np.concatenate([panel.wave(t) for t in outcome_waves])

    latent_names: list[str] = []
    for wave, positions in enumerate(latent or [], start=1):
        positions = np.asarray(positions, dtype=float)
        if positions.ndim == 1:
            positions = positions[:, None]
        if positions.shape[0] != n:
            raise DataError(
                f"Latent positions for wave {wave} have {positions.shape[0]} rows, study has {n} nodes",
                kind="dimension_mismatch",
            )
        for k, name in enumerate(latent_labels(wave, positions.shape[1])):
            columns[name] = np.tile(positions[:, k], len(outcome_waves))
            latent_names.append(name)

    columns["node"] = np.tile(np.arange(1, n + 1), len(outcome_waves))
    columns["period"] = np.repeat(np.arange(1, len(outcome_waves) + 1), n)
    return InfluencePanel(
        frame=pd.DataFrame(columns),
        outcome=spec.outcome,
        lag=spec.lag,
        exposure=spec.exposure_label,
        covariates=list(spec.covariates),
        latent=latent_names,
    )


# ---------------------------------------------------------------------------
# Estimation
# ---------------------------------------------------------------------------


def ols_fit(y: np.ndarray, x: np.ndarray, names: Sequence[str]) -> InfluenceFit:
    """
    Least squares through a QR factorization of the design (which must include the intercept).

    Standard errors come from sigma^2 (X'X)^-1 = sigma^2 R^-1 R^-T with
    sigma^2 = RSS / df; p-values are two-sided t tests on df residual degrees of freedom.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    rows, cols = x.shape
    if len(names) != cols:
        raise DataError(f"{len(names)} names for {cols} design columns", kind="dimension_mismatch")
    if y.shape[0] != rows:
        raise DataError(f"Outcome has {y.shape[0]} rows, design has {rows}", kind="dimension_mismatch")
    if rows <= cols:
        raise NumericalError(f"Need more rows than coefficients, got {rows} rows for {cols} coefficients")

    q, r = np.linalg.qr(x)
    diag = np.abs(np.diag(r))
    if diag.min() <= RANK_TOL * max(diag.max(), 1.0):
        raise NumericalError(f"Design matrix is rank deficient (columns: {', '.join(names)})")

    coef = solve_triangular(r, q.T @ y)
    fitted = x @ coef
    resid = y - fitted
    df = rows - cols
    rss = float(resid @ resid)
    sigma2 = rss / df
    r_inv = solve_triangular(r, np.eye(cols))
    se = np.sqrt(sigma2 * np.sum(r_inv**2, axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstat = coef / se
    pvalue = 2.0 * stats.t.sf(np.abs(tstat), df)

    has_intercept = bool(np.any(np.all(x == 1.0, axis=0)))
    centered = y - y.mean() if has_intercept else y
    tss = float(centered @ centered)
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    r2 = min(max(r2, 0.0), 1.0)
    model_df = cols - 1 if has_intercept else cols
    denom = rows - 1 if has_intercept else rows
    adj_r2 = 1.0 - (1.0 - r2) * denom / df

    fstat = f_pvalue = None
    if model_df > 0 and rss > 0:
        fstat = float(((tss - rss) / model_df) / sigma2)
        f_pvalue = float(stats.f.sf(fstat, model_df, df))

    quartiles = np.quantile(resid, [0.0, 0.25, 0.5, 0.75, 1.0])
    return InfluenceFit(
        coef=dict(zip(names, coef.tolist())),
        se=dict(zip(names, se.tolist())),
        tstat=dict(zip(names, tstat.tolist())),
        pvalue=dict(zip(names, pvalue.tolist())),
        r2=r2,
        adj_r2=adj_r2,
        sigma=float(np.sqrt(sigma2)),
        df_resid=df,
        nobs=rows,
        rss=rss,
        fstat=fstat,
        f_pvalue=f_pvalue,
        residual_summary=dict(zip(["min", "1q", "median", "3q", "max"], quartiles.tolist())),
    )


def correlation_matrix(panel: InfluencePanel, columns: Sequence[str]) -> pd.DataFrame:
    frame = panel.frame
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DataError(f"Panel has no columns {missing}", kind="dimension_mismatch")
    if panel.rows < 2:
        raise NumericalError("Correlations need at least 2 rows")
    values = frame[list(columns)]
    flat = [c for c in columns if np.ptp(values[c].to_numpy()) == 0]
    if flat:
        raise NumericalError(f"Columns with zero variance: {', '.join(flat)}")
    return values.corr(method="pearson")


def fit_panel(panel: InfluencePanel, model: InfluenceModel = InfluenceModel.naive) -> InfluenceFit:
    """OLS of the outcome on lag, exposure, covariates and, for the adjusted model, latent columns."""
    regressors = [panel.lag, panel.exposure, *panel.covariates]
    dropped: list[str] = []
    if model == InfluenceModel.adjusted:
        for name in panel.latent:
            if np.ptp(panel.frame[name].to_numpy()) == 0:
                logger.warning("Dropping constant adjustment column %s", name)
                dropped.append(name)
            else:
                regressors.append(name)
    design = np.column_stack([np.ones(panel.rows), panel.frame[regressors].to_numpy(dtype=float)])
    fit = ols_fit(panel.frame[panel.outcome].to_numpy(dtype=float), design, [INTERCEPT, *regressors])
    return fit.model_copy(update={"dropped": dropped})


def fit_influence(
    study: StudyData,
    spec: InfluenceSpec | None = None,
    lsm_fits: Sequence[LsmFit | LsmParams] | None = None,
    model: InfluenceModel | str = InfluenceModel.naive,
) -> InfluenceFit:
    """Exposure, stacking and OLS in one call; the adjusted model needs one fit per non-final wave."""
    spec = spec or InfluenceSpec()
    model = InfluenceModel(model)
    latent = None
    if model == InfluenceModel.adjusted:
        if lsm_fits is None or len(lsm_fits) != study.waves - 1:
            given = 0 if lsm_fits is None else len(lsm_fits)
            raise ConfigError(
                f"Adjusted model needs {study.waves - 1} latent space fits (one per non-final wave), got {given}"
            )
        latent = [f.point.positions if isinstance(f, LsmFit) else f.positions for f in lsm_fits]
    panel = stack_panel(study, spec, latent=latent)
    return fit_panel(panel, model)


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------


def _stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    if p < 0.1:
        return "."
    return ""


def coefficient_table(fit: InfluenceFit) -> str:
    """Text rendering in the layout of an lm() summary."""
    width = max(len(name) for name in fit.names)
    lines = [f"{'':<{width}}  {'Estimate':>10} {'Std. Error':>10} {'t value':>8} {'Pr(>|t|)':>10}"]
    for name in fit.names:
        lines.append(
            f"{name:<{width}}  {fit.coef[name]:>10.5f} {fit.se[name]:>10.5f} {fit.tstat[name]:>8.3f} "
            f"{fit.pvalue[name]:>10.3g} {_stars(fit.pvalue[name])}".rstrip()
        )
    lines.append("---")
    lines.append("Signif. codes:  0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1")
    lines.append("")
    lines.append(f"Residual standard error: {fit.sigma:.4f} on {fit.df_resid} degrees of freedom")
    lines.append(f"Multiple R-squared:  {fit.r2:.4f},\tAdjusted R-squared:  {fit.adj_r2:.4f}")
    if fit.fstat is not None:
        lines.append(
            f"F-statistic: {fit.fstat:.2f} on {len(fit.coef) - 1} and {fit.df_resid} DF,  p-value: {fit.f_pvalue:.4g}"
        )
    if fit.dropped:
        lines.append(f"Dropped constant columns: {', '.join(fit.dropped)}")
    return "\n".join(lines) + "\n"


def correlation_table(corr: pd.DataFrame) -> str:
    return corr.to_string(float_format=lambda v: f"{v:.4f}") + "\n"


def compare_exposure(naive: InfluenceFit, adjusted: InfluenceFit, term: str = "expo") -> AttenuationSummary:
    """How much the naive exposure coefficient overstates the adjusted one."""
    for fit in (naive, adjusted):
        if term not in fit.coef:
            raise DataError(f"Fit has no coefficient '{term}'", kind="dimension_mismatch")
    b_naive, b_adj = naive.coef[term], adjusted.coef[term]
    if b_adj == 0 or b_naive == 0:
        raise NumericalError(f"Cannot express change relative to a zero '{term}' coefficient")
    return AttenuationSummary(
        term=term,
        naive=b_naive,
        adjusted=b_adj,
        naive_se=naive.se[term],
        adjusted_se=adjusted.se[term],
        overestimation_pct=(b_naive - b_adj) / abs(b_adj) * 100.0,
        attenuation_pct=(b_naive - b_adj) / abs(b_naive) * 100.0,
    )
