import enum
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import DataError


class _ArrayModel(BaseModel):
    """Immutable model holding numpy arrays."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Study data
# ---------------------------------------------------------------------------


class Network(_ArrayModel):
    """Directed binary adjacency for one wave; adj[i, j] = 1 is a tie i -> j."""

    adj: np.ndarray
    wave: int = Field(default=1, ge=1)

    @field_validator("adj", mode="before")
    @classmethod
    def _check_adjacency(cls, value: Any) -> np.ndarray:
        arr = np.asarray(value)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DataError(f"Adjacency must be square, got shape {arr.shape}", kind="non_square")
        if arr.shape[0] < 2:
            raise DataError("Network needs at least 2 nodes", kind="non_square")
        if not np.isin(arr, (0, 1)).all():
            raise DataError("Adjacency entries must be 0 or 1", kind="non_binary")
        if np.diagonal(arr).any():
            raise DataError("Adjacency diagonal must be 0", kind="nonzero_diagonal")
        return _readonly(arr.astype(np.int8))

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    @property
    def out_degree(self) -> np.ndarray:
        return self.adj.sum(axis=1)

    @property
    def density(self) -> float:
        return float(self.adj.sum()) / (self.n * (self.n - 1))


class AttributePanel(_ArrayModel):
    """Per-node, per-wave attribute values; values[i, w - 1] is node i at wave w."""

    name: str
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _check_values(cls, value: Any) -> np.ndarray:
        arr = np.asarray(value, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise DataError(f"Attribute values must be a non-empty matrix, got shape {arr.shape}", kind="empty")
        if not np.isfinite(arr).all():
            raise DataError("Attribute values must be finite", kind="non_numeric")
        return _readonly(arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def waves(self) -> int:
        return self.values.shape[1]

    def wave(self, w: int) -> np.ndarray:
        if not 1 <= w <= self.waves:
            raise DataError(f"Attribute '{self.name}' has no wave {w}", kind="dimension_mismatch")
        return self.values[:, w - 1]


class StudyData(_ArrayModel):
    networks: list[Network]
    attributes: list[AttributePanel]

    @model_validator(mode="after")
    def _check_dimensions(self) -> "StudyData":
        if not self.networks:
            raise DataError("Study needs at least one network", kind="empty")
        n = self.networks[0].n
        waves = len(self.networks)
        for net in self.networks:
            if net.n != n:
                raise DataError(
                    f"Network for wave {net.wave} has {net.n} nodes, expected {n}", kind="dimension_mismatch"
                )
        if [net.wave for net in self.networks] != list(range(1, waves + 1)):
            raise DataError("Networks must be ordered by wave 1..W", kind="dimension_mismatch")
        names = [panel.name for panel in self.attributes]
        if len(set(names)) != len(names):
            raise DataError("Attribute labels must be unique", kind="dimension_mismatch")
        for panel in self.attributes:
            if panel.n != n:
                raise DataError(
                    f"Attribute '{panel.name}' has {panel.n} rows, network has {n} nodes",
                    kind="dimension_mismatch",
                )
            if panel.waves != waves:
                raise DataError(
                    f"Attribute '{panel.name}' has {panel.waves} waves, study has {waves}",
                    kind="dimension_mismatch",
                )
        return self

    @property
    def n(self) -> int:
        return self.networks[0].n

    @property
    def waves(self) -> int:
        return len(self.networks)

    def attribute(self, name: str) -> AttributePanel:
        for panel in self.attributes:
            if panel.name == name:
                return panel
        raise DataError(f"Unknown attribute '{name}'", kind="missing_file")

    def network(self, wave: int) -> Network:
        if not 1 <= wave <= self.waves:
            raise DataError(f"Study has no wave {wave}", kind="dimension_mismatch")
        return self.networks[wave - 1]


# ---------------------------------------------------------------------------
# Latent space model
# ---------------------------------------------------------------------------


class DyadicCovariate(_ArrayModel):
    label: str
    matrix: np.ndarray

    @field_validator("matrix", mode="before")
    @classmethod
    def _check_matrix(cls, value: Any) -> np.ndarray:
        arr = np.asarray(value, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DataError(f"Dyadic covariate must be square, got shape {arr.shape}", kind="non_square")
        if np.diagonal(arr).any():
            raise DataError("Dyadic covariate diagonal must be 0", kind="nonzero_diagonal")
        if not np.isfinite(arr).all():
            raise DataError("Dyadic covariate must be finite", kind="non_numeric")
        return _readonly(arr)


class LsmSpec(_ArrayModel):
    d: int = Field(default=1, ge=1)
    covariates: list[DyadicCovariate] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_sizes(self) -> "LsmSpec":
        sizes = {cov.matrix.shape[0] for cov in self.covariates}
        if len(sizes) > 1:
            raise DataError("Dyadic covariates disagree on node count", kind="dimension_mismatch")
        return self

    @property
    def labels(self) -> list[str]:
        return [cov.label for cov in self.covariates]

    def stacked(self, n: int) -> np.ndarray:
        """Covariates as a (p, n, n) array."""
        if not self.covariates:
            return np.zeros((0, n, n))
        if self.covariates[0].matrix.shape[0] != n:
            raise DataError(
                f"Covariates are {self.covariates[0].matrix.shape[0]}x{self.covariates[0].matrix.shape[0]}, "
                f"network has {n} nodes",
                kind="dimension_mismatch",
            )
        return np.stack([cov.matrix for cov in self.covariates])


class LsmParams(_ArrayModel):
    alpha: float
    beta: np.ndarray
    positions: np.ndarray

    @field_validator("beta", mode="before")
    @classmethod
    def _check_beta(cls, value: Any) -> np.ndarray:
        arr = np.atleast_1d(np.asarray(value, dtype=float)).reshape(-1)
        if not np.isfinite(arr).all():
            raise DataError("beta must be finite", kind="non_numeric")
        return _readonly(arr)

    @field_validator("positions", mode="before")
    @classmethod
    def _check_positions(cls, value: Any) -> np.ndarray:
        arr = np.asarray(value, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise DataError(f"positions must be an n x d matrix, got shape {arr.shape}", kind="dimension_mismatch")
        if not np.isfinite(arr).all():
            raise DataError("positions must be finite", kind="non_numeric")
        return _readonly(arr)

    @field_validator("alpha")
    @classmethod
    def _check_alpha(cls, value: float) -> float:
        if not np.isfinite(value):
            raise DataError("alpha must be finite", kind="non_numeric")
        return float(value)

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "beta": self.beta.tolist(),
            "positions": self.positions.tolist(),
        }

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "LsmParams":
        try:
            return cls(alpha=data["alpha"], beta=data.get("beta", []), positions=data["positions"])
        except KeyError as e:
            raise DataError(f"Latent space fit is missing field {e}", kind="empty")


class McmcControl(BaseModel):
    """Random-walk Metropolis controls: retained draws, burn-in, thinning and proposal scales."""

    sample_size: int = Field(default=5000, ge=1)
    burnin: int = Field(default=20000, ge=0)
    interval: int = Field(default=10, ge=1)
    pos_step: float = Field(default=5.0, gt=0)
    coef_step: float = Field(default=0.5, gt=0)
    seed: int = 0
    freeze_positions: bool = False


class LsmDraws(_ArrayModel):
    """Posterior draws stacked along the first axis."""

    alpha: np.ndarray
    beta: np.ndarray
    positions: np.ndarray

    @model_validator(mode="before")
    @classmethod
    def _as_arrays(cls, data: Any) -> Any:
        if isinstance(data, dict):
            data = dict(data)
            alpha = np.asarray(data["alpha"], dtype=float).reshape(-1)
            beta = np.asarray(data["beta"], dtype=float)
            if beta.ndim != 2:
                beta = beta.reshape(alpha.shape[0], beta.size // max(alpha.shape[0], 1))
            positions = np.asarray(data["positions"], dtype=float)
            if positions.ndim == 2:
                positions = positions[:, :, None]
            if alpha.shape[0] == 0:
                raise DataError("Draw set is empty", kind="empty")
            if positions.ndim != 3 or positions.shape[0] != alpha.shape[0]:
                raise DataError("Draw arrays disagree on draw count", kind="dimension_mismatch")
            data.update(alpha=_readonly(alpha), beta=_readonly(beta), positions=_readonly(positions))
        return data

    @classmethod
    def from_params(cls, draws: list[LsmParams]) -> "LsmDraws":
        if not draws:
            raise DataError("Draw set is empty", kind="empty")
        return cls(
            alpha=[p.alpha for p in draws],
            beta=np.stack([p.beta for p in draws]),
            positions=np.stack([p.positions for p in draws]),
        )

    def __len__(self) -> int:
        return self.alpha.shape[0]

    def __getitem__(self, k: int) -> LsmParams:
        return LsmParams(alpha=self.alpha[k], beta=self.beta[k], positions=self.positions[k])


class LsmFit(_ArrayModel):
    samples: LsmDraws
    acceptance: dict[str, float]
    point: LsmParams
    loglik_trace: np.ndarray
    control: McmcControl
    beta_labels: list[str] = Field(default_factory=list)
    wave: int | None = None

    @property
    def draws(self) -> list[LsmParams]:
        return [self.samples[k] for k in range(len(self.samples))]

    def draw(self, k: int) -> LsmParams:
        return self.samples[k]

    def to_json_dict(self) -> dict[str, Any]:
        return {
            **self.point.to_json_dict(),
            "beta_labels": self.beta_labels,
            "acceptance": self.acceptance,
            "controls": self.control.model_dump(),
            "seed": self.control.seed,
            "wave": self.wave,
            "n": int(self.point.positions.shape[0]),
            "d": int(self.point.positions.shape[1]),
        }

    def draws_frame(self) -> pd.DataFrame:
        """One row per retained draw: alpha, beta_<label>, z<node>_<dim>, loglik."""
        n, d = self.samples.positions.shape[1:]
        frame = pd.DataFrame({"alpha": self.samples.alpha})
        for k, label in enumerate(self.beta_labels):
            frame[f"beta_{label}"] = self.samples.beta[:, k]
        flat = self.samples.positions.reshape(len(self.samples), n * d)
        names = [f"z{i + 1}_{k + 1}" for i in range(n) for k in range(d)]
        frame = pd.concat([frame, pd.DataFrame(flat, columns=names)], axis=1)
        frame["loglik"] = self.loglik_trace
        return frame


# ---------------------------------------------------------------------------
# Influence model
# ---------------------------------------------------------------------------


class InfluenceModel(enum.Enum):
    naive = "naive"
    adjusted = "adjusted"


class InfluenceSpec(BaseModel):
    outcome: str = "alcohol"
    covariates: list[str] = Field(default_factory=lambda: ["smoke", "sport", "drug"])
    lag_label: str | None = None
    exposure_label: str = "expo"

    @property
    def lag(self) -> str:
        if self.lag_label:
            return self.lag_label
        return "lag_alc" if self.outcome == "alcohol" else f"lag_{self.outcome}"


class InfluencePanel(_ArrayModel):
    """Stacked regression rows, latest transition first."""

    frame: pd.DataFrame
    outcome: str
    lag: str
    exposure: str
    covariates: list[str]
    latent: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_columns(self) -> "InfluencePanel":
        needed = [self.outcome, self.lag, self.exposure, *self.covariates, *self.latent, "node", "period"]
        missing = [c for c in needed if c not in self.frame.columns]
        if missing:
            raise DataError(f"Panel is missing columns {missing}", kind="dimension_mismatch")
        return self

    @property
    def rows(self) -> int:
        return len(self.frame)

    def to_frame(self) -> pd.DataFrame:
        return self.frame.copy()


class InfluenceFit(BaseModel):
    coef: dict[str, float]
    se: dict[str, float]
    tstat: dict[str, float]
    pvalue: dict[str, float]
    r2: float = Field(ge=0.0, le=1.0)
    adj_r2: float
    sigma: float
    df_resid: int = Field(ge=1)
    nobs: int
    rss: float
    fstat: float | None = None
    f_pvalue: float | None = None
    residual_summary: dict[str, float] = Field(default_factory=dict)
    dropped: list[str] = Field(default_factory=list)

    @property
    def names(self) -> list[str]:
        return list(self.coef)


class AttenuationSummary(BaseModel):
    term: str
    naive: float
    adjusted: float
    naive_se: float
    adjusted_se: float
    overestimation_pct: float
    attenuation_pct: float
    reference_overestimation_pct: float = 18.0


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


class SimConfig(BaseModel):
    n: int = Field(default=50, ge=2)
    waves: int = Field(default=3, ge=2)
    trait_sd: float = Field(default=1.0, ge=0)
    sel_alpha: float = -1.0
    sel_homophily_obs: float = -0.5
    sel_homophily_latent: float = Field(default=1.0, ge=0)
    tie_persistence: float = 0.0
    beh_b0: float = 0.0
    beh_b1: float = 0.5
    beh_b2: float = 0.3
    beh_bx: float = 0.3
    beh_bc: float = 0.5
    noise_sd: float = Field(default=1.0, ge=0)
    seed: int = 1


class BehaviorParams(BaseModel):
    b0: float
    b1: float
    b2: float
    bx: float
    bc: float
    noise_sd: float

    @classmethod
    def from_config(cls, cfg: SimConfig) -> "BehaviorParams":
        return cls(
            b0=cfg.beh_b0, b1=cfg.beh_b1, b2=cfg.beh_b2, bx=cfg.beh_bx, bc=cfg.beh_bc, noise_sd=cfg.noise_sd
        )


class SimOutput(_ArrayModel):
    study: StudyData
    traits: np.ndarray
    true_params: BehaviorParams
    config: SimConfig


# ---------------------------------------------------------------------------
# Monte Carlo study
# ---------------------------------------------------------------------------


REDUCED_CONTROLS = McmcControl(sample_size=1000, burnin=5000, interval=5)


class StudyConfig(BaseModel):
    sim: SimConfig = Field(default_factory=SimConfig)
    reps: int = Field(default=100, ge=1)
    seed: int = 1
    mcmc: McmcControl = Field(default_factory=lambda: REDUCED_CONTROLS.model_copy())
    lsm_covariates: list[str] = Field(default_factory=lambda: ["covariate"])
    d: int = Field(default=1, ge=1)
    influence: InfluenceSpec = Field(
        default_factory=lambda: InfluenceSpec(outcome="behavior", covariates=["covariate"])
    )


class ReplicationRecord(BaseModel):
    rep_index: int
    seed: int
    beta2_true: float
    beta2_naive: float | None = None
    se_naive: float | None = None
    df_naive: int | None = None
    beta2_adjusted: float | None = None
    se_adjusted: float | None = None
    df_adjusted: int | None = None
    failed: bool = False
    error: str | None = None


class EstimatorSummary(BaseModel):
    mean_estimate: float
    mean_bias: float
    mc_se: float
    rmse: float
    coverage: float


class StudyReport(BaseModel):
    config: StudyConfig
    records: list[ReplicationRecord]
    naive: EstimatorSummary
    adjusted: EstimatorSummary
    attenuation_ratio: float
    n_failed: int

    def to_summary_frame(self) -> pd.DataFrame:
        rows = []
        for name, summary in (("naive", self.naive), ("adjusted", self.adjusted)):
            rows.append({"estimator": name, **summary.model_dump()})
        frame = pd.DataFrame(rows)
        frame["attenuation_ratio"] = self.attenuation_ratio
        frame["n_failed"] = self.n_failed
        frame["reps"] = len(self.records)
        return frame


# ---------------------------------------------------------------------------
# Run manifest
# ---------------------------------------------------------------------------


class RunManifest(BaseModel):
    subcommand: str
    config: dict[str, Any]
    seed: int | None
    inputs: dict[str, str]
    version: str
    started_at: str
    wall_clock_s: float
    outputs: list[str] = Field(default_factory=list)
