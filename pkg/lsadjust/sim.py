"""
Confounded co-evolution of networks and behavior.

A time-invariant trait c_i drives both tie formation

    logodds(Z_ijt = 1) = sel_alpha + sel_homophily_obs |X_i - X_j|
                         - sel_homophily_latent |c_i - c_j| (+ tie_persistence Z_ij,t-1)

and behavior

    Y_it = b0 + b1 Y_i,t-1 + b2 E_i,t-1 + bx X_i + bc c_i + e_it

so leaving c out of the influence regression biases b2.
"""

import json
import logging

import numpy as np
from scipy.special import expit

from .dataio import serialize_attribute_panel, serialize_network
from .dependencies import get_rng
from .influence import exposure
from .schemas import AttributePanel, BehaviorParams, Network, SimConfig, SimOutput, StudyData

logger = logging.getLogger(__name__)

BEHAVIOR = "behavior"
COVARIATE = "covariate"


def draw_traits(n: int, trait_sd: float, rng: np.random.Generator) -> np.ndarray:
    return rng.normal(0.0, trait_sd, size=n)


def tie_probabilities(
    traits: np.ndarray, covariate: np.ndarray, cfg: SimConfig, previous: Network | None = None
) -> np.ndarray:
    """Probability of every ordered dyad; the diagonal is 0."""
    traits = np.asarray(traits, dtype=float)
    covariate = np.asarray(covariate, dtype=float)
    logodds = (
        cfg.sel_alpha
        + cfg.sel_homophily_obs * np.abs(covariate[:, None] - covariate[None, :])
        - cfg.sel_homophily_latent * np.abs(traits[:, None] - traits[None, :])
    )
    if previous is not None and cfg.tie_persistence:
        logodds = logodds + cfg.tie_persistence * previous.adj
    prob = expit(logodds)
    np.fill_diagonal(prob, 0.0)
    return prob


def simulate_network(
    traits: np.ndarray,
    covariate: np.ndarray,
    cfg: SimConfig,
    rng: np.random.Generator,
    previous: Network | None = None,
    wave: int = 1,
) -> Network:
    """Independent Bernoulli draw of every ordered dyad."""
    prob = tie_probabilities(traits, covariate, cfg, previous)
    adj = (rng.random(prob.shape) < prob).astype(np.int8)
    np.fill_diagonal(adj, 0)
    return Network(adj=adj, wave=wave)


def simulate_behavior(
    prev: np.ndarray,
    net: Network,
    traits: np.ndarray,
    covariate: np.ndarray,
    cfg: SimConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    prev = np.asarray(prev, dtype=float)
    return (
        cfg.beh_b0
        + cfg.beh_b1 * prev
        + cfg.beh_b2 * exposure(net, prev)
        + cfg.beh_bx * np.asarray(covariate, dtype=float)
        + cfg.beh_bc * np.asarray(traits, dtype=float)
        + rng.normal(0.0, cfg.noise_sd, size=prev.shape[0])
    )


def simulate_panel(cfg: SimConfig) -> SimOutput:
    """
    Traits, a fixed covariate and wave-1 behavior (bc * c + noise) are drawn
    first; then every wave gets a fresh network and, from wave 2 on, behavior
    updated over the previous wave's network.
    """
    rng = get_rng(cfg.seed)
    traits = draw_traits(cfg.n, cfg.trait_sd, rng)
    covariate = rng.normal(0.0, 1.0, size=cfg.n)
    behavior = [cfg.beh_bc * traits + rng.normal(0.0, cfg.noise_sd, size=cfg.n)]

    networks: list[Network] = []
    for t in range(1, cfg.waves + 1):
        previous = networks[-1] if networks else None
        networks.append(simulate_network(traits, covariate, cfg, rng, previous=previous, wave=t))
        if t >= 2:
            behavior.append(simulate_behavior(behavior[-1], networks[t - 2], traits, covariate, cfg, rng))

    study = StudyData(
        networks=networks,
        attributes=[
            AttributePanel(name=BEHAVIOR, values=np.column_stack(behavior)),
            AttributePanel(name=COVARIATE, values=np.tile(covariate[:, None], (1, cfg.waves))),
        ],
    )
    logger.debug(
        "Simulated panel: n=%d, waves=%d, densities=%s",
        cfg.n,
        cfg.waves,
        [round(net.density, 3) for net in networks],
    )
    return SimOutput(study=study, traits=traits, true_params=BehaviorParams.from_config(cfg), config=cfg)


def export_files(output: SimOutput) -> dict[str, str]:
    """File name -> contents in the formats the readers accept, plus a JSON sidecar."""
    files = {f"net_w{net.wave}.txt": serialize_network(net) for net in output.study.networks}
    for panel in output.study.attributes:
        files[f"{panel.name}.dat"] = serialize_attribute_panel(panel)
    files["sidecar.json"] = json.dumps(
        {
            "traits": output.traits.tolist(),
            "true_params": output.true_params.model_dump(),
            "config": output.config.model_dump(),
        },
        indent=2,
    )
    return files
