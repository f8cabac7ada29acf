import itertools
import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from lsadjust.errors import DataError
from lsadjust.lsm import (
    PRIOR_VAR,
    align_draws,
    dyadic_absdiff,
    fit_chains,
    initialize_positions,
    log_likelihood,
    mcmc_sample,
    point_estimates,
    pool_fits,
    posterior_summary,
    spec_from_attributes,
)
from lsadjust.schemas import DyadicCovariate, LsmDraws, LsmParams, LsmSpec, McmcControl, Network

TINY = McmcControl(sample_size=20, burnin=30, interval=2, seed=3)


def _random_network(n: int, density: float, seed: int) -> Network:
    rng = np.random.default_rng(seed)
    adj = (rng.random((n, n)) < density).astype(int)
    np.fill_diagonal(adj, 0)
    return Network(adj=adj)


# ---------------------------------------------------------------------------
# Likelihood
# ---------------------------------------------------------------------------


def test_loglik_all_dyads_at_even_odds():
    net = _random_network(3, 0.5, seed=1)
    params = LsmParams(alpha=0.0, beta=[], positions=np.zeros((3, 1)))
    assert log_likelihood(net, LsmSpec(), params) == pytest.approx(6 * math.log(0.5), abs=1e-6)
    assert log_likelihood(net, LsmSpec(), params) == pytest.approx(-4.158883, abs=1e-6)


def test_loglik_single_tie():
    net = Network(adj=[[0, 1], [0, 0]])
    params = LsmParams(alpha=1.0, beta=[], positions=[[0.3], [0.3]])
    assert log_likelihood(net, LsmSpec(), params) == pytest.approx(-1.626523, abs=1e-6)


def test_loglik_invariant_to_translation_and_reflection():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(2, 10))
        d = int(rng.integers(1, 4))
        p = int(rng.integers(0, 3))
        net = _random_network(n, rng.uniform(0.1, 0.9), seed=int(rng.integers(2**31)))
        spec = LsmSpec(
            d=d,
            covariates=[
                DyadicCovariate(label=f"absdiff.x{k}", matrix=dyadic_absdiff(rng.normal(size=n))) for k in range(p)
            ],
        )
        alpha, beta = rng.normal(scale=2.0), rng.normal(size=p)
        positions = rng.normal(scale=2.0, size=(n, d))
        signs = rng.choice([-1.0, 1.0], size=d)
        base = log_likelihood(net, spec, LsmParams(alpha=alpha, beta=beta, positions=positions))
        shifted = log_likelihood(
            net, spec, LsmParams(alpha=alpha, beta=beta, positions=positions + rng.normal(scale=5.0, size=d))
        )
        flipped = log_likelihood(net, spec, LsmParams(alpha=alpha, beta=beta, positions=positions * signs))
        assert abs(base - shifted) < 1e-9
        assert abs(base - flipped) < 1e-9


def test_loglik_monotone_in_distance():
    near = LsmParams(alpha=0.0, beta=[], positions=[[0.0], [1.0], [-5.0]])
    far = LsmParams(alpha=0.0, beta=[], positions=[[0.0], [2.0], [-5.0]])
    mutual = Network(adj=[[0, 1, 0], [1, 0, 0], [0, 0, 0]])
    assert log_likelihood(mutual, LsmSpec(), far) < log_likelihood(mutual, LsmSpec(), near)

    empty = Network(adj=np.zeros((3, 3), dtype=int))
    assert log_likelihood(empty, LsmSpec(), far) > log_likelihood(empty, LsmSpec(), near)


def test_loglik_beta_length_mismatch():
    net = _random_network(3, 0.5, seed=1)
    params = LsmParams(alpha=0.0, beta=[1.0], positions=np.zeros((3, 1)))
    with pytest.raises(DataError) as exc:
        log_likelihood(net, LsmSpec(), params)
    assert exc.value.kind == "dimension_mismatch"


def test_loglik_position_shape_mismatch():
    net = _random_network(3, 0.5, seed=1)
    with pytest.raises(DataError):
        log_likelihood(net, LsmSpec(), LsmParams(alpha=0.0, beta=[], positions=np.zeros((4, 1))))


# ---------------------------------------------------------------------------
# Covariates
# ---------------------------------------------------------------------------


def test_absdiff():
    m = dyadic_absdiff([1.0, 3.0])
    assert m[0, 1] == m[1, 0] == 2.0
    assert m[0, 0] == m[1, 1] == 0.0
    assert not dyadic_absdiff(np.full(5, 2.5)).any()


def test_spec_from_attributes(small_study):
    spec = spec_from_attributes(small_study, 2, ["y", "x"], d=2)
    assert spec.labels == ["absdiff.y", "absdiff.x"]
    assert spec.d == 2
    assert spec.stacked(small_study.n).shape == (2, 6, 6)
    expected = dyadic_absdiff(small_study.attribute("y").wave(2))
    np.testing.assert_array_equal(spec.covariates[0].matrix, expected)


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------


def test_mds_mutual_pair():
    positions = initialize_positions(Network(adj=[[0, 1], [1, 0]]), d=1)
    np.testing.assert_allclose(np.sort(positions[:, 0]), [-0.5, 0.5], atol=1e-12)


def test_mds_complete_graph_centered():
    adj = np.ones((3, 3), dtype=int) - np.eye(3, dtype=int)
    positions = initialize_positions(Network(adj=adj), d=1)
    assert abs(positions.mean()) < 1e-12


def test_mds_disconnected_dyads_finite():
    adj = np.zeros((4, 4), dtype=int)
    adj[0, 1] = adj[2, 3] = 1
    positions = initialize_positions(Network(adj=adj), d=2)
    assert positions.shape == (4, 2)
    assert np.isfinite(positions).all()
    np.testing.assert_allclose(positions.mean(axis=0), 0.0, atol=1e-12)
    # the two dyads end up farther apart than their members
    assert abs(positions[0, 0] - positions[2, 0]) > abs(positions[0, 0] - positions[1, 0])


def test_mds_empty_graph_is_degenerate_but_finite():
    positions = initialize_positions(Network(adj=np.zeros((3, 3), dtype=int)), d=2)
    assert np.isfinite(positions).all()


# ---------------------------------------------------------------------------
# Alignment and point estimates
# ---------------------------------------------------------------------------


def _draws(*position_sets) -> LsmDraws:
    k = len(position_sets)
    return LsmDraws(alpha=np.zeros(k), beta=np.zeros((k, 0)), positions=np.array(position_sets, dtype=float))


def test_align_centers():
    aligned = align_draws(_draws([[1.0], [2.0], [3.0]]))
    np.testing.assert_allclose(aligned.positions[0, :, 0], [-1.0, 0.0, 1.0])


def test_align_undoes_reflection():
    aligned = align_draws(_draws([[1.0], [2.0], [4.0]], [[-1.0], [-2.0], [-4.0]]))
    np.testing.assert_allclose(aligned.positions[0], aligned.positions[1])


def test_align_undoes_rotation_in_2d():
    rng = np.random.default_rng(5)
    base = rng.normal(size=(6, 2))
    theta = 0.9
    rotation = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    aligned = align_draws(_draws(base, base @ rotation + 2.0))
    np.testing.assert_allclose(aligned.positions[1], aligned.positions[0], atol=1e-10)


def test_align_idempotent():
    rng = np.random.default_rng(6)
    draws = _draws(*rng.normal(size=(5, 7, 2)))
    once = align_draws(draws)
    twice = align_draws(once)
    np.testing.assert_allclose(twice.positions, once.positions, atol=1e-12)


def test_align_accepts_param_list():
    params = [LsmParams(alpha=0.0, beta=[], positions=[[0.0], [2.0]]) for _ in range(3)]
    assert len(align_draws(params)) == 3


def test_point_estimate_of_identical_draws():
    draw = LsmParams(alpha=-0.3, beta=[0.5, 1.5], positions=[[-1.0, 0.5], [1.0, -0.5]])
    point = point_estimates([draw, draw, draw])
    assert point.alpha == pytest.approx(-0.3)
    np.testing.assert_allclose(point.beta, [0.5, 1.5])
    np.testing.assert_allclose(point.positions, draw.positions)


def test_point_estimate_is_centered():
    rng = np.random.default_rng(7)
    point = point_estimates(align_draws(_draws(*rng.normal(loc=3.0, size=(4, 5, 2)))))
    np.testing.assert_allclose(point.positions.mean(axis=0), 0.0, atol=1e-9)


# ---------------------------------------------------------------------------
# Sampler
# ---------------------------------------------------------------------------


def test_sampler_shapes_and_acceptance(ring4):
    spec = LsmSpec(d=2, covariates=[DyadicCovariate(label="absdiff.x", matrix=dyadic_absdiff([1, 2, 2, 5]))])
    fit = mcmc_sample(ring4, spec, TINY)
    assert len(fit.samples) == TINY.sample_size
    assert fit.samples.beta.shape == (TINY.sample_size, 1)
    assert fit.samples.positions.shape == (TINY.sample_size, 4, 2)
    assert set(fit.acceptance) == {"coefficients", "positions"}
    assert all(0.0 <= rate <= 1.0 for rate in fit.acceptance.values())
    assert fit.beta_labels == ["absdiff.x"]
    np.testing.assert_allclose(fit.point.positions.mean(axis=0), 0.0, atol=1e-9)
    assert len(fit.loglik_trace) == TINY.sample_size


def test_fit_draws_match_indexed_draw(ring4):
    spec = LsmSpec(d=2, covariates=[DyadicCovariate(label="absdiff.x", matrix=dyadic_absdiff([1, 2, 2, 5]))])
    fit = mcmc_sample(ring4, spec, TINY)
    draws = fit.draws
    assert len(draws) == TINY.sample_size
    for k in (0, 7, TINY.sample_size - 1):
        one = fit.draw(k)
        assert draws[k].alpha == one.alpha == fit.samples.alpha[k]
        assert draws[k].beta.shape == (1,)
        assert draws[k].positions.shape == (4, 2)
        np.testing.assert_array_equal(draws[k].beta, one.beta)
        np.testing.assert_array_equal(draws[k].positions, one.positions)


def test_fit_draws_without_covariates(ring4):
    fit = mcmc_sample(ring4, LsmSpec(), TINY)
    assert fit.samples.beta.shape == (TINY.sample_size, 0)
    assert all(p.beta.shape == (0,) for p in fit.draws)
    assert fit.draw(3).positions.shape == (4, 1)


def test_sampler_is_deterministic(ring4):
    a = mcmc_sample(ring4, LsmSpec(), TINY)
    b = mcmc_sample(ring4, LsmSpec(), TINY)
    np.testing.assert_array_equal(a.samples.alpha, b.samples.alpha)
    np.testing.assert_array_equal(a.samples.positions, b.samples.positions)
    assert a.acceptance == b.acceptance


def test_sampler_seed_changes_chain(ring4):
    a = mcmc_sample(ring4, LsmSpec(), TINY)
    b = mcmc_sample(ring4, LsmSpec(), TINY.model_copy(update={"seed": 4}))
    assert not np.array_equal(a.samples.alpha, b.samples.alpha)


def test_frozen_sampler_keeps_initial_positions(ring4):
    control = TINY.model_copy(update={"freeze_positions": True})
    fit = mcmc_sample(ring4, LsmSpec(), control)
    assert set(fit.acceptance) == {"coefficients"}
    expected = initialize_positions(ring4, 1)
    np.testing.assert_allclose(fit.point.positions, expected - expected.mean(axis=0), atol=1e-12)


def test_init_positions_shape_checked(ring4):
    with pytest.raises(DataError):
        mcmc_sample(ring4, LsmSpec(), TINY, init_positions=np.zeros((3, 1)))


def _all_directed_networks(n: int) -> list[Network]:
    off = [(i, j) for i in range(n) for j in range(n) if i != j]
    nets = []
    for ties in itertools.product((0, 1), repeat=len(off)):
        adj = np.zeros((n, n), dtype=int)
        for (i, j), y in zip(off, ties):
            adj[i, j] = y
        nets.append(Network(adj=adj))
    return nets


ORACLE_NETWORKS = (
    _all_directed_networks(2)
    + _all_directed_networks(3)
    + [_random_network(4, density, seed=s) for s, density in enumerate(np.linspace(0.1, 0.9, 12))]
    + [Network(adj=np.zeros((4, 4), dtype=int)), Network(adj=1 - np.eye(4, dtype=int))]
)


def _alpha_posterior_by_quadrature(net: Network, positions: np.ndarray) -> tuple[float, float]:
    # wide enough for the empty and complete graphs, whose posterior follows the prior on one side
    grid = np.linspace(-60.0, 60.0, 24001)
    mask = ~np.eye(net.n, dtype=bool)
    dist = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=-1)[mask]
    y = net.adj[mask]
    eta = grid[:, None] - dist[None, :]
    logpost = (y * eta - np.logaddexp(0.0, eta)).sum(axis=1) - 0.5 * grid**2 / PRIOR_VAR
    weights = np.exp(logpost - logpost.max())
    norm = trapezoid(weights, grid)
    mean = trapezoid(grid * weights, grid) / norm
    sd = math.sqrt(trapezoid((grid - mean) ** 2 * weights, grid) / norm)
    return mean, sd


@pytest.mark.slow
@pytest.mark.parametrize("net", ORACLE_NETWORKS, ids=lambda net: "".join(map(str, net.adj.ravel())))
def test_alpha_posterior_matches_quadrature(net):
    positions = initialize_positions(net, 1)
    mean, sd = _alpha_posterior_by_quadrature(net, positions)

    # proposal tuned to the target; enough draws for a Monte Carlo error well under the tolerance
    control = McmcControl(
        sample_size=max(5000, math.ceil(1.5 * (sd / 0.0125) ** 2)),
        burnin=2000,
        interval=5,
        coef_step=2.4 * sd,
        seed=11,
        freeze_positions=True,
    )
    fit = mcmc_sample(net, LsmSpec(), control, init_positions=positions)
    assert fit.point.alpha == pytest.approx(mean, abs=0.05)
    assert fit.samples.alpha.std() == pytest.approx(sd, abs=0.05)


def test_fit_chains_and_pool(ring4):
    fits = fit_chains(ring4, LsmSpec(), TINY, seeds=[1, 2], workers=1)
    assert [f.control.seed for f in fits] == [1, 2]
    pooled = pool_fits(fits)
    assert len(pooled.samples) == 2 * TINY.sample_size
    assert pooled.control.sample_size == 2 * TINY.sample_size
    np.testing.assert_allclose(pooled.point.positions.mean(axis=0), 0.0, atol=1e-9)
    assert pool_fits(fits[:1]) is fits[0]


def test_pool_nothing():
    with pytest.raises(DataError):
        pool_fits([])


def test_posterior_summary_and_serialization(ring4):
    spec = LsmSpec(covariates=[DyadicCovariate(label="absdiff.x", matrix=dyadic_absdiff([1, 2, 2, 5]))])
    fit = mcmc_sample(ring4, spec, TINY)
    summary = posterior_summary(fit)
    assert list(summary.index) == ["alpha", "absdiff.x"]
    assert (summary["q2.5"] <= summary["q97.5"]).all()

    data = fit.to_json_dict()
    assert data["n"] == 4 and data["d"] == 1
    assert data["seed"] == TINY.seed
    again = LsmParams.from_json_dict(data)
    np.testing.assert_allclose(again.positions, fit.point.positions)

    frame = fit.draws_frame()
    assert list(frame.columns[:2]) == ["alpha", "beta_absdiff.x"]
    assert "z4_1" in frame.columns and "loglik" in frame.columns
    assert len(frame) == TINY.sample_size


# ---------------------------------------------------------------------------
# s50
# ---------------------------------------------------------------------------


@pytest.mark.s50
@pytest.mark.slow
def test_s50_wave1_positions_are_stable(s50_study):
    spec = spec_from_attributes(s50_study, 1, ["alcohol", "smoke", "sport", "drug"])
    net = s50_study.network(1)
    fits = [mcmc_sample(net, spec, McmcControl(seed=seed)) for seed in (1, 2)]
    for fit in fits:
        assert all(0.0 < rate < 1.0 for rate in fit.acceptance.values())
    corr = np.corrcoef(fits[0].point.positions[:, 0], fits[1].point.positions[:, 0])[0, 1]
    assert abs(corr) >= 0.8
