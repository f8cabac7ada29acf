import numpy as np
import pytest

from lsadjust.config import WORKERS
from lsadjust.errors import NumericalError
from lsadjust.schemas import McmcControl, ReplicationRecord, SimConfig, StudyConfig
from lsadjust.study import aggregate, run_replication, run_study, summarize

FAST = StudyConfig(
    sim=SimConfig(n=12, waves=3),
    reps=2,
    seed=5,
    mcmc=McmcControl(sample_size=20, burnin=20, interval=1),
)


def test_replication_is_deterministic():
    a = run_replication(FAST, rep_seed=11)
    b = run_replication(FAST, rep_seed=11)
    assert a == b
    assert not a.failed
    assert a.beta2_true == FAST.sim.beh_b2
    assert a.df_adjusted == a.df_naive - 2


def test_failed_replication_is_recorded():
    cfg = FAST.model_copy(update={"lsm_covariates": ["missing"]})
    record = run_replication(cfg, rep_seed=1, rep_index=3)
    assert record.failed
    assert record.rep_index == 3
    assert "missing" in record.error
    assert record.beta2_naive is None


def test_single_rep_summary_equals_record():
    report = run_study(FAST.model_copy(update={"reps": 1}), workers=1, progress=False)
    (record,) = report.records
    assert report.naive.mean_estimate == pytest.approx(record.beta2_naive)
    assert report.adjusted.mean_estimate == pytest.approx(record.beta2_adjusted)
    assert report.naive.rmse == pytest.approx(abs(record.beta2_naive - record.beta2_true))
    assert report.naive.mc_se == 0.0
    assert report.n_failed == 0


def test_study_is_reproducible():
    a = run_study(FAST, workers=1, progress=False)
    b = run_study(FAST, workers=1, progress=False)
    assert a.model_dump_json() == b.model_dump_json()
    assert [r.seed for r in a.records] == [FAST.seed, FAST.seed + 1]
    for summary in (a.naive, a.adjusted):
        assert summary.rmse >= abs(summary.mean_bias) - 1e-12


@pytest.mark.slow
def test_study_does_not_depend_on_workers():
    serial = run_study(FAST, workers=1, progress=False)
    parallel = run_study(FAST, workers=2, progress=False)
    assert serial.model_dump_json() == parallel.model_dump_json()


def test_all_failed_is_fatal():
    cfg = FAST.model_copy(update={"lsm_covariates": ["missing"]})
    with pytest.raises(NumericalError):
        run_study(cfg, workers=1, progress=False)


def _record(k: int, estimate: float | None, failed: bool = False) -> ReplicationRecord:
    if failed:
        return ReplicationRecord(rep_index=k, seed=k, beta2_true=0.3, failed=True, error="boom")
    return ReplicationRecord(
        rep_index=k,
        seed=k,
        beta2_true=0.3,
        beta2_naive=estimate,
        se_naive=0.1,
        df_naive=50,
        beta2_adjusted=estimate - 0.1,
        se_adjusted=0.1,
        df_adjusted=48,
    )


def test_aggregate_excludes_failures_and_ignores_order():
    records = [_record(0, 0.5), _record(1, None, failed=True), _record(2, 0.7)]
    report = aggregate(FAST, list(reversed(records)))
    assert [r.rep_index for r in report.records] == [0, 1, 2]
    assert report.n_failed == 1
    assert report.naive.mean_estimate == pytest.approx(0.6)
    assert report.adjusted.mean_estimate == pytest.approx(0.5)
    assert report.attenuation_ratio == pytest.approx(1.2)
    assert report == aggregate(FAST, records)

    frame = report.to_summary_frame()
    assert frame["estimator"].tolist() == ["naive", "adjusted"]
    assert frame["n_failed"].tolist() == [1, 1]


def test_summarize_coverage():
    summary = summarize(np.array([0.3, 0.5, 0.9]), np.array([0.1, 0.1, 0.1]), np.array([30, 30, 30]), truth=0.3)
    # only the first two intervals reach the truth
    assert summary.coverage == pytest.approx(2 / 3)
    assert summary.mean_bias == pytest.approx((0.0 + 0.2 + 0.6) / 3)
    assert summary.rmse == pytest.approx(np.sqrt((0.0 + 0.04 + 0.36) / 3))


@pytest.fixture(scope="module")
def null_report():
    cfg = StudyConfig(sim=SimConfig(sel_homophily_latent=0.0, beh_bc=0.0), reps=200, seed=1)
    return run_study(cfg, workers=WORKERS, progress=False)


@pytest.mark.slow
def test_intervals_cover_without_confounding(null_report):
    assert null_report.n_failed == 0
    assert null_report.naive.coverage >= 0.9
    assert null_report.adjusted.coverage >= 0.9


@pytest.mark.slow
def test_estimators_unbiased_without_confounding(null_report):
    for summary in (null_report.naive, null_report.adjusted):
        assert abs(summary.mean_bias) < 3 * summary.mc_se


@pytest.mark.slow
def test_naive_estimate_is_biased_under_confounding():
    report = run_study(StudyConfig(reps=100, seed=1), workers=WORKERS, progress=False)
    naive, adjusted = report.naive, report.adjusted
    assert naive.mean_bias > 2 * naive.mc_se
    assert abs(adjusted.mean_bias) < abs(naive.mean_bias)
    assert abs(naive.mean_bias) - abs(adjusted.mean_bias) > naive.mc_se
