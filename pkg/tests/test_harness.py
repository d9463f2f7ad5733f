import numpy as np
import pytest

from subgamelab import (ExperimentRecord, LearnerConfig, MetricConfig,
                        RecordRow, RunConfig, SamplerConfig,
                        coverage_experiment, joint_action_coverage,
                        parse_config, replicate_fig2, run_experiment,
                        samples_to_converge)
from subgamelab.harness import fig2_run_config, fig2_to_csv

FAST_LEARNER = LearnerConfig(lr=1.0, lr_decay=None, epsilon=1.0)


def rps_config(method="self_play", n=1, seeds=(0,), budget=5_000, **kw):
    return RunConfig(env="rps", env_params={"rps_n": n}, method=method,
                     learner=FAST_LEARNER, seeds=seeds, sample_budget=budget,
                     eval_every=50, **kw)


def test_self_play_converges_on_rps1():
    record = run_experiment(rps_config(budget=10_000))
    assert samples_to_converge(record, 1e-2) is not None
    assert record.rows[-1].q_error < 1e-2


def test_rows_track_strictly_increasing_samples():
    record = run_experiment(rps_config(n=3, budget=3_000, seeds=(0, 1)))
    for seed in (0, 1):
        samples = [r.samples_consumed for r in record.filter_seed(seed).rows]
        assert samples == sorted(samples)
        assert len(set(samples)) == len(samples)


def test_row_count_tracks_eval_grid():
    cfg = RunConfig(env="rps", env_params={"rps_n": 2}, method="self_play",
                    learner=LearnerConfig(lr=1e-9, lr_decay=None, epsilon=1.0),
                    seeds=(0,), sample_budget=1_000, eval_every=100,
                    convergence_threshold=1e-12)
    record = run_experiment(cfg)  # never converges; runs out the budget
    assert len(record.rows) == pytest.approx(10, abs=1)


def test_sacl_with_p_zero_degenerates_to_self_play():
    shared = dict(n=3, seeds=(0, 1), budget=4_000)
    rec_sp = run_experiment(rps_config("self_play", **shared))
    rec_cl = run_experiment(rps_config(
        "sacl", metric=MetricConfig(variant="uniform"),
        sampler=SamplerConfig(p=0.0), **shared))
    metrics_sp = [(r.seed, r.samples_consumed, r.q_error, r.exploitability)
                  for r in rec_sp.rows]
    metrics_cl = [(r.seed, r.samples_consumed, r.q_error, r.exploitability)
                  for r in rec_cl.rows]
    assert metrics_sp == metrics_cl


def test_full_access_order_beats_self_play_on_rps4():
    sp = run_experiment(rps_config("self_play", n=4, budget=60_000))
    fa = run_experiment(rps_config("full_access_order", n=4, budget=60_000))
    sp_samples = samples_to_converge(sp, 1e-2)
    fa_samples = samples_to_converge(fa, 1e-2)
    assert fa_samples is not None and sp_samples is not None
    assert fa_samples < sp_samples


def test_records_are_reproducible_excluding_wall_clock():
    cfg = rps_config("sacl", n=2, seeds=(0, 1, 2), budget=3_000,
                     metric=MetricConfig(variant="full"),
                     sampler=SamplerConfig(p=0.7))
    csv_a = run_experiment(cfg).to_csv()
    csv_b = run_experiment(cfg).to_csv()

    def strip_wall_clock(text):
        return [",".join(line.split(",")[:-1]) for line in text.splitlines()]

    assert strip_wall_clock(csv_a) == strip_wall_clock(csv_b)


def test_samples_to_converge_edge_cases():
    rows = [RecordRow(0, "self_play", "rps", 100, 0.5, 0.1, 0, 0.0),
            RecordRow(0, "self_play", "rps", 200, 0.005, 0.0, 0, 0.0)]
    assert samples_to_converge(ExperimentRecord(rows), 1e-2) == 200
    assert samples_to_converge(ExperimentRecord(rows[:1]), 1.0) == 100
    assert samples_to_converge(ExperimentRecord(rows), 1e-3) is None
    with pytest.raises(ValueError):
        samples_to_converge(ExperimentRecord([]), 1e-2)


def test_coverage_experiment_n2_constant():
    assert coverage_experiment(2, seeds=200) == pytest.approx(3.0, abs=0.5)
    with pytest.raises(ValueError):
        coverage_experiment(1, seeds=10)


def test_joint_action_coverage_quick():
    # full 1000-seed constant is pinned in the acceptance suite
    assert joint_action_coverage(seeds=200) == pytest.approx(25.46, abs=2.0)


def test_replicate_fig2_smoke_and_csv():
    rows = replicate_fig2(n_max=2, seeds=2)
    assert len(rows) == 6
    methods = {r["method"] for r in rows}
    assert methods == {"self_play", "sacl", "full_access_order"}
    for r in rows:
        assert r["seeds"] + r["censored"] == 2
        assert r["censored"] == 0
        assert np.isfinite(r["mean_samples"])
    csv_text = fig2_to_csv(rows)
    header = csv_text.splitlines()[0]
    assert header == "n,method,mean_samples,stderr,seeds,censored"


def test_fig2_censoring_is_flagged():
    # a budget too small for the coupon-collection floor forces censoring
    record = run_experiment(rps_config(n=2, budget=30))
    assert samples_to_converge(record, 1e-2) is None
    assert record.rows[-1].samples_consumed >= 30


def test_replicate_fig2_censored_seeds_never_enter_means(monkeypatch):
    from dataclasses import replace

    import subgamelab.harness as h

    real = h.fig2_run_config
    monkeypatch.setattr(
        h, "fig2_run_config",
        lambda n, method, seeds, threshold=1e-2: replace(
            real(n, method, seeds, threshold), sample_budget=25))
    rows = h.replicate_fig2(n_max=2, seeds=2)
    starved = next(r for r in rows if r["n"] == 2 and r["method"] == "self_play")
    assert starved["censored"] == 2
    assert starved["seeds"] == 0
    assert np.isnan(starved["mean_samples"])
    assert starved["per_seed"] == [None, None]


def test_run_config_validation_enumerates_errors():
    with pytest.raises(ValueError) as err:
        RunConfig(env="chess", env_params={}, method="dance",
                  sample_budget=-1, eval_every=0)
    message = str(err.value)
    for fragment in ("env must be", "method must be", "sample_budget", "eval_every"):
        assert fragment in message


def test_parse_config_roundtrip():
    text = """
    # experiment setup
    env = rps
    rps_n = 4
    method = sacl
    seeds = 0, 1, 2
    sample_budget = 2000
    eval_every = 50
    convergence_threshold = 0.01
    lr = 1.0
    lr_decay = none
    epsilon = 1.0
    batch_size = 1
    p = 0.7
    capacity_k = 32
    alpha_bias = 0.7
    variant = full
    ensemble_size = 1
    episodes_per_epoch = 8
    """
    cfg = parse_config(text)
    assert cfg.env == "rps" and cfg.env_params == {"rps_n": 4}
    assert cfg.method == "sacl"
    assert cfg.seeds == (0, 1, 2)
    assert cfg.learner.lr_decay is None
    assert cfg.metric.alpha_bias == 0.7
    assert cfg.sampler.p == 0.7
    assert cfg.capacity_k == 32


def test_parse_config_collects_all_errors():
    with pytest.raises(ValueError) as err:
        parse_config("""
        env = rps
        flavor = spicy
        lr = soon
        """)
    message = str(err.value)
    assert "unknown key 'flavor'" in message
    assert "cannot parse 'soon'" in message
    assert "missing required key 'method'" in message
    assert "requires rps_n" in message


def test_parse_config_grid_requirements():
    with pytest.raises(ValueError) as err:
        parse_config("env = grid_pursuit\nmethod = self_play\n")
    assert "grid_width" in str(err.value)
    cfg = parse_config("""
    env = grid_pursuit
    method = self_play
    grid_width = 2
    grid_height = 2
    grid_horizon = 2
    """)
    assert cfg.env_params["grid_horizon"] == 2
    assert cfg.eval_every == 1000  # env-dependent default
