import math

import numpy as np
import pytest

from boxplus.ins import (
    FilterTrace, NoiseConfig, TrajectoryConfig, evaluate, generate_trajectory, gps_measurement, gps_noise_cov,
    initial_belief, ins_manifold, ins_process, nees_band, process_noise_cov, read_simlog, run_errors, run_filter,
    simulate_sensors, truth_states, write_simlog,
)
from boxplus.ins.evaluate import aggregate
from boxplus.manifolds import exp_quat, quat_to_rotmatrix
from boxplus.stats import ManifoldGaussian, sample

CFG = NoiseConfig()
G = np.array(CFG.gravity)


def state(pos=(0, 0, 0), quat=(1, 0, 0, 0), vel=(0, 0, 0), bias=None):
    parts = [pos, quat, vel] + ([bias] if bias is not None else [])
    return np.concatenate([np.asarray(p, dtype=float) for p in parts])


@pytest.fixture(scope="module")
def truth():
    return generate_trajectory(TrajectoryConfig())


def test_hover_is_fixed_point():
    q = exp_quat([0.1, -0.2, 0.3])
    s = state(pos=(1, 2, 3), quat=q)
    acc = quat_to_rotmatrix(q).T @ (-G)
    np.testing.assert_allclose(ins_process(s, acc, np.zeros(3), CFG), s, atol=1e-12)


def test_quarter_turn_about_z():
    s = state()
    out = ins_process(s, -G, np.array([0, 0, math.pi / 2]) / CFG.dt, CFG)
    np.testing.assert_allclose(quat_to_rotmatrix(out[3:7]), [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-12)


def test_position_uses_previous_velocity():
    out = ins_process(state(vel=(1, 0, 0)), -G, np.zeros(3), CFG)
    np.testing.assert_allclose(out[:3], [CFG.dt, 0, 0], atol=1e-15)


def test_bias_decays():
    cfg = NoiseConfig(bias_T=100.0)
    out = ins_process(state(bias=(1.0, -2.0, 0.5)), -G, np.zeros(3), cfg)
    np.testing.assert_allclose(out[10:], np.exp(-cfg.dt / 100.0) * np.array([1.0, -2.0, 0.5]))


def test_process_noise():
    R = process_noise_cov(CFG)
    np.testing.assert_array_equal(np.diag(R)[:3], 0)
    np.testing.assert_allclose(np.diag(R)[3:6], CFG.sigma_w * CFG.dt)
    np.testing.assert_allclose(np.diag(R)[6:9], CFG.sigma_v * CFG.dt)
    assert np.abs(process_noise_cov(NoiseConfig(dt=1e-12))).max() < 1e-15
    c = NoiseConfig(bias_T=1800.0)
    stationary = math.exp(-2 * c.dt / 1800.0) * c.sigma_b2 + process_noise_cov(c)[9, 9]
    assert stationary == pytest.approx(c.sigma_b2, rel=1e-14)


def test_gps_measurement():
    s = state(pos=(1, 2, 3), bias=(0.1, 0, 0))
    np.testing.assert_allclose(gps_measurement(s[:10]), [1, 2, 3])
    np.testing.assert_allclose(gps_measurement(s, colored=True), [1.1, 2, 3])
    np.testing.assert_allclose(gps_noise_cov(CFG), 0.75 ** 2 * np.eye(3))


def test_zero_duration_trajectory():
    tr = generate_trajectory(TrajectoryConfig(duration=0.0))
    assert len(tr.t) == 1 and tr.acc.shape == (0, 3)


def test_trajectory_closes(truth):
    np.testing.assert_allclose(truth.pos[-1, :2], truth.pos[0, :2], atol=1e-6)
    np.testing.assert_allclose(truth.pos[0, :2], [0, 0], atol=1e-12)
    assert np.all(np.diff(truth.t) > 0)


def test_trajectory_imu_consistency(truth):
    log = simulate_sensors(truth, NoiseConfig.noiseless())
    x = state(truth.pos[0], truth.quat[0], truth.vel[0])
    err = 0.0
    for k in range(len(log.acc)):
        x = ins_process(x, log.acc[k], log.gyro[k], CFG)
        err = max(err, np.linalg.norm(x[:3] - truth.pos[k + 1]))
    assert err < 0.1


def test_zero_noise_sensors_are_truth(truth):
    log = simulate_sensors(truth, NoiseConfig.noiseless())
    np.testing.assert_array_equal(log.acc, truth.acc)
    np.testing.assert_array_equal(log.gps, truth.pos[log.gps_idx])
    assert log.gps_idx[0] == 25 and np.all(np.diff(log.gps_idx) == 25)


def test_gyro_noise_variance():
    tr = generate_trajectory(TrajectoryConfig(duration=400.0))
    log = simulate_sensors(tr, CFG, seed=4)
    res = (log.gyro - tr.gyro).ravel()
    assert res.size >= 100_000
    assert np.var(res) == pytest.approx(CFG.sigma_w / CFG.dt, rel=0.05)


def test_bias_autocorrelation():
    cfg = NoiseConfig(bias_T=60.0)
    tr = generate_trajectory(TrajectoryConfig(duration=600.0))
    b = simulate_sensors(tr, cfg, seed=2).bias[::25]
    b = b / math.sqrt(cfg.sigma_b2)
    n = len(b) - 1
    for lag in (1, 10, 40):
        r = np.mean(np.sum(b[lag:] * b[:-lag], axis=1)) / 3.0
        assert abs(r - math.exp(-lag * 0.25 / 60.0)) < 3 / math.sqrt(n) + 0.25


def test_simlog_roundtrip(tmp_path, truth):
    cfg = NoiseConfig(bias_T=1800.0)
    log = simulate_sensors(generate_trajectory(TrajectoryConfig(duration=2.0)), cfg, seed=1)
    path = tmp_path / "log.csv"
    write_simlog(log, path)
    back = read_simlog(path)
    np.testing.assert_array_equal(back.acc, log.acc)
    np.testing.assert_array_equal(back.gyro, log.gyro)
    np.testing.assert_array_equal(back.gps, log.gps)
    np.testing.assert_array_equal(back.gps_idx, log.gps_idx)
    np.testing.assert_array_equal(back.bias, log.bias)
    np.testing.assert_array_equal(back.truth.quat, log.truth.quat)


def test_zero_noise_filter_tracks(truth):
    cfg = NoiseConfig(sigma_w=1e-10, sigma_v=1e-10, sigma_p=0.01)
    log = simulate_sensors(truth, NoiseConfig.noiseless())
    tr = run_filter(log, cfg)
    err = np.linalg.norm(tr.mean[:, :3] - truth.pos, axis=1)
    assert err.mean() < 0.1


def test_dead_reckoning_drifts(truth):
    log = simulate_sensors(truth, CFG, seed=3)
    tr = run_filter(log, CFG, use_gps=False)
    err = np.linalg.norm(tr.mean[:, :3] - truth.pos, axis=1)
    quarter = len(err) // 4
    chunks = [err[i * quarter:(i + 1) * quarter].mean() for i in range(4)]
    assert chunks[0] < chunks[1] < chunks[2] < chunks[3]
    assert chunks[3] > 4 * chunks[1]


def test_filter_smooths_gps(truth):
    tr = run_filter(simulate_sensors(truth, CFG, seed=5), CFG)
    rms = math.sqrt(np.mean(np.sum((tr.mean[:, :3] - truth.pos) ** 2, axis=1)) / 3)
    assert rms < CFG.sigma_p


def test_filter_error_has_timestamp(truth):
    log = simulate_sensors(generate_trajectory(TrajectoryConfig(duration=1.0)), CFG)
    log.gps[0] = np.nan
    with pytest.raises(Exception, match=r"t=0\.2500"):
        run_filter(log, NoiseConfig(sigma_p=0.0, sigma_w=0.0, sigma_v=0.0), initial_belief(CFG))


def test_perfect_estimate_nees_zero(truth):
    log = simulate_sensors(truth, NoiseConfig.noiseless())
    X = truth_states(log)
    tr = FilterTrace(truth.t, X, np.broadcast_to(np.eye(9), (len(X), 9, 9)).copy(), False)
    assert np.all(run_errors(tr, X).nees < 1e-24)


def test_nees_of_exact_draws(rng):
    m = ins_manifold()
    T, runs = 40, 50
    X = m.random(rng, T)
    X[:, 7:] *= 0
    cov = np.diag(rng.uniform(0.01, 0.1, 9))
    errs = []
    for _ in range(runs):
        means = np.array([sample(ManifoldGaussian(m, X[k], cov), rng) for k in range(T)])
        errs.append(run_errors(FilterTrace(np.arange(T), means, np.broadcast_to(cov, (T, 9, 9)).copy(), False), X))
    rep = aggregate(np.arange(T), errs, m)
    lo, hi = nees_band(runs, 9)
    assert lo <= rep.nees.mean() <= hi
    assert np.all(np.abs(rep.nmee.mean(axis=0)) < 3 / math.sqrt(runs * T) * 3)


def test_singular_covariance_reports_time(truth):
    m = ins_manifold()
    X = np.repeat(m.identity()[None], 3, axis=0)
    cov = np.broadcast_to(np.eye(9), (3, 9, 9)).copy()
    cov[2] = 0.0
    with pytest.raises(np.linalg.LinAlgError, match="t=0.0200"):
        run_errors(FilterTrace(np.array([0.0, 0.01, 0.02]), X, cov, False), X)


def test_evaluate_lengths(truth):
    log = simulate_sensors(generate_trajectory(TrajectoryConfig(duration=2.0)), CFG, seed=1)
    tr = run_filter(log, CFG)
    rep = evaluate([tr], [log])
    assert len(rep.nees) == len(log.t) == len(rep.rms_pos)
    assert rep.nmee.shape == (len(log.t), 9) and np.all(rep.nees >= 0)
