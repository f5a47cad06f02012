"""End-to-end smoke tests of the Python bindings."""

import math

import numpy as np
import pytest

import relmpc


def quiet_hold_config(hold=1.0):
    c = relmpc.ScenarioConfig()
    c.segments.hold = hold
    c.segments.line = 0.0
    c.segments.turn = 0.0
    c.segments.resume = 0.0
    c.segments.spiral = 0.0
    c.noise.optic_flow = 0.0
    c.noise.imu_euler_deg = 0.0
    c.noise.gyro_deg = 0.0
    c.noise.relative_loc = 0.0
    c.noise.absolute_loc = 0.0
    c.noise.absolute_yaw = 0.0
    c.uncertainty.mass_std = 0.0
    c.uncertainty.inertia_std = 0.0
    c.start_offsets = [[0.05, -0.04, 0.03], [-0.06, 0.05, -0.02], [0.04, 0.03, 0.05]]
    c.test_mode_iters = 1
    return c


def column(name):
    return relmpc.run_csv_columns().index(name)


def test_config_defaults_and_roundtrip():
    c = relmpc.parse_scenario_config("{}")
    assert c.dt == 0.05
    assert c.horizon == 15
    assert c.runs == 10
    assert c.warm_start
    text = relmpc.scenario_config_to_json(c)
    again = relmpc.parse_scenario_config(text)
    assert again.dt == c.dt
    assert again.noise.optic_flow == c.noise.optic_flow
    assert relmpc.total_duration(again) == relmpc.total_duration(c)


def test_config_rejects_unknown_keys():
    with pytest.raises(relmpc.ConfigError):
        relmpc.parse_scenario_config('{"horizzon": 10}')
    with pytest.raises(ValueError):  # ConfigError is a ValueError
        relmpc.parse_scenario_config('{"dt": -0.05}')


def test_reference_geometry():
    c = relmpc.parse_scenario_config("{}")
    start = relmpc.reference_at(0.0, c)
    assert np.allclose(start.position, c.leader_start)
    cruising = relmpc.reference_at(4.0, c)  # inside the straight-line segment
    assert math.isclose(np.linalg.norm(cruising.velocity), c.line_speed, rel_tol=1e-12)
    with pytest.raises(relmpc.ScheduleError):
        relmpc.reference_at(relmpc.total_duration(c) + 1.0, c)


def test_hover_run_settles():
    c = quiet_hold_config(hold=2.0)
    log = relmpc.simulate_run(c, 1)
    assert len(log) == 40
    m = log.matrix()
    assert m.shape == (40, len(relmpc.run_csv_columns()))

    pair_cols = [column("err_f1_L"), column("err_f2_L"), column("err_f1_f2")]
    first = max(m[0, j] for j in pair_cols)
    last = max(m[-1, j] for j in pair_cols)
    assert first > 0.02  # the start offsets are visible
    assert last < 1e-2  # and are regulated away

    rpm_cols = [column(f"veh{v}_rpm{r}") for v in (1, 2, 3) for r in (1, 2, 3, 4)]
    rpm = m[:, rpm_cols]
    assert rpm.min() >= 0.0
    assert rpm.max() <= 6000.0
    assert m[:, column("fallback")].max() == 0.0


def test_aggregate_and_summary():
    c = quiet_hold_config()
    logs = [relmpc.simulate_run(c, relmpc.derive_seed(c.seed, i)) for i in range(2)]
    agg = relmpc.aggregate_runs(logs)
    assert agg.mean.shape == (20, len(relmpc.run_csv_columns()) - 1)
    assert agg.stddev.shape == agg.mean.shape
    stats = relmpc.summarize_segments(logs, c)
    assert [s.label for s in stats] == ["A"]
    assert stats[0].window_end <= relmpc.total_duration(c)


def test_csv_writers(tmp_path):
    c = quiet_hold_config()
    log = relmpc.simulate_run(c, 3)
    path = tmp_path / "run.csv"
    relmpc.write_run_csv(str(path), log)
    header = path.read_text().splitlines()[0]
    assert header == ",".join(relmpc.run_csv_columns())


def test_rk4_hover_is_stationary():
    params = relmpc.default_vehicle_params()
    state = relmpc.VehicleState()
    state.position = [0.0, 0.0, -1.0]
    hover = [params.hover_omega_sq()] * 4
    for _ in range(20):
        state = relmpc.rk4_step(state, hover, params, 0.05)
    assert np.allclose(state.position, [0.0, 0.0, -1.0], atol=1e-9)
    assert np.allclose(state.velocity, [0.0, 0.0, 0.0], atol=1e-9)


def test_relative_yaw_estimate_level_case():
    psi1, psi2 = math.radians(30.0), math.radians(10.0)
    p1, p2 = np.array([0.0, 0.0, 0.0]), np.array([2.0, 1.0, 0.5])

    def level_body(psi, frm, to):
        d = to - frm
        c, s = math.cos(-psi), math.sin(-psi)
        return np.array([c * d[0] - s * d[1], s * d[0] + c * d[1], d[2]])

    def measurement(d_body):
        meas = relmpc.RelativeMeasurement()
        meas.range = float(np.linalg.norm(d_body))
        meas.azimuth = math.atan2(d_body[1], d_body[0])
        meas.elevation = math.asin(d_body[2] / meas.range)
        return meas

    level = relmpc.AttitudePartial(0.0, 0.0)
    est = relmpc.relative_yaw_estimate(
        measurement(level_body(psi1, p1, p2)),
        measurement(level_body(psi2, p2, p1)),
        level,
        level,
    )
    assert abs(est - (psi1 - psi2)) < 1e-9
