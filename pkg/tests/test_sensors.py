"""Sensor models: mount decoupling, depth, battery, target detector."""

import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from meco_sim.dynamics import initial_state
from meco_sim.quat import qfrom_euler, qmul, qconj, qrotate
from meco_sim.sensors import (
    BatteryState,
    battery_step,
    detect_target,
    estimate_pose,
    mount_bias,
    sample_ahrs,
    sample_depth,
    thruster_current,
)
from meco_sim.vehicle import (
    AhrsConfig,
    BatteryConfig,
    CameraConfig,
    DepthSensorConfig,
    IDENTITY_MOUNT,
    MountTransform,
    load_reference_config,
)


# -- oracle helpers -----------------------------------------------------------------
# scipy quaternions are (x, y, z, w); ours are (w, x, y, z)

def to_scipy(q):
    return Rotation.from_quat([q[1], q[2], q[3], q[0]])


def from_scipy(r):
    x, y, z, w = r.as_quat()
    return (w, x, y, z)


def quat_close(a, b, tol=1e-9):
    """Component-wise closeness up to the q/-q double cover."""
    same = max(abs(x - y) for x, y in zip(a, b))
    flip = max(abs(x + y) for x, y in zip(a, b))
    return min(same, flip) < tol


def ahrs_cfg(actual=IDENTITY_MOUNT, believed=IDENTITY_MOUNT, **kw):
    base = dict(
        actual_mount=actual,
        believed_mount=believed,
        rate_hz=100.0,
        orientation_noise=0.0,
        rate_noise=0.0,
        rate_bias=(0.0, 0.0, 0.0),
        accel_noise=0.0,
    )
    base.update(kw)
    return AhrsConfig(**base)


def mount(quat):
    return MountTransform((0.0, 0.0, 0.0), quat)


def rng():
    return np.random.default_rng(0)


# -- AHRS ------------------------------------------------------------------------

def test_identity_mount_reads_truth():
    state = initial_state(orientation=qfrom_euler(0.3, -0.2, 1.0),
                          angular_velocity=(0.1, 0.2, 0.3))
    r = sample_ahrs(ahrs_cfg(), state, rng())
    assert quat_close(r.orientation, state.orientation, 1e-12)
    assert r.angular_velocity == pytest.approx(state.angular_velocity)


def test_rotated_mount_composes_on_the_right():
    tilt = qfrom_euler(math.radians(5.0), 0.0, 0.0)
    state = initial_state(orientation=qfrom_euler(0.2, 0.4, -0.7))
    r = sample_ahrs(ahrs_cfg(actual=mount(tilt)), state, rng())
    want = from_scipy(to_scipy(state.orientation) * to_scipy(tilt))
    assert quat_close(r.orientation, want, 1e-9)


def test_rates_expressed_in_sensor_frame():
    tilt = qfrom_euler(0.0, 0.0, math.pi / 2)
    state = initial_state(angular_velocity=(0.5, 0.0, 0.0))
    r = sample_ahrs(ahrs_cfg(actual=mount(tilt)), state, rng())
    want = to_scipy(tilt).inv().apply([0.5, 0.0, 0.0])
    assert r.angular_velocity == pytest.approx(tuple(want), abs=1e-12)


def test_fixed_seed_repeats_noise():
    cfg = ahrs_cfg(orientation_noise=0.02, rate_noise=0.01)
    state = initial_state(orientation=qfrom_euler(0.1, 0.2, 0.3))
    a = sample_ahrs(cfg, state, np.random.default_rng(99))
    b = sample_ahrs(cfg, state, np.random.default_rng(99))
    assert a == b


# -- believed-mount decoupling -----------------------------------------------------

def test_matched_belief_recovers_truth_exactly():
    tilt = qfrom_euler(0.1, -0.05, 0.3)
    state = initial_state(orientation=qfrom_euler(0.7, 0.2, -1.1),
                          angular_velocity=(0.2, -0.1, 0.4))
    reading = sample_ahrs(ahrs_cfg(actual=mount(tilt)), state, rng())
    q, w = estimate_pose(reading, mount(tilt))
    assert quat_close(q, state.orientation, 1e-12)
    assert w == pytest.approx(state.angular_velocity, abs=1e-12)


def test_identity_belief_shows_the_physical_tilt():
    tilt = qfrom_euler(math.radians(5.0), 0.0, 0.0)
    state = initial_state(orientation=qfrom_euler(0.4, 0.1, 0.9))
    reading = sample_ahrs(ahrs_cfg(actual=mount(tilt)), state, rng())
    q, _ = estimate_pose(reading, IDENTITY_MOUNT)
    bias = qmul(qconj(state.orientation), q)
    assert quat_close(bias, tilt, 1e-9)


def test_bias_equals_actual_composed_believed_inverse_100_pairs():
    gen = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        actual = from_scipy(Rotation.random(random_state=gen))
        believed = from_scipy(Rotation.random(random_state=gen))
        state = initial_state(orientation=from_scipy(Rotation.random(random_state=gen)))
        reading = sample_ahrs(ahrs_cfg(actual=mount(actual)), state, rng())
        q_est, _ = estimate_pose(reading, mount(believed))
        # estimate = truth composed with the predicted constant bias
        want = qmul(state.orientation, mount_bias(mount(actual), mount(believed)))
        same = max(abs(x - y) for x, y in zip(q_est, want))
        flip = max(abs(x + y) for x, y in zip(q_est, want))
        worst = max(worst, min(same, flip))
    assert worst < 1e-9


def test_mount_bias_oracle_scipy():
    a = qfrom_euler(0.3, 0.1, -0.2)
    b = qfrom_euler(-0.1, 0.25, 0.05)
    got = mount_bias(mount(a), mount(b))
    want = from_scipy(to_scipy(a) * to_scipy(b).inv())
    assert quat_close(got, want, 1e-12)


# -- depth -------------------------------------------------------------------------

def test_depth_reads_distance_below_surface():
    cfg = DepthSensorConfig(rate_hz=20.0, noise_sigma=0.0)
    assert sample_depth(cfg, initial_state(position=(3, 4, 10.0)), 0.0, rng()) == 10.0
    assert sample_depth(cfg, initial_state(position=(0, 0, 0.0)), 0.0, rng()) == 0.0


def test_depth_offset_surface():
    cfg = DepthSensorConfig(rate_hz=20.0, noise_sigma=0.0)
    assert sample_depth(cfg, initial_state(position=(0, 0, 10.0)), 2.0, rng()) == 8.0


def test_depth_noise_seeded_regression():
    cfg = DepthSensorConfig(rate_hz=20.0, noise_sigma=0.05)
    got = sample_depth(cfg, initial_state(position=(0, 0, 10.0)), 0.0,
                       np.random.default_rng(123))
    want = 10.0 + 0.05 * float(np.random.default_rng(123).normal(0.0, 1.0))
    # same generator stream, scaled draw
    assert got == pytest.approx(want, abs=1e-12)


# -- battery ----------------------------------------------------------------------

def battery():
    return BatteryConfig(capacity_wh=385.0, nominal_voltage=15.0,
                         idle_current=1.9, compute_current=0.0,
                         thruster_max_current=0.0)


def deplete_hours(cfg, amps, dt=1.0):
    """Independent march: capacity / (V * I) checked by explicit stepping."""
    state = BatteryState(energy_wh=cfg.capacity_wh)
    t = 0.0
    while not state.empty:
        battery_step(state, cfg, amps, dt)
        t += dt
        assert t < 100 * 3600
    return t / 3600.0


def test_idle_endurance_matches_headline():
    hours = deplete_hours(battery(), 0.0)
    assert hours == pytest.approx(385.0 / (15.0 * 1.9), abs=1e-3)
    assert abs(hours - 13.5) < 0.1


def test_full_throttle_endurance():
    cfg = BatteryConfig(capacity_wh=385.0, nominal_voltage=15.0,
                        idle_current=1.9, compute_current=0.0,
                        thruster_max_current=0.0)
    hours = deplete_hours(cfg, 115.0 - 1.9, dt=0.5)
    assert abs(hours - 0.223) < 0.01


def test_zero_current_holds_charge():
    cfg = BatteryConfig(capacity_wh=100.0, nominal_voltage=15.0,
                        idle_current=0.0, compute_current=0.0,
                        thruster_max_current=0.0)
    state = BatteryState(energy_wh=100.0)
    battery_step(state, cfg, 0.0, 3600.0)
    assert state.energy_wh == 100.0


def test_energy_never_negative():
    cfg = battery()
    state = BatteryState(energy_wh=0.001)
    battery_step(state, cfg, 500.0, 3600.0)
    assert state.energy_wh == 0.0
    assert state.empty


def test_thruster_current_scales_with_thrust():
    cfg = load_reference_config()
    full = thruster_current(cfg, tuple(t.max_thrust_fwd for t in cfg.thrusters))
    assert full == pytest.approx(5 * cfg.battery.thruster_max_current)
    half = thruster_current(cfg, tuple(0.5 * t.max_thrust_fwd for t in cfg.thrusters))
    assert half == pytest.approx(0.5 * full)
    assert thruster_current(cfg, (0.0,) * 5) == 0.0


def test_reference_pack_full_load_draw():
    cfg = load_reference_config()
    thrusts = tuple(t.max_thrust_fwd for t in cfg.thrusters)
    amps = (cfg.battery.idle_current + cfg.battery.compute_current
            + thruster_current(cfg, thrusts))
    assert amps == pytest.approx(115.0, abs=0.5)


# -- target detector -----------------------------------------------------------------

def camera(**kw):
    base = dict(
        mount=IDENTITY_MOUNT,
        rate_hz=10.0,
        fov=math.radians(170.0),
        max_range=50.0,
        range_noise_sigma=0.0,
        dropout=0.0,
    )
    base.update(kw)
    return CameraConfig(**base)


def test_target_dead_ahead():
    det = detect_target(camera(), initial_state(), (3.0, 0.0, 0.0), rng())
    assert det is not None
    assert det.direction == pytest.approx((1.0, 0.0, 0.0), abs=1e-12)
    assert det.range == pytest.approx(3.0, abs=1e-12)
    assert det.azimuth == 0.0
    assert det.elevation == 0.0


def test_target_behind_is_culled():
    assert detect_target(camera(), initial_state(), (-3.0, 0.0, 0.0), rng()) is None


def test_target_beyond_max_range_is_culled():
    assert detect_target(camera(max_range=2.0), initial_state(), (3.0, 0, 0), rng()) is None


def test_dropout_one_always_misses():
    cfg = camera(dropout=1.0)
    for seed in range(10):
        out = detect_target(cfg, initial_state(), (3.0, 0, 0),
                            np.random.default_rng(seed))
        assert out is None


def test_fov_edge_cull():
    cfg = camera(fov=math.radians(90.0))
    inside = detect_target(cfg, initial_state(), (1.0, 0.9, 0.0), rng())
    outside = detect_target(cfg, initial_state(), (1.0, 1.1, 0.0), rng())
    assert inside is not None
    assert outside is None


def test_detection_accounts_for_camera_offset_and_attitude():
    cam = CameraConfig(mount=MountTransform((0.4, 0.0, 0.0), (1.0, 0, 0, 0)),
                       rate_hz=10.0, fov=math.radians(170.0), max_range=50.0,
                       range_noise_sigma=0.0, dropout=0.0)
    yaw = math.radians(30.0)
    state = initial_state(position=(1.0, 2.0, 5.0), orientation=qfrom_euler(0, 0, yaw))
    target = (4.0, 3.0, 5.5)
    det = detect_target(cam, state, target, rng())
    # oracle: world -> body -> camera with explicit matrices
    R = to_scipy(state.orientation).as_matrix()
    rel_body = R.T @ (np.array(target) - np.array(state.position))
    rel_cam = rel_body - np.array([0.4, 0.0, 0.0])
    want_r = float(np.linalg.norm(rel_cam))
    want_dir = rel_cam / want_r
    assert det is not None
    assert det.range == pytest.approx(want_r, abs=1e-12)
    assert det.direction == pytest.approx(tuple(want_dir), abs=1e-12)
    assert det.azimuth == pytest.approx(math.atan2(want_dir[1], want_dir[0]), abs=1e-12)


def test_bearing_noise_free_range_noisy():
    cfg = camera(range_noise_sigma=0.1)
    det = detect_target(cfg, initial_state(), (5.0, 1.0, -0.5),
                        np.random.default_rng(5))
    clean = detect_target(camera(), initial_state(), (5.0, 1.0, -0.5), rng())
    assert det.direction == clean.direction
    assert det.range != clean.range


def test_rotated_camera_mount():
    # camera looking to starboard: target off the right beam is dead ahead for it
    look_right = qfrom_euler(0.0, 0.0, math.pi / 2)
    cfg = camera(mount=MountTransform((0.0, 0.0, 0.0), look_right))
    det = detect_target(cfg, initial_state(), (0.0, 2.0, 0.0), rng())
    assert det is not None
    assert det.direction == pytest.approx((1.0, 0.0, 0.0), abs=1e-12)
    assert qrotate(look_right, det.direction) == pytest.approx((0.0, 1.0, 0.0), abs=1e-12)
