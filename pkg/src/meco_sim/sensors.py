"""Sensor models with decoupled truth and belief.

Every mounted sensor carries two transforms: the actual mount used to
generate readings and the believed mount used to interpret them. Keeping
the two separate lets a scenario inject calibration error without touching
the estimator code, and makes the resulting bias exactly predictable:
estimating with believed == actual recovers truth, while a mismatch leaves
a constant orientation offset of actual composed with believed inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .quat import (
    Quat,
    Vec3,
    qconj,
    qmul,
    qnormalize,
    qrotate,
    qrotate_inv,
    vnorm,
)
from .vehicle import (
    AhrsConfig,
    BatteryConfig,
    CameraConfig,
    DepthSensorConfig,
    MountTransform,
    VehicleConfig,
)
from .dynamics import BodyState


@dataclass(frozen=True)
class AhrsReading:
    orientation: Quat         # world <- sensor
    angular_velocity: Vec3    # sensor frame, rad/s


@dataclass(frozen=True)
class Detection:
    direction: Vec3    # unit vector, camera frame (x is the boresight)
    range: float       # m, range noise applied
    azimuth: float     # rad, positive toward +y
    elevation: float   # rad, positive above the boresight


@dataclass
class BatteryState:
    energy_wh: float

    @property
    def empty(self) -> bool:
        return self.energy_wh <= 0.0


def _small_rotation(rng, sigma: float) -> Quat:
    if sigma <= 0.0:
        return (1.0, 0.0, 0.0, 0.0)
    rx, ry, rz = rng.normal(0.0, sigma, 3)
    angle = math.sqrt(rx * rx + ry * ry + rz * rz)
    if angle < 1e-12:
        return qnormalize((1.0, 0.5 * rx, 0.5 * ry, 0.5 * rz))
    half = 0.5 * angle
    f = math.sin(half) / angle
    return (math.cos(half), rx * f, ry * f, rz * f)


def sample_ahrs(cfg: AhrsConfig, state: BodyState, rng) -> AhrsReading:
    """Reading as the physical sensor would produce it, in its own frame."""
    mount = cfg.actual_mount
    q = qmul(state.orientation, mount.rotation)
    q = qmul(q, _small_rotation(rng, cfg.orientation_noise))
    w = qrotate_inv(mount.rotation, state.angular_velocity)
    w = (w[0] + cfg.rate_bias[0], w[1] + cfg.rate_bias[1], w[2] + cfg.rate_bias[2])
    if cfg.rate_noise > 0.0:
        nx, ny, nz = rng.normal(0.0, cfg.rate_noise, 3)
        w = (w[0] + nx, w[1] + ny, w[2] + nz)
    return AhrsReading(orientation=qnormalize(q), angular_velocity=w)


def estimate_pose(reading: AhrsReading, believed: MountTransform) -> tuple[Quat, Vec3]:
    """Body orientation and rates as inferred through the believed mount."""
    q = qnormalize(qmul(reading.orientation, qconj(believed.rotation)))
    w = qrotate(believed.rotation, reading.angular_velocity)
    return q, w


def mount_bias(actual: MountTransform, believed: MountTransform) -> Quat:
    """Constant orientation error left by estimating through the wrong mount."""
    return qnormalize(qmul(actual.rotation, qconj(believed.rotation)))


def sample_depth(cfg: DepthSensorConfig, state: BodyState, surface_z: float, rng) -> float:
    """Pressure depth below the still-water surface; waves are not felt."""
    depth = state.position[2] - surface_z
    if cfg.noise_sigma > 0.0:
        depth += rng.normal(0.0, cfg.noise_sigma)
    return depth


def thruster_current(config: VehicleConfig, thrusts) -> float:
    """Total thruster draw, linear in thrust magnitude up to the per-unit max."""
    total = 0.0
    for u, spec in zip(thrusts, config.thrusters):
        cap = spec.max_thrust_fwd if u >= 0.0 else spec.max_thrust_rev
        frac = min(1.0, abs(u) / cap) if cap > 0 else 0.0
        total += frac * config.battery.thruster_max_current
    return total


def battery_step(
    state: BatteryState, cfg: BatteryConfig, thruster_amps: float, dt: float
) -> float:
    """Drain the pack over one step; returns the total current drawn.

    Draw is idle plus compute plus thrusters at nominal voltage. Energy
    never goes below zero; an empty pack keeps reporting zero so consumers
    can latch the condition.
    """
    current = cfg.idle_current + cfg.compute_current + thruster_amps
    if state.energy_wh > 0.0:
        state.energy_wh = max(
            0.0, state.energy_wh - cfg.nominal_voltage * current * dt / 3600.0
        )
    return current


def detect_target(
    cfg: CameraConfig, state: BodyState, target_world: Vec3, rng
) -> Detection | None:
    """Idealized detector: geometry is exact, only range carries noise.

    Returns None when the target is outside the field-of-view cone, beyond
    maximum range, or lost to a Bernoulli dropout draw.
    """
    cam_body = cfg.mount.translation
    rel_world = (
        target_world[0] - state.position[0],
        target_world[1] - state.position[1],
        target_world[2] - state.position[2],
    )
    rel_body = qrotate_inv(state.orientation, rel_world)
    rel_body = (
        rel_body[0] - cam_body[0],
        rel_body[1] - cam_body[1],
        rel_body[2] - cam_body[2],
    )
    v = qrotate_inv(cfg.mount.rotation, rel_body)
    rng_true = vnorm(v)
    if rng_true <= 1e-9 or rng_true > cfg.max_range:
        return None
    ux, uy, uz = v[0] / rng_true, v[1] / rng_true, v[2] / rng_true
    # fov is the full cone angle about the +x boresight
    if ux < math.cos(cfg.fov / 2.0):
        return None
    if cfg.dropout > 0.0 and rng.random() < cfg.dropout:
        return None
    r = rng_true
    if cfg.range_noise_sigma > 0.0:
        r = max(0.0, r + rng.normal(0.0, cfg.range_noise_sigma))
    return Detection(
        direction=(ux, uy, uz),
        range=r,
        azimuth=math.atan2(uy, ux),
        elevation=math.atan2(-uz, math.hypot(ux, uy)),
    )
