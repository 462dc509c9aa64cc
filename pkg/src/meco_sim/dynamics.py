"""Six-DoF rigid-body dynamics for a small hover-capable underwater vehicle.

The model follows the usual marine-vehicle conventions: world frame is NED
(z down), body frame has x forward, y starboard, z down, and the attitude
quaternion maps body vectors into the world frame. States are resolved at
the center of gravity, so thruster and buoyancy moments use arms relative
to the CoG and the inertia tensor is taken about the CoG.

Deliberate simplifications, chosen to keep a fixed-step 100 Hz loop cheap
and predictable:

* added mass is diagonal;
* Coriolis/centripetal coupling is blockwise: the translational equation
  sees omega x (M_t v) and the rotational equation the gyroscopic term
  omega x (J w), with no off-block (Munk) coupling;
* drag is independent per axis, linear plus quadratic, acting on velocity
  relative to the local water;
* buoyancy fades with a vertical-slab submerged fraction over the hull
  bounding-box height, so a vehicle pushed above the surface loses lift
  instead of bouncing on a hard constraint;
* one Airy wave component modulates the local surface height and adds an
  exponentially decaying orbital velocity to the water.

Integration is semi-implicit Euler: velocities first, then pose with the
updated velocities. The quaternion is renormalized every step. All hot-path
math is plain tuple arithmetic (see quat.py for why).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .quat import Quat, Vec3, qmul, qnormalize, qrotate, qrotate_inv
from .vehicle import EnvironmentConfig, VehicleConfig, WaveConfig

DT = 0.01  # fixed physics step, s


@dataclass
class BodyState:
    position: Vec3           # world NED, m, of the CoG
    orientation: Quat        # world <- body
    velocity: Vec3           # body frame, m/s
    angular_velocity: Vec3   # body frame, rad/s


@dataclass(frozen=True)
class Wrench:
    force: Vec3
    torque: Vec3


ZERO_WRENCH = Wrench((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))


def initial_state(
    position: Vec3 = (0.0, 0.0, 0.0),
    orientation: Quat = (1.0, 0.0, 0.0, 0.0),
    velocity: Vec3 = (0.0, 0.0, 0.0),
    angular_velocity: Vec3 = (0.0, 0.0, 0.0),
) -> BodyState:
    return BodyState(position, qnormalize(orientation), velocity, angular_velocity)


class BodyModel:
    """Derived numeric form of a vehicle config, precomputed for the step loop.

    Rebuild it whenever the config changes; construction is cheap next to
    even a fraction of a second of simulation.
    """

    def __init__(self, config: VehicleConfig):
        body = config.body
        m = body.total_mass
        ma = body.added_mass
        self.mass = m
        self.cog = body.cog
        self.r_cb: Vec3 = (
            body.cob[0] - body.cog[0],
            body.cob[1] - body.cog[1],
            body.cob[2] - body.cog[2],
        )
        self.volume = body.buoyant_volume
        self.half_height = body.hull_size[2] / 2.0
        self.m_tr: Vec3 = (m + ma[0], m + ma[1], m + ma[2])
        self.inv_m_tr: Vec3 = (1.0 / self.m_tr[0], 1.0 / self.m_tr[1], 1.0 / self.m_tr[2])
        inertia = [list(row) for row in body.inertia]
        for axis in range(3):
            inertia[axis][axis] += ma[3 + axis]
        self.m_rot = tuple(tuple(row) for row in inertia)
        self.inv_m_rot = _invert3(self.m_rot)
        self.lin_drag = body.linear_drag
        self.quad_drag = body.quadratic_drag
        # thruster geometry resolved about the CoG
        self.thruster_dirs: tuple[Vec3, ...] = tuple(t.direction for t in config.thrusters)
        self.thruster_arms: tuple[Vec3, ...] = tuple(
            (
                t.position[0] - body.cog[0],
                t.position[1] - body.cog[1],
                t.position[2] - body.cog[2],
            )
            for t in config.thrusters
        )


def _invert3(m) -> tuple[Vec3, Vec3, Vec3]:
    a, b, c = m[0]
    d, e, f = m[1]
    g, h, i = m[2]
    det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    if abs(det) < 1e-30:
        raise ValueError("inertia matrix is singular")
    s = 1.0 / det
    return (
        ((e * i - f * h) * s, (c * h - b * i) * s, (b * f - c * e) * s),
        ((f * g - d * i) * s, (a * i - c * g) * s, (c * d - a * f) * s),
        ((d * h - e * g) * s, (b * g - a * h) * s, (a * e - b * d) * s),
    )


def thruster_wrench(model: BodyModel, thrusts) -> Wrench:
    """Net body wrench about the CoG from per-thruster scalar forces (N)."""
    fx = fy = fz = tx = ty = tz = 0.0
    for u, d, r in zip(thrusts, model.thruster_dirs, model.thruster_arms):
        fx += u * d[0]
        fy += u * d[1]
        fz += u * d[2]
        tx += u * (r[1] * d[2] - r[2] * d[1])
        ty += u * (r[2] * d[0] - r[0] * d[2])
        tz += u * (r[0] * d[1] - r[1] * d[0])
    return Wrench((fx, fy, fz), (tx, ty, tz))


def submerged_fraction(z: float, half_height: float, z_surface: float) -> float:
    """Fraction of the hull's vertical span lying below the local surface."""
    bottom = z + half_height
    span = bottom - z_surface
    if span <= 0.0:
        return 0.0
    full = 2.0 * half_height
    if span >= full:
        return 1.0
    return span / full


def wave_surface(wave: WaveConfig, x: float, y: float, t: float) -> float:
    """Surface elevation (positive up) of the single Airy component."""
    k = 2.0 * math.pi / wave.wavelength
    phase = k * (x * math.cos(wave.heading) + y * math.sin(wave.heading)) \
        - 2.0 * math.pi * t / wave.period
    return wave.amplitude * math.sin(phase)


def wave_orbital(wave: WaveConfig, x: float, y: float, depth: float, t: float) -> Vec3:
    """Orbital water velocity (world NED) at a point `depth` m below the surface.

    Deep-water kinematics: speed A*omega, in phase with the elevation along
    the wave heading, decaying as exp(-k depth). Under a crest the water
    moves with the wave; the vertical component matches d(eta)/dt at the
    surface.
    """
    k = 2.0 * math.pi / wave.wavelength
    omega = 2.0 * math.pi / wave.period
    phase = k * (x * math.cos(wave.heading) + y * math.sin(wave.heading)) - omega * t
    decay = math.exp(-k * max(0.0, depth))
    s = wave.amplitude * omega * decay
    u = s * math.sin(phase)
    return (u * math.cos(wave.heading), u * math.sin(wave.heading), s * math.cos(phase))


def water_velocity(env: EnvironmentConfig, x: float, y: float, z: float, t: float) -> Vec3:
    """Ambient water velocity in the world frame: uniform current plus orbital."""
    cur = env.current
    if env.wave is None:
        return cur
    orb = wave_orbital(env.wave, x, y, z - env.surface_z, t)
    return (cur[0] + orb[0], cur[1] + orb[1], cur[2] + orb[2])


def local_surface_z(env: EnvironmentConfig, x: float, y: float, t: float) -> float:
    if env.wave is None:
        return env.surface_z
    return env.surface_z - wave_surface(env.wave, x, y, t)


def restoring_wrench(
    model: BodyModel, env: EnvironmentConfig, position: Vec3, orientation: Quat, t: float
) -> Wrench:
    """Weight at the CoG plus buoyancy at the CoB, expressed in the body frame.

    Weight always acts; buoyancy scales with the submerged fraction so the
    net vertical force reverses sign as the hull breaches the surface.
    """
    g = env.gravity
    f = submerged_fraction(
        position[2], model.half_height, local_surface_z(env, position[0], position[1], t)
    )
    weight = model.mass * g
    buoy = env.water_density * g * model.volume * f
    f_world = (0.0, 0.0, weight - buoy)
    f_body = qrotate_inv(orientation, f_world)
    # only buoyancy has a moment arm about the CoG
    b_body = qrotate_inv(orientation, (0.0, 0.0, -buoy))
    r = model.r_cb
    torque = (
        r[1] * b_body[2] - r[2] * b_body[1],
        r[2] * b_body[0] - r[0] * b_body[2],
        r[0] * b_body[1] - r[1] * b_body[0],
    )
    return Wrench(f_body, torque)


def drag_wrench(model: BodyModel, v_rel: Vec3, omega: Vec3) -> Wrench:
    """Per-axis linear plus quadratic damping on water-relative velocity."""
    L = model.lin_drag
    Q = model.quad_drag
    return Wrench(
        (
            -(L[0] * v_rel[0] + Q[0] * v_rel[0] * abs(v_rel[0])),
            -(L[1] * v_rel[1] + Q[1] * v_rel[1] * abs(v_rel[1])),
            -(L[2] * v_rel[2] + Q[2] * v_rel[2] * abs(v_rel[2])),
        ),
        (
            -(L[3] * omega[0] + Q[3] * omega[0] * abs(omega[0])),
            -(L[4] * omega[1] + Q[4] * omega[1] * abs(omega[1])),
            -(L[5] * omega[2] + Q[5] * omega[2] * abs(omega[2])),
        ),
    )


def step(
    model: BodyModel,
    env: EnvironmentConfig,
    state: BodyState,
    thrust: Wrench,
    t: float,
    dt: float = DT,
) -> BodyState:
    """Advance one fixed step with semi-implicit Euler.

    Velocities integrate under the full force balance first; the pose then
    integrates with the updated velocities, which keeps the oscillatory
    restoring modes from pumping energy the way explicit Euler does.
    """
    px, py, pz = state.position
    q = state.orientation
    u, v, w = state.velocity
    p, r_, s = state.angular_velocity  # roll, pitch, yaw rates

    water_w = water_velocity(env, px, py, pz, t)
    water_b = qrotate_inv(q, water_w)
    v_rel = (u - water_b[0], v - water_b[1], w - water_b[2])

    drag = drag_wrench(model, v_rel, (p, r_, s))
    rest = restoring_wrench(model, env, (px, py, pz), q, t)

    # blockwise Coriolis: omega x (M_t v) on force, omega x (J w) on torque
    mtv = (model.m_tr[0] * u, model.m_tr[1] * v, model.m_tr[2] * w)
    cor_f = (
        -(r_ * mtv[2] - s * mtv[1]),
        -(s * mtv[0] - p * mtv[2]),
        -(p * mtv[1] - r_ * mtv[0]),
    )
    J = model.m_rot
    jw = (
        J[0][0] * p + J[0][1] * r_ + J[0][2] * s,
        J[1][0] * p + J[1][1] * r_ + J[1][2] * s,
        J[2][0] * p + J[2][1] * r_ + J[2][2] * s,
    )
    cor_t = (
        -(r_ * jw[2] - s * jw[1]),
        -(s * jw[0] - p * jw[2]),
        -(p * jw[1] - r_ * jw[0]),
    )

    fx = thrust.force[0] + drag.force[0] + rest.force[0] + cor_f[0]
    fy = thrust.force[1] + drag.force[1] + rest.force[1] + cor_f[1]
    fz = thrust.force[2] + drag.force[2] + rest.force[2] + cor_f[2]
    tx = thrust.torque[0] + drag.torque[0] + rest.torque[0] + cor_t[0]
    ty = thrust.torque[1] + drag.torque[1] + rest.torque[1] + cor_t[1]
    tz = thrust.torque[2] + drag.torque[2] + rest.torque[2] + cor_t[2]

    u2 = u + dt * fx * model.inv_m_tr[0]
    v2 = v + dt * fy * model.inv_m_tr[1]
    w2 = w + dt * fz * model.inv_m_tr[2]
    Ji = model.inv_m_rot
    p2 = p + dt * (Ji[0][0] * tx + Ji[0][1] * ty + Ji[0][2] * tz)
    r2 = r_ + dt * (Ji[1][0] * tx + Ji[1][1] * ty + Ji[1][2] * tz)
    s2 = s + dt * (Ji[2][0] * tx + Ji[2][1] * ty + Ji[2][2] * tz)

    vel_w = qrotate(q, (u2, v2, w2))
    pos2 = (px + dt * vel_w[0], py + dt * vel_w[1], pz + dt * vel_w[2])

    # body-frame angular increment; exact for constant rate over the step
    ax, ay, az = p2 * dt, r2 * dt, s2 * dt
    angle_sq = ax * ax + ay * ay + az * az
    if angle_sq < 1e-24:
        dq = (1.0, 0.5 * ax, 0.5 * ay, 0.5 * az)
    else:
        angle = math.sqrt(angle_sq)
        half = 0.5 * angle
        f2 = math.sin(half) / angle
        dq = (math.cos(half), ax * f2, ay * f2, az * f2)
    q2 = qnormalize(qmul(q, dq))

    return BodyState(pos2, q2, (u2, v2, w2), (p2, r2, s2))


def mechanical_energy(model: BodyModel, env: EnvironmentConfig, state: BodyState) -> float:
    """Kinetic plus potential energy, valid while fully submerged.

    Kinetic energy includes the added-mass contribution (vehicle plus
    entrained fluid); potential combines weight and buoyancy, so for a
    neutrally trimmed vehicle it is depth-independent.
    """
    u, v, w = state.velocity
    om = state.angular_velocity
    ke = 0.5 * (
        model.m_tr[0] * u * u + model.m_tr[1] * v * v + model.m_tr[2] * w * w
    )
    J = model.m_rot
    jw = (
        J[0][0] * om[0] + J[0][1] * om[1] + J[0][2] * om[2],
        J[1][0] * om[0] + J[1][1] * om[1] + J[1][2] * om[2],
        J[2][0] * om[0] + J[2][1] * om[1] + J[2][2] * om[2],
    )
    ke += 0.5 * (om[0] * jw[0] + om[1] * jw[1] + om[2] * jw[2])
    g = env.gravity
    buoy = env.water_density * model.volume * g
    # z down: weight loses potential with depth, buoyancy gains
    pe = (buoy - model.mass * g) * state.position[2]
    # metacentric term: tilting lifts the CoB's potential, minimal upright
    r = model.r_cb
    down_body = qrotate_inv(state.orientation, (0.0, 0.0, 1.0))
    pe += buoy * (r[0] * down_body[0] + r[1] * down_body[1] + r[2] * down_body[2])
    return ke + pe
