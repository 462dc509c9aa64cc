"""Thrust allocation, hold loops, and actuator mapping.

Allocation solves for per-thruster forces that realize a requested body
wrench. The geometry matrix has one column per thruster, direction on top
and moment about the CoG below. With fewer thrusters than six the request
is met in the least-squares sense; actuator limits are honored by scaling
the whole solution down uniformly, which preserves the direction of the
achieved wrench instead of letting one clipped thruster twist it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .vehicle import ControlConfig, PidGains, ThrusterSpec, VehicleConfig

RANK_CUTOFF = 1e-8  # singular values below cutoff * s_max count as zero


@dataclass(frozen=True)
class AllocationResult:
    thrusts: tuple[float, ...]       # per-thruster force, N
    achieved: tuple[float, ...]      # wrench actually produced, 6 entries
    residual: float                  # ||achieved - requested||
    scale: float                     # uniform factor applied, 1.0 if unsaturated
    saturated: bool


class AllocationMatrix:
    """Pseudo-inverse allocator for a fixed thruster layout.

    Rebuild on any thruster or CoG change. `rank` tells how many wrench
    directions the layout can span; requests outside that space are met
    by their closest achievable projection.
    """

    def __init__(self, config: VehicleConfig):
        cog = config.body.cog
        cols = []
        for t in config.thrusters:
            d = t.direction
            r = (t.position[0] - cog[0], t.position[1] - cog[1], t.position[2] - cog[2])
            cols.append([
                d[0], d[1], d[2],
                r[1] * d[2] - r[2] * d[1],
                r[2] * d[0] - r[0] * d[2],
                r[0] * d[1] - r[1] * d[0],
            ])
        self.ids = tuple(t.id for t in config.thrusters)
        self.matrix = np.array(cols, dtype=float).T      # 6 x n
        self.limit_fwd = np.array([t.max_thrust_fwd for t in config.thrusters])
        self.limit_rev = np.array([t.max_thrust_rev for t in config.thrusters])
        u, s, vt = np.linalg.svd(self.matrix, full_matrices=False)
        cutoff = RANK_CUTOFF * s[0] if s.size and s[0] > 0 else 0.0
        inv_s = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
        self.pinv = (vt.T * inv_s) @ u.T                 # n x 6
        self.rank = int(np.count_nonzero(s > cutoff))

    def allocate(self, wrench) -> AllocationResult:
        """Minimum-norm least-squares thrusts for a 6-entry wrench request."""
        tau = np.asarray(wrench, dtype=float)
        u = self.pinv @ tau
        scale = 1.0
        for i in range(u.shape[0]):
            ui = u[i]
            if ui > self.limit_fwd[i]:
                scale = min(scale, self.limit_fwd[i] / ui)
            elif -ui > self.limit_rev[i]:
                scale = min(scale, self.limit_rev[i] / -ui)
        if scale < 1.0:
            u = u * scale
        achieved = self.matrix @ u
        residual = float(np.linalg.norm(achieved - tau))
        return AllocationResult(
            thrusts=tuple(float(x) for x in u),
            achieved=tuple(float(x) for x in achieved),
            residual=residual,
            scale=scale,
            saturated=scale < 1.0,
        )


def flyby_mix(axes, axis_scale) -> tuple[float, ...]:
    """Map six pilot axes in [-1, 1] to a wrench request via per-axis scales."""
    out = []
    for i in range(6):
        a = axes[i] if i < len(axes) else 0.0
        a = max(-1.0, min(1.0, a))
        out.append(a * axis_scale[i])
    return tuple(out)


class Pid:
    """Clamped-integrator PID with derivative on the measurement.

    Differentiating the measurement instead of the error avoids the output
    spike when the setpoint steps; the integrator clamp bounds windup while
    the output is saturated elsewhere.
    """

    def __init__(self, gains: PidGains, dt: float):
        self.gains = gains
        self.dt = dt
        self.integral = 0.0
        self._prev_measurement: float | None = None

    def reset(self) -> None:
        self.integral = 0.0
        self._prev_measurement = None

    def update(self, setpoint: float, measurement: float) -> float:
        g = self.gains
        error = setpoint - measurement
        self.integral += error * self.dt
        if self.integral > g.integrator_limit:
            self.integral = g.integrator_limit
        elif self.integral < -g.integrator_limit:
            self.integral = -g.integrator_limit
        if self._prev_measurement is None:
            derivative = 0.0
        else:
            derivative = -(measurement - self._prev_measurement) / self.dt
        self._prev_measurement = measurement
        out = g.kp * error + g.ki * self.integral + g.kd * derivative
        if out > g.output_limit:
            return g.output_limit
        if out < -g.output_limit:
            return -g.output_limit
        return out


@dataclass
class Setpoints:
    """Hold targets; None disables that loop."""

    depth: float | None = None
    roll: float | None = None
    pitch: float | None = None
    yaw_rate: float | None = None
    surge: float = 0.0   # normalized feedthrough, [-1, 1]
    sway: float = 0.0


@dataclass
class Estimate:
    """Filtered vehicle state as the controllers see it; None means no data."""

    depth: float | None = None
    roll: float | None = None
    pitch: float | None = None
    yaw_rate: float | None = None


class Autopilot:
    """Depth/roll/pitch hold plus yaw-rate tracking feeding the allocator.

    Each loop runs at the rate its measurement actually updates (a 20 Hz
    pressure sensor must not be differentiated at 100 Hz), so step() takes
    the set of loops with fresh data and holds the last output for the
    rest. An enabled loop with no estimate at all zeroes the whole wrench
    and raises the fault flag, because a partially controlled vehicle is
    worse than a drifting one.
    """

    LOOPS = ("depth", "roll", "pitch", "yaw_rate")

    def __init__(self, control: ControlConfig, loop_dt: dict[str, float]):
        self.control = control
        self.pids = {
            name: Pid(control.gains[name], loop_dt.get(name, 0.01)) for name in self.LOOPS
        }
        self._held = {name: 0.0 for name in self.LOOPS}
        self.fault = False

    def reset(self) -> None:
        for pid in self.pids.values():
            pid.reset()
        self._held = {name: 0.0 for name in self.LOOPS}
        self.fault = False

    def step(self, setpoints: Setpoints, estimate: Estimate, fresh=frozenset(LOOPS)):
        scale = self.control.axis_scale
        self.fault = False
        loops = (
            ("depth", setpoints.depth, estimate.depth),
            ("roll", setpoints.roll, estimate.roll),
            ("pitch", setpoints.pitch, estimate.pitch),
            ("yaw_rate", setpoints.yaw_rate, estimate.yaw_rate),
        )
        for _, sp, est in loops:
            if sp is not None and est is None:
                self.fault = True
                return (0.0,) * 6
        for name, sp, est in loops:
            if sp is None:
                self.pids[name].reset()
                self._held[name] = 0.0
            elif name in fresh:
                self._held[name] = self.pids[name].update(sp, est)
        out = self._held
        surge = max(-1.0, min(1.0, setpoints.surge)) * scale[0]
        sway = max(-1.0, min(1.0, setpoints.sway)) * scale[1]
        return (surge, sway, out["depth"], out["roll"], out["pitch"], out["yaw_rate"])


def thrust_to_pwm(spec: ThrusterSpec, thrust: float, deadband: float = 0.2):
    """Map a thrust command (N) to a pulse width (us).

    Forward and reverse ranges map linearly onto their own PWM half-ranges;
    commands inside the deadband coast at neutral. Out-of-range commands
    clamp to the end stops and are flagged so callers can tell a saturated
    channel from a healthy one.
    """
    if -deadband < thrust < deadband:
        return spec.pwm_neutral, True
    if thrust >= 0.0:
        if thrust > spec.max_thrust_fwd:
            return spec.pwm_max, False
        span = spec.pwm_max - spec.pwm_neutral
        return spec.pwm_neutral + span * thrust / spec.max_thrust_fwd, True
    if -thrust > spec.max_thrust_rev:
        return spec.pwm_min, False
    span = spec.pwm_neutral - spec.pwm_min
    return spec.pwm_neutral + span * thrust / spec.max_thrust_rev, True
