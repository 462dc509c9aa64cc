"""Deterministic simulation loop, logging, and replay.

One Simulation object owns the whole stack: dynamics, sensors, control,
behaviors, and a bus endpoint. Everything advances on a fixed 100 Hz grid
in a single thread; external commands (from the TCP broker or the WebSocket
gateway) land in a mailbox and are applied between steps, so a run with no
external traffic is a pure function of (scenario, seed) and two such runs
produce byte-identical logs.

Log files are JSON lines, one message per line:

    {"seq": 12, "t_ns": 340000000, "topic": "/sensors/depth", "payload": {...}}

seq counts per topic without gaps; t_ns is simulation time. Serialization
uses sorted keys and repr floats, which is what makes determinism checkable
with a file hash.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
import time
from collections import deque

import numpy as np

from .behaviors import (
    MavFollower,
    FollowParams,
    MenuFsm,
    MissionSupervisor,
    Token,
    detection_color,
    render_hreye,
)
from .bus.broker import InProcessClient, Router
from .control import AllocationMatrix, Autopilot, Estimate, Setpoints, flyby_mix, thrust_to_pwm
from .dynamics import DT, BodyModel, BodyState, step, thruster_wrench
from .quat import qrotate, qto_euler, vadd, vscale
from .scenario import MODES, Scenario
from .sensors import (
    BatteryState,
    battery_step,
    detect_target,
    estimate_pose,
    sample_ahrs,
    sample_depth,
    thruster_current,
)
from .vehicle import ConfigError, apply_environment_patch, apply_patch

# topic namespace
T_AHRS = "/sensors/ahrs"
T_DEPTH = "/sensors/depth"
T_BATTERY = "/sensors/battery"
T_TARGET = "/perception/target"
T_THRUSTERS = "/actuators/thrusters"
T_PWM = "/actuators/pwm"
T_HREYE = "/uhri/hreye"
T_OLED_FRONT = "/uhri/oled/front"
T_OLED_SIDE = "/uhri/oled/side"
T_SIREN = "/uhri/siren"
T_TOKEN = "/cmd/token"
T_SETPOINT = "/cmd/setpoint"
T_PILOT = "/cmd/pilot"
T_ARM = "/cmd/arm"
T_MODE = "/cmd/mode"
T_PATCH = "/sim/patch"
T_TRUTH = "/sim/truth"
T_ESTIMATE = "/sim/estimate"
T_EVENT = "/sim/event"

COMMAND_TOPICS = (T_TOKEN, T_SETPOINT, T_PILOT, T_ARM, T_MODE, T_PATCH)

_STEP_NS = 10_000_000  # 0.01 s


class LogWriter:
    """Subscribes to every topic and appends canonical JSON lines."""

    def __init__(self, path: str, router: Router):
        self._fh = open(path, "w")
        self._seq: dict[str, int] = {}
        self._lock = threading.Lock()
        self._client = InProcessClient(router, "log")
        self._client.subscribe("/*", self._on_frame)
        self.path = path

    def _on_frame(self, frame) -> None:
        try:
            payload = json.loads(frame.payload.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            payload = {"raw_hex": frame.payload.hex()}
        with self._lock:
            seq = self._seq.get(frame.topic, 0)
            self._seq[frame.topic] = seq + 1
            line = json.dumps(
                {
                    "seq": seq,
                    "t_ns": frame.timestamp_ns,
                    "topic": frame.topic,
                    "payload": payload,
                },
                sort_keys=True,
            )
            self._fh.write(line + "\n")

    def close(self) -> None:
        with self._lock:
            self._client.close()
            self._fh.flush()
            self._fh.close()


class Simulation:
    """The full vehicle stack stepping on a fixed grid.

    Public surface for embedding: step_once(), run_for(), the router, and
    submit() for thread-safe command injection. Everything else is loop
    internals.
    """

    def __init__(self, scenario: Scenario, router: Router | None = None,
                 log_path: str | None = None):
        self.scenario = scenario
        self.config = scenario.vehicle
        self.env = scenario.environment
        self.model = BodyModel(self.config)
        self.alloc = AllocationMatrix(self.config)
        self.state: BodyState = scenario.initial
        self.rng = np.random.default_rng(scenario.seed)
        self.router = router if router is not None else Router()
        self.log = LogWriter(log_path, self.router) if log_path else None
        self.bus = InProcessClient(self.router, "sim")
        self._mail: deque = deque()
        self._mail_lock = threading.Lock()
        for topic in COMMAND_TOPICS:
            self.bus.subscribe(topic, self._on_command)

        sensors = self.config.sensors
        self.autopilot = Autopilot(self.config.control, {
            "depth": 1.0 / sensors.depth.rate_hz,
            "roll": 1.0 / sensors.ahrs.rate_hz,
            "pitch": 1.0 / sensors.ahrs.rate_hz,
            "yaw_rate": 1.0 / sensors.ahrs.rate_hz,
        })
        self.follower = MavFollower(FollowParams(), self.config)
        self.menu = MenuFsm(scenario.menu)
        self.supervisor = MissionSupervisor()
        self.supervisor.armed = scenario.armed
        self.supervisor.mode = scenario.mode
        self.setpoints = scenario.setpoints
        self.pilot = scenario.pilot
        self.battery = BatteryState(self.config.battery.capacity_wh)
        depth0 = scenario.initial.position[2] - self.env.surface_z
        self.supervisor.hold_depth = (
            scenario.setpoints.depth if scenario.setpoints.depth is not None else depth0
        )

        rates = dict(scenario.output_rates)
        self._rate = {
            "ahrs": sensors.ahrs.rate_hz,
            "depth": sensors.depth.rate_hz,
            "battery": sensors.battery.rate_hz,
            "camera": sensors.camera.rate_hz,
            "truth": rates.get("truth", 10.0),
            "estimate": rates.get("estimate", 20.0),
            "actuators": rates.get("actuators", 20.0),
            "hreye": rates.get("hreye", 10.0),
        }
        self._fired = {name: 0 for name in self._rate}

        self.n = 0
        self.estimate = Estimate()
        self._est_yaw = 0.0
        self._est_q = None
        self._fresh: set[str] = set()
        self._detection = None
        self._follower_wrench = (0.0,) * 6
        self._alloc_result = None
        self._thrusts = (0.0,) * len(self.config.thrusters)
        self._battery_current = 0.0
        self._low_batt_announced: set[int] = set()
        self._event_idx = 0
        self._last_oled: dict[str, list[str] | None] = {"front": None, "side": None}
        self._oled_forced_at = -10.0
        self.blown_up = False
        self.steps_total = int(round(scenario.duration / DT))

    # -- time ---------------------------------------------------------------

    @property
    def t(self) -> float:
        return self.n * DT

    @property
    def t_ns(self) -> int:
        return self.n * _STEP_NS

    def _due(self, name: str) -> bool:
        """Fire whenever sim time has reached the next 1/rate boundary."""
        k = self._fired[name]
        if self.t + 1e-12 >= k / self._rate[name]:
            self._fired[name] = k + 1
            return True
        return False

    # -- external commands ----------------------------------------------------

    def submit(self, topic: str, payload: dict) -> None:
        """Thread-safe command injection, same path as bus subscriptions."""
        with self._mail_lock:
            self._mail.append((topic, payload))

    def _on_command(self, frame) -> None:
        try:
            payload = json.loads(frame.payload.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            payload = None
        with self._mail_lock:
            self._mail.append((frame.topic, payload))

    def _publish(self, topic: str, payload: dict) -> None:
        self.bus.publish(topic, payload, self.t_ns)

    def _event(self, payload: dict) -> None:
        self._publish(T_EVENT, payload)

    # -- command handling -----------------------------------------------------

    def _drain_mailbox(self) -> None:
        while True:
            with self._mail_lock:
                if not self._mail:
                    return
                topic, payload = self._mail.popleft()
            self._handle_command(topic, payload)

    def _handle_command(self, topic: str, payload) -> None:
        if not isinstance(payload, dict):
            self._event({"event": "bad_command", "topic": topic})
            return
        if topic == T_TOKEN:
            name = payload.get("token")
            if name not in Token.__members__:
                self._event({"event": "bad_command", "topic": topic, "token": name})
                return
            self._handle_token(Token[name])
        elif topic == T_SETPOINT:
            self._merge_setpoints(payload)
        elif topic == T_PILOT:
            axes = payload.get("axes")
            if isinstance(axes, list) and len(axes) == 6:
                self.pilot = tuple(max(-1.0, min(1.0, float(a))) for a in axes)
            else:
                self._event({"event": "bad_command", "topic": topic})
        elif topic == T_ARM:
            self._set_armed(bool(payload.get("armed")))
        elif topic == T_MODE:
            self._set_mode(str(payload.get("mode", "")))
        elif topic == T_PATCH:
            self.apply_runtime_patch(payload)

    def _merge_setpoints(self, payload: dict) -> None:
        for key in ("depth", "roll", "pitch", "yaw_rate"):
            if key in payload:
                v = payload[key]
                setattr(self.setpoints, key, float(v) if v is not None else None)
        for key in ("surge", "sway"):
            if key in payload and payload[key] is not None:
                setattr(self.setpoints, key, float(payload[key]))
        if self.supervisor.mode == "depth_hold" and self.setpoints.depth is not None:
            self.supervisor.hold_depth = self.setpoints.depth

    def _handle_token(self, token: Token) -> None:
        self._event({"event": "token", "token": token.value})
        result = self.menu.handle(token)
        if result is None:
            return
        if result.kind == "action":
            says = self.supervisor.apply(result.action, self.estimate.depth)
            self._after_supervisor_change(result.action)
        else:
            says = self.supervisor.cancel()
        for say in says:
            self._publish(T_SIREN, {"say": say})
        self._event({"event": result.kind, "action": result.action})

    def _after_supervisor_change(self, action: str) -> None:
        if action == "mav_start":
            self.follower.reset()
        if action == "disarm":
            self.autopilot.reset()
            self.follower.reset()

    def _set_armed(self, armed: bool) -> None:
        if armed == self.supervisor.armed:
            return
        if armed:
            self.supervisor.apply("arm")
        else:
            self.supervisor.apply("disarm")
            self.autopilot.reset()
            self.follower.reset()
        self._publish(T_SIREN, {"say": "armed" if armed else "disarmed"})
        self._event({"event": "arm", "armed": armed})

    def _set_mode(self, mode: str) -> None:
        if mode not in MODES:
            self._event({"event": "bad_command", "topic": T_MODE, "mode": mode})
            return
        if mode == "mav":
            self.follower.reset()
        if mode in ("depth_hold", "mav"):
            self.supervisor.hold_depth = (
                self.estimate.depth if self.estimate.depth is not None
                else self.state.position[2] - self.env.surface_z
            )
        self.supervisor.mode = mode
        self._event({"event": "mode", "mode": mode})

    # -- runtime reconfiguration ----------------------------------------------

    def apply_runtime_patch(self, payload: dict) -> tuple[bool, str]:
        """Apply a {"vehicle": ..., "environment": ...} patch between steps."""
        rid = payload.get("rid")
        vehicle_patch = payload.get("vehicle")
        env_patch = payload.get("environment")
        try:
            new_config = self.config
            new_env = self.env
            if vehicle_patch is not None:
                new_config = apply_patch(self.config, vehicle_patch)
            if env_patch is not None:
                new_env = apply_environment_patch(self.env, env_patch)
        except ConfigError as exc:
            self._event({"event": "patch_rejected", "error": str(exc), "rid": rid})
            return False, str(exc)
        if vehicle_patch is not None:
            self._swap_config(new_config)
        self.env = new_env
        self._event({"event": "patch_applied", "rid": rid})
        return True, "applied"

    def _swap_config(self, new_config) -> None:
        """Install a new vehicle config while preserving controller state."""
        self.config = new_config
        self.model = BodyModel(new_config)
        self.alloc = AllocationMatrix(new_config)
        self.battery.energy_wh = min(self.battery.energy_wh, new_config.battery.capacity_wh)
        # keep PID internals, swap gain references
        self.autopilot.control = new_config.control
        for name, pid in self.autopilot.pids.items():
            pid.gains = new_config.control.gains[name]
        keep = self.follower.__dict__.copy()
        self.follower = MavFollower(self.follower.params, new_config)
        for key in ("time_since_seen", "last_range", "last_range_age",
                    "last_azimuth_sign", "closing"):
            setattr(self.follower, key, keep[key])
        if len(self._thrusts) != len(new_config.thrusters):
            self._thrusts = (0.0,) * len(new_config.thrusters)

    # -- scenario events --------------------------------------------------------

    def _apply_events(self) -> None:
        events = self.scenario.events
        while self._event_idx < len(events) and events[self._event_idx].t <= self.t + 1e-12:
            ev = events[self._event_idx]
            self._event_idx += 1
            if ev.kind == "token":
                self._handle_token(ev.value)
            elif ev.kind == "patch":
                self.apply_runtime_patch({"vehicle": ev.value})
            elif ev.kind == "environment":
                self.apply_runtime_patch({"environment": ev.value})
            elif ev.kind == "remove_thruster":
                self.apply_runtime_patch({"vehicle": {"thrusters": {"remove": [ev.value]}}})
            elif ev.kind == "arm":
                self._set_armed(ev.value)
            elif ev.kind == "mode":
                self._set_mode(ev.value)
            elif ev.kind == "setpoints":
                sp: Setpoints = ev.value
                self.setpoints = Setpoints(**sp.__dict__)
                if self.supervisor.mode == "depth_hold" and sp.depth is not None:
                    self.supervisor.hold_depth = sp.depth
            elif ev.kind == "pilot":
                self.pilot = ev.value

    # -- sensors ----------------------------------------------------------------

    def _sample_sensors(self) -> None:
        self._fresh = set()
        sensors = self.config.sensors
        if self._due("ahrs"):
            reading = sample_ahrs(sensors.ahrs, self.state, self.rng)
            q_est, w_est = estimate_pose(reading, sensors.ahrs.believed_mount)
            roll, pitch, yaw = qto_euler(q_est)
            self.estimate.roll = roll
            self.estimate.pitch = pitch
            self.estimate.yaw_rate = w_est[2]
            self._est_yaw = yaw
            self._est_q = q_est
            self._fresh.update(("roll", "pitch", "yaw_rate"))
            self._publish(T_AHRS, {
                "orientation": list(reading.orientation),
                "angular_velocity": list(reading.angular_velocity),
            })
        if self._due("depth"):
            d = sample_depth(sensors.depth, self.state, self.env.surface_z, self.rng)
            self.estimate.depth = d
            self._fresh.add("depth")
            self._publish(T_DEPTH, {"depth": d})
        if self._due("camera"):
            target = self.scenario.target
            if target is None:
                self._detection = None
            else:
                det = detect_target(
                    sensors.camera, self.state, target.position_at(self.t), self.rng
                )
                self._detection = det
                if det is None:
                    self._publish(T_TARGET, {"visible": False})
                else:
                    self._publish(T_TARGET, {
                        "visible": True,
                        "range": det.range,
                        "azimuth": det.azimuth,
                        "elevation": det.elevation,
                        "direction": list(det.direction),
                        "class": self.scenario.target_class,
                    })
            # follower consumes detections at camera cadence
            self._follower_wrench = self.follower.update(
                self._detection, 1.0 / self._rate["camera"]
            )
        if self._due("battery"):
            cap = self.config.battery.capacity_wh
            frac = self.battery.energy_wh / cap if cap > 0 else 0.0
            self._publish(T_BATTERY, {
                "voltage": self.config.battery.nominal_voltage,
                "current": self._battery_current,
                "energy_wh": self.battery.energy_wh,
                "fraction": frac,
            })

    # -- control ------------------------------------------------------------------

    # m/s cap on how fast the followed target may drag the held depth
    MAV_DEPTH_SLEW = 0.25

    def _retarget_hold_depth(self) -> None:
        """Walk the held depth toward the depth implied by the detection.

        The bearing-only follower cannot close a vertical offset on its own
        (the depth loop would fight it), so the supervisor's depth setpoint
        tracks where the detection says the target sits. Slew-limited so a
        glitching detection cannot step the depth command.
        """
        det = self._detection
        if det is None or self._est_q is None or self.estimate.depth is None:
            return
        cam = self.config.sensors.camera.mount
        rel_cam = vscale(det.direction, det.range)
        rel_body = vadd(cam.translation, qrotate(cam.rotation, rel_cam))
        target_depth = self.estimate.depth + qrotate(self._est_q, rel_body)[2]
        step = max(-self.MAV_DEPTH_SLEW * DT,
                   min(self.MAV_DEPTH_SLEW * DT,
                       target_depth - self.supervisor.hold_depth))
        self.supervisor.hold_depth += step

    def _control_tick(self) -> None:
        sup = self.supervisor
        mode = sup.mode
        if not sup.armed or mode == "idle":
            request = (0.0,) * 6
        elif mode == "manual":
            request = flyby_mix(self.pilot, self.config.control.axis_scale)
        elif mode == "autopilot":
            request = self.autopilot.step(self.setpoints, self.estimate, self._fresh)
            if self.autopilot.fault:
                self._event({"event": "fault", "what": "autopilot_missing_estimate"})
        elif mode == "depth_hold":
            sp = Setpoints(depth=sup.hold_depth, roll=0.0, pitch=0.0, yaw_rate=0.0)
            request = self.autopilot.step(sp, self.estimate, self._fresh)
            if self.autopilot.fault:
                self._event({"event": "fault", "what": "autopilot_missing_estimate"})
        else:  # mav
            if self.follower.lost:
                request = (0.0,) * 6
            else:
                self._retarget_hold_depth()
                fw = self._follower_wrench
                sp = Setpoints(depth=sup.hold_depth, roll=0.0)
                base = self.autopilot.step(sp, self.estimate, self._fresh)
                request = (fw[0], 0.0, base[2], base[3], fw[4], fw[5])

        if sup.armed:
            result = self.alloc.allocate(request)
            self._thrusts = result.thrusts
            self._alloc_result = result
        else:
            self._thrusts = (0.0,) * len(self.config.thrusters)
            self._alloc_result = None

        amps = thruster_current(self.config, self._thrusts)
        self._battery_current = battery_step(self.battery, self.config.battery, amps, DT)
        frac = self.battery.energy_wh / self.config.battery.capacity_wh
        for mark in (20, 10):
            if frac * 100.0 <= mark and mark not in self._low_batt_announced:
                self._low_batt_announced.add(mark)
                self._publish(T_SIREN, {"say": f"battery below {mark} percent"})
        if self.battery.empty and sup.armed:
            self._publish(T_SIREN, {"say": "battery empty"})
            self._event({"event": "battery_empty"})
            self._set_armed(False)

    # -- displays --------------------------------------------------------------------

    def _hreye_frame(self) -> dict:
        sup = self.supervisor
        if not sup.armed:
            pattern, color = "solid", (0, 0, 40)
        elif sup.mode == "mav":
            if self.follower.tracking:
                pattern, color = "solid", detection_color(self.scenario.target_class)
            elif self.follower.lost:
                pattern, color = "blink", (255, 0, 0)
            else:
                pattern, color = "spinner", (255, 140, 0)
        elif sup.mode in ("autopilot", "depth_hold"):
            pattern, color = "blink", (0, 128, 128)
        elif sup.mode == "manual":
            pattern, color = "solid", (40, 40, 40)
        else:
            pattern, color = "solid", (0, 128, 0)
        frame = render_hreye(pattern, color, self.t)
        frame["pattern"] = pattern
        frame["color"] = list(color)
        return frame

    def _publish_outputs(self) -> None:
        if self._due("truth"):
            s = self.state
            self._publish(T_TRUTH, {
                "position": list(s.position),
                "orientation": list(s.orientation),
                "velocity": list(s.velocity),
                "angular_velocity": list(s.angular_velocity),
            })
        if self._due("estimate"):
            e = self.estimate
            self._publish(T_ESTIMATE, {
                "depth": e.depth,
                "roll": e.roll,
                "pitch": e.pitch,
                "yaw": self._est_yaw if e.roll is not None else None,
                "yaw_rate": e.yaw_rate,
                "orientation": list(self._est_q) if self._est_q else None,
            })
        if self._due("actuators"):
            result = self._alloc_result
            self._publish(T_THRUSTERS, {
                "ids": list(self.alloc.ids),
                "thrusts": list(self._thrusts),
                "scale": result.scale if result else 1.0,
                "saturated": bool(result.saturated) if result else False,
                "residual": result.residual if result else 0.0,
            })
            deadband = self.config.control.pwm_deadband
            pwm = []
            ok = []
            for spec, u in zip(self.config.thrusters, self._thrusts):
                value, in_range = thrust_to_pwm(spec, u, deadband)
                pwm.append(value)
                ok.append(bool(in_range))
            self._publish(T_PWM, {"pwm": pwm, "in_range": ok})
        if self._due("hreye"):
            self._publish(T_HREYE, self._hreye_frame())
            front = [
                self.supervisor.status_line(),
                f"Batt {int(100 * self.battery.energy_wh / self.config.battery.capacity_wh)}%",
            ]
            side = self.menu.display_lines()
            force = self.t - self._oled_forced_at >= 1.0 - 1e-9
            if force or front != self._last_oled["front"]:
                self._publish(T_OLED_FRONT, {"lines": front})
                self._last_oled["front"] = front
            if force or side != self._last_oled["side"]:
                self._publish(T_OLED_SIDE, {"lines": side})
                self._last_oled["side"] = side
            if force:
                self._oled_forced_at = self.t

    # -- main loop ----------------------------------------------------------------------

    def step_once(self) -> None:
        self._apply_events()
        self._drain_mailbox()
        self._sample_sensors()
        self._control_tick()
        self._publish_outputs()
        wrench = thruster_wrench(self.model, self._thrusts)
        self.state = step(self.model, self.env, self.state, wrench, self.t, DT)
        self.n += 1
        s = self.state
        if not (
            all(math.isfinite(x) for x in s.position)
            and all(math.isfinite(x) for x in s.velocity)
            and all(math.isfinite(x) for x in s.orientation)
        ):
            self.blown_up = True
            raise SimulationBlowUp(f"non-finite state at t={self.t:.2f}s")

    def run_for(self, steps: int) -> None:
        for _ in range(steps):
            self.step_once()

    @property
    def finished(self) -> bool:
        return self.n >= self.steps_total

    def close(self) -> None:
        if self.log is not None:
            self.log.close()
            self.log = None
        self.bus.close()


class SimulationBlowUp(RuntimeError):
    """Physics produced a non-finite state; the run cannot continue."""


def run_scenario(
    scenario: Scenario,
    log_path: str | None = None,
    fast: bool = True,
    speed: float = 1.0,
    router: Router | None = None,
    stop: threading.Event | None = None,
) -> dict:
    """Run a scenario to completion; returns a summary with the log hash."""
    sim = Simulation(scenario, router=router, log_path=log_path)
    try:
        if fast:
            while not sim.finished and (stop is None or not stop.is_set()):
                sim.step_once()
        else:
            t0 = time.monotonic()
            while not sim.finished and (stop is None or not stop.is_set()):
                sim.step_once()
                ahead = sim.t / speed - (time.monotonic() - t0)
                if ahead > 0.001:
                    time.sleep(ahead)
    finally:
        sim.close()
    summary = {
        "scenario": scenario.name,
        "steps": sim.n,
        "sim_time": sim.t,
        "blown_up": sim.blown_up,
        "final_position": list(sim.state.position),
    }
    if log_path:
        summary["log_path"] = log_path
        summary["log_sha256"] = file_sha256(log_path)
    return summary


def file_sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def replay_log(
    path: str,
    sink,
    speed: float = 1.0,
    sleep=time.sleep,
) -> dict:
    """Re-emit a JSON-lines log through sink(topic, t_ns, payload).

    Pacing follows the recorded timestamps divided by speed; speed=inf
    replays as fast as possible. Corrupt lines are skipped and counted
    rather than aborting the replay.
    """
    if not (speed > 0):
        raise ValueError("speed must be > 0 (use math.inf for unpaced)")
    messages = 0
    skipped = 0
    t0_ns: int | None = None
    wall0 = time.monotonic()
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                topic = rec["topic"]
                t_ns = rec["t_ns"]
                payload = rec["payload"]
                if not isinstance(topic, str) or not isinstance(t_ns, int):
                    raise ValueError("bad record")
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                skipped += 1
                continue
            if t0_ns is None:
                t0_ns = t_ns
            if math.isfinite(speed):
                due = (t_ns - t0_ns) / 1e9 / speed
                ahead = due - (time.monotonic() - wall0)
                if ahead > 0.001:
                    sleep(ahead)
            sink(topic, t_ns, payload)
            messages += 1
    return {"messages": messages, "skipped": skipped}
