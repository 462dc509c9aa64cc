"""Scenario documents: what to simulate, for how long, and what happens.

A scenario JSON names a vehicle (builtin, file path, or inline document),
an environment, an initial state, and a timeline of events that fire
between physics steps: interaction tokens, runtime patches, arming, mode
switches, setpoint changes. Every run is fully determined by the scenario
plus its seed.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

from .behaviors import DEFAULT_MENU, MenuItem, Token
from .control import Setpoints
from .dynamics import BodyState, initial_state
from .quat import Vec3, qfrom_euler
from .vehicle import (
    ConfigError,
    EnvironmentConfig,
    VehicleConfig,
    apply_patch,
    config_from_document,
    environment_from_document,
    load_config,
    load_reference_config,
)


class ScenarioError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


EVENT_KINDS = ("token", "patch", "environment", "remove_thruster",
               "arm", "mode", "setpoints", "pilot")

MODES = ("idle", "manual", "autopilot", "depth_hold", "mav")


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    value: object


class TargetPath:
    """Target position over time: fixed point or piecewise-linear waypoints."""

    def __init__(self, static: Vec3 | None = None, waypoints=None):
        if (static is None) == (waypoints is None):
            raise ValueError("exactly one of static/waypoints required")
        self.static = static
        self.waypoints = waypoints  # list of (t, position), t ascending

    def position_at(self, t: float) -> Vec3:
        if self.static is not None:
            return self.static
        pts = self.waypoints
        if t <= pts[0][0]:
            return pts[0][1]
        for (t0, p0), (t1, p1) in zip(pts, pts[1:]):
            if t <= t1:
                f = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
                return (
                    p0[0] + f * (p1[0] - p0[0]),
                    p0[1] + f * (p1[1] - p0[1]),
                    p0[2] + f * (p1[2] - p0[2]),
                )
        return pts[-1][1]


@dataclass
class Scenario:
    name: str
    vehicle: VehicleConfig
    environment: EnvironmentConfig
    initial: BodyState
    duration: float
    seed: int
    menu: tuple[MenuItem, ...]
    target: TargetPath | None
    target_class: str
    events: tuple[Event, ...]
    armed: bool
    mode: str
    setpoints: Setpoints
    pilot: tuple[float, ...]
    output_rates: dict = field(default_factory=dict)


def _vec3(doc, key, path, default):
    v = doc.get(key, list(default))
    if not isinstance(v, list) or len(v) != 3 or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in v
    ):
        raise ScenarioError(f"{path}.{key}", "expected a 3-element number array")
    return (float(v[0]), float(v[1]), float(v[2]))


def _load_vehicle(doc, base_dir: str) -> VehicleConfig:
    ref = doc.get("vehicle", "builtin:meco")
    try:
        if isinstance(ref, dict):
            config = config_from_document(ref)
        elif ref == "builtin:meco":
            config = load_reference_config()
        elif isinstance(ref, str):
            path = ref if os.path.isabs(ref) else os.path.join(base_dir, ref)
            if not os.path.exists(path):
                raise ScenarioError("vehicle", f"no vehicle file at {path}")
            with open(path) as fh:
                config = load_config(fh.read())
        else:
            raise ScenarioError("vehicle", "expected a name, path, or inline object")
        patch = doc.get("vehicle_patch")
        if patch is not None:
            config = apply_patch(config, patch)
        return config
    except ConfigError as exc:
        raise ScenarioError(f"vehicle:{exc.path}", exc.message) from exc


def _initial_state(doc) -> BodyState:
    sub = doc.get("initial_state", {})
    if not isinstance(sub, dict):
        raise ScenarioError("initial_state", "expected an object")
    path = "initial_state"
    pos = _vec3(sub, "position", path, (0.0, 0.0, 5.0))
    rpy = _vec3(sub, "orientation_rpy", path, (0.0, 0.0, 0.0))
    vel = _vec3(sub, "velocity", path, (0.0, 0.0, 0.0))
    omega = _vec3(sub, "angular_velocity", path, (0.0, 0.0, 0.0))
    return initial_state(pos, qfrom_euler(*rpy), vel, omega)


def _setpoints(doc, path) -> Setpoints:
    if not isinstance(doc, dict):
        raise ScenarioError(path, "expected an object")
    sp = Setpoints()
    for key in ("depth", "roll", "pitch", "yaw_rate"):
        if key in doc and doc[key] is not None:
            v = doc[key]
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ScenarioError(f"{path}.{key}", "expected a number")
            setattr(sp, key, float(v))
    for key in ("surge", "sway"):
        if key in doc:
            v = doc[key]
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ScenarioError(f"{path}.{key}", "expected a number")
            setattr(sp, key, float(v))
    return sp


def _target(doc) -> tuple[TargetPath | None, str]:
    sub = doc.get("target")
    if sub is None:
        return None, "bag"
    if not isinstance(sub, dict):
        raise ScenarioError("target", "expected an object")
    cls = sub.get("class", "bag")
    if not isinstance(cls, str):
        raise ScenarioError("target.class", "expected a string")
    if "static" in sub:
        return TargetPath(static=_vec3(sub, "static", "target", (0, 0, 0))), cls
    if "waypoints" in sub:
        wps = sub["waypoints"]
        if not isinstance(wps, list) or not wps:
            raise ScenarioError("target.waypoints", "expected a nonempty array")
        parsed = []
        last_t = -math.inf
        for i, wp in enumerate(wps):
            wpath = f"target.waypoints[{i}]"
            if not isinstance(wp, dict) or "t" not in wp:
                raise ScenarioError(wpath, "expected an object with t and position")
            t = wp["t"]
            if not isinstance(t, (int, float)) or isinstance(t, bool) or t < last_t:
                raise ScenarioError(f"{wpath}.t", "times must be ascending numbers")
            last_t = float(t)
            parsed.append((float(t), _vec3(wp, "position", wpath, (0, 0, 0))))
        return TargetPath(waypoints=parsed), cls
    raise ScenarioError("target", "needs either static or waypoints")


def _events(doc) -> tuple[Event, ...]:
    raw = doc.get("events", [])
    if not isinstance(raw, list):
        raise ScenarioError("events", "expected an array")
    events = []
    for i, ev in enumerate(raw):
        path = f"events[{i}]"
        if not isinstance(ev, dict) or "t" not in ev:
            raise ScenarioError(path, "expected an object with a t field")
        t = ev["t"]
        if not isinstance(t, (int, float)) or isinstance(t, bool) or t < 0:
            raise ScenarioError(f"{path}.t", "expected a time >= 0")
        kinds = [k for k in EVENT_KINDS if k in ev]
        if len(kinds) != 1:
            raise ScenarioError(path, f"expected exactly one of {', '.join(EVENT_KINDS)}")
        kind = kinds[0]
        value = ev[kind]
        if kind == "token":
            if not isinstance(value, str) or value not in Token.__members__:
                names = ", ".join(Token.__members__)
                raise ScenarioError(f"{path}.token", f"expected one of {names}")
            value = Token[value]
        elif kind == "remove_thruster":
            if not isinstance(value, str):
                raise ScenarioError(f"{path}.remove_thruster", "expected a thruster id")
        elif kind == "arm":
            if not isinstance(value, bool):
                raise ScenarioError(f"{path}.arm", "expected a boolean")
        elif kind == "mode":
            if value not in MODES:
                raise ScenarioError(f"{path}.mode", f"expected one of {', '.join(MODES)}")
        elif kind == "setpoints":
            value = _setpoints(value, f"{path}.setpoints")
        elif kind == "pilot":
            if not isinstance(value, list) or len(value) != 6:
                raise ScenarioError(f"{path}.pilot", "expected six axis values")
            value = tuple(max(-1.0, min(1.0, float(x))) for x in value)
        elif kind in ("patch", "environment"):
            if not isinstance(value, dict):
                raise ScenarioError(f"{path}.{kind}", "expected an object")
        events.append(Event(float(t), kind, value))
    events.sort(key=lambda e: e.t)
    return tuple(events)


def scenario_from_document(doc: dict, base_dir: str = ".") -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("$", "expected a JSON object")
    name = doc.get("name", "scenario")
    if not isinstance(name, str):
        raise ScenarioError("name", "expected a string")
    duration = doc.get("duration", 60.0)
    if not isinstance(duration, (int, float)) or isinstance(duration, bool) or duration <= 0:
        raise ScenarioError("duration", "expected a positive number of seconds")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ScenarioError("seed", "expected a nonnegative integer")
    try:
        environment = environment_from_document(doc.get("environment"))
    except ConfigError as exc:
        raise ScenarioError(exc.path, exc.message) from exc
    menu_doc = doc.get("menu")
    if menu_doc is None:
        menu = DEFAULT_MENU
    else:
        if not isinstance(menu_doc, list) or not menu_doc:
            raise ScenarioError("menu", "expected a nonempty array")
        menu = tuple(
            MenuItem(str(item.get("label", item.get("action", "?"))), str(item["action"]))
            if isinstance(item, dict) and "action" in item
            else _bad_menu_item(i)
            for i, item in enumerate(menu_doc)
        )
    mode = doc.get("mode", "idle")
    if mode not in MODES:
        raise ScenarioError("mode", f"expected one of {', '.join(MODES)}")
    armed = doc.get("armed", False)
    if not isinstance(armed, bool):
        raise ScenarioError("armed", "expected a boolean")
    target, target_class = _target(doc)
    rates = doc.get("output_rates", {})
    if not isinstance(rates, dict):
        raise ScenarioError("output_rates", "expected an object")
    for key, value in rates.items():
        if key not in ("truth", "estimate", "actuators", "hreye"):
            raise ScenarioError(f"output_rates.{key}", "unknown output stream")
        if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
            raise ScenarioError(f"output_rates.{key}", "expected a positive rate")
    pilot_raw = doc.get("pilot", [0.0] * 6)
    if not isinstance(pilot_raw, list) or len(pilot_raw) != 6:
        raise ScenarioError("pilot", "expected six axis values")
    return Scenario(
        name=name,
        vehicle=_load_vehicle(doc, base_dir),
        environment=environment,
        initial=_initial_state(doc),
        duration=float(duration),
        seed=seed,
        menu=menu,
        target=target,
        target_class=target_class,
        events=_events(doc),
        armed=armed,
        mode=mode,
        setpoints=_setpoints(doc.get("setpoints", {}), "setpoints"),
        pilot=tuple(float(x) for x in pilot_raw),
        output_rates={k: float(v) for k, v in rates.items()},
    )


def _bad_menu_item(index: int):
    raise ScenarioError(f"menu[{index}]", "expected an object with an action")


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("$", f"malformed JSON: {exc}") from exc
    return scenario_from_document(doc, base_dir=os.path.dirname(os.path.abspath(path)))
