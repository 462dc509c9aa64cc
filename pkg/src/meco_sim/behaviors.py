"""Interaction behaviors: token menu, target following, light rings.

The vehicle is driven underwater through a five-token vocabulary (gesture
or console originated, the FSM does not care). A small menu state machine
turns token sequences into discrete actions; a follower behavior closes
the loop on camera detections; LED ring patterns and OLED text give the
diver feedback. Everything here is pure state-in, state-out logic so the
behaviors are testable without a simulator attached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .sensors import Detection
from .vehicle import VehicleConfig


class Token(Enum):
    NEXT = "NEXT"
    PREV = "PREV"
    SELECT = "SELECT"
    BACK = "BACK"
    START_STOP = "START_STOP"


class MenuState(Enum):
    IDLE = "IDLE"
    BROWSING = "BROWSING"
    CONFIRM = "CONFIRM"
    EXECUTING = "EXECUTING"


@dataclass(frozen=True)
class MenuItem:
    label: str
    action: str


DEFAULT_MENU = (
    MenuItem("arm motors", "arm"),
    MenuItem("start mav", "mav_start"),
    MenuItem("hold depth", "depth_hold"),
    MenuItem("stop mav", "mav_stop"),
    MenuItem("disarm", "disarm"),
)


@dataclass(frozen=True)
class MenuEvent:
    kind: str      # "action" or "cancel"
    action: str
    label: str


class MenuFsm:
    """Deterministic token-driven menu.

    The transition table is total: every (state, token) pair either moves
    the machine or is an explicit no-op, so an unexpected token can never
    fault the interaction loop. Actions fire on the CONFIRM -> EXECUTING
    edge; START_STOP while executing cancels and returns to IDLE.
    """

    def __init__(self, items=DEFAULT_MENU):
        if not items:
            raise ValueError("menu needs at least one item")
        self.items = tuple(items)
        self.state = MenuState.IDLE
        self.cursor = 0

    def handle(self, token: Token) -> MenuEvent | None:
        s = self.state
        if s == MenuState.IDLE:
            if token == Token.SELECT:
                self.state = MenuState.BROWSING
            return None
        if s == MenuState.BROWSING:
            if token == Token.NEXT:
                self.cursor = (self.cursor + 1) % len(self.items)
            elif token == Token.PREV:
                self.cursor = (self.cursor - 1) % len(self.items)
            elif token == Token.SELECT:
                self.state = MenuState.CONFIRM
            elif token == Token.BACK:
                self.state = MenuState.IDLE
            return None
        if s == MenuState.CONFIRM:
            if token == Token.SELECT:
                self.state = MenuState.EXECUTING
                item = self.items[self.cursor]
                return MenuEvent("action", item.action, item.label)
            if token == Token.BACK:
                self.state = MenuState.BROWSING
            return None
        # EXECUTING
        if token == Token.START_STOP:
            self.state = MenuState.IDLE
            item = self.items[self.cursor]
            return MenuEvent("cancel", item.action, item.label)
        return None

    def display_lines(self) -> list[str]:
        """Side-screen rendering: state header plus the item list."""
        lines = [f"[{self.state.value}]"]
        for i, item in enumerate(self.items):
            marker = ">" if i == self.cursor and self.state != MenuState.IDLE else " "
            lines.append(f"{marker}{item.label}")
        if self.state == MenuState.CONFIRM:
            lines.append(f"select to run {self.items[self.cursor].label}")
        return lines


# ---------------------------------------------------------------------------
# target following

@dataclass(frozen=True)
class FollowParams:
    standoff: float = 0.5        # m, desired hold range
    deadband: float = 0.05       # m, zero-force band around the standoff
    max_speed: float = 0.5       # m/s, caps the surge command via drag balance
    range_gain: float = 30.0     # N per m of range error
    closing_gain: float = 40.0   # N per m/s of closing rate
    yaw_gain: float = 6.0        # N m per rad of bearing
    pitch_gain: float = 4.0
    yaw_damping: float = 4.5     # N m per rad/s of bearing rate
    pitch_damping: float = 3.0
    pitch_limit: float = 0.8     # N m, stays under the hydrostatic righting max
    lost_timeout: float = 3.0    # s of no detections before stopping
    search_torque: float = 1.5   # N m, yaw sweep while reacquiring


class MavFollower:
    """Standoff keeper: drive the detection range to the standoff distance.

    Surge is proportional to range error with damping on the closing rate,
    clamped to the force that drag would balance at max_speed; bearing
    errors steer yaw and pitch. Losing the target holds a yaw sweep toward
    the last known side until the timeout, then everything stops.
    """

    def __init__(self, params: FollowParams, config: VehicleConfig):
        self.params = params
        L = config.body.linear_drag[0]
        Q = config.body.quadratic_drag[0]
        v = params.max_speed
        self.force_cap = L * v + Q * v * v
        self.reset()

    def reset(self) -> None:
        self.time_since_seen = math.inf
        self.last_range: float | None = None
        self.last_range_age = 0.0
        self.last_azimuth_sign = 1.0
        self.last_bearing: tuple[float, float] | None = None
        self.closing = 0.0

    def update(self, detection: Detection | None, dt: float) -> tuple[float, ...]:
        """Advance one control tick; returns a wrench request (6 entries)."""
        p = self.params
        if detection is None:
            self.time_since_seen += dt
            self.last_range_age += dt
            self.last_bearing = None
            if self.time_since_seen >= p.lost_timeout:
                return (0.0,) * 6
            return (0.0, 0.0, 0.0, 0.0, 0.0, self.last_azimuth_sign * p.search_torque)

        az, el = detection.azimuth, detection.elevation
        az_rate = el_rate = 0.0
        if self.last_bearing is not None and self.last_range_age > 0.0:
            az_rate = (az - self.last_bearing[0]) / self.last_range_age
            el_rate = (el - self.last_bearing[1]) / self.last_range_age
        if self.last_range is not None and self.last_range_age > 0.0:
            self.closing = (self.last_range - detection.range) / self.last_range_age
        self.last_range = detection.range
        self.last_bearing = (az, el)
        self.last_range_age = dt
        self.time_since_seen = 0.0
        if abs(az) > 1e-6:
            self.last_azimuth_sign = math.copysign(1.0, az)

        err = detection.range - p.standoff
        if abs(err) < p.deadband:
            surge = 0.0
        else:
            surge = p.range_gain * err - p.closing_gain * self.closing
            surge = max(-self.force_cap, min(self.force_cap, surge))
            # turn before driving: off-boresight targets get reduced surge
            surge *= max(0.0, math.cos(az)) * max(0.0, math.cos(el))
        yaw = p.yaw_gain * az + p.yaw_damping * az_rate
        # positive pitch is nose up, matching positive elevation; the cap
        # keeps the command below the hydrostatic righting torque so steep
        # bearings cannot flip the vehicle
        pitch = p.pitch_gain * el + p.pitch_damping * el_rate
        pitch = max(-p.pitch_limit, min(p.pitch_limit, pitch))
        return (surge, 0.0, 0.0, 0.0, pitch, yaw)

    @property
    def tracking(self) -> bool:
        return self.time_since_seen == 0.0

    @property
    def lost(self) -> bool:
        return self.time_since_seen >= self.params.lost_timeout


# ---------------------------------------------------------------------------
# light rings

OUTER_LEDS = 24
INNER_LEDS = 16

# detection classes mapped to display colors
CLASS_COLORS = {
    "cup": (255, 0, 0),
    "mug": (0, 255, 0),
    "bottle": (0, 0, 255),
    "starfish": (0, 255, 255),
    "can": (255, 255, 0),
    "bag": (128, 0, 128),
    "glass": (255, 255, 255),
}

OFF = (0, 0, 0)


def detection_color(class_name: str) -> tuple[int, int, int]:
    return CLASS_COLORS.get(class_name, OFF)


def _ring(n: int, color) -> list[list[int]]:
    return [list(color)] * n


def render_hreye(pattern: str, color, t: float) -> dict:
    """Frame for one eye: 24 outer and 16 inner RGB triples.

    Time-varying patterns quantize t to 10 Hz so identical frames come out
    for any t inside the same tick, keeping replays pixel-identical.
    Unrecognized patterns render dark rather than erroring: the display is
    the last place a bad command should fault.
    """
    tq = math.floor(t * 10.0) / 10.0
    if pattern == "solid":
        outer, inner = _ring(OUTER_LEDS, color), _ring(INNER_LEDS, color)
    elif pattern == "blink":
        on = int(tq * 2.0) % 2 == 0
        c = color if on else OFF
        outer, inner = _ring(OUTER_LEDS, c), _ring(INNER_LEDS, c)
    elif pattern == "spinner":
        outer = _ring(OUTER_LEDS, OFF)
        inner = _ring(INNER_LEDS, OFF)
        oi = int(tq * OUTER_LEDS) % OUTER_LEDS  # one revolution per second
        ii = int(tq * INNER_LEDS) % INNER_LEDS
        outer[oi] = list(color)
        inner[ii] = list(color)
    else:
        outer, inner = _ring(OUTER_LEDS, OFF), _ring(INNER_LEDS, OFF)
    return {"outer": outer, "inner": inner}


# ---------------------------------------------------------------------------
# mission supervision

ACTIONS = ("arm", "disarm", "mav_start", "mav_stop", "depth_hold")


class MissionSupervisor:
    """Arms gate and behavior mode, driven by menu actions.

    Disarm is the hard gate: while disarmed every thruster command is
    zeroed downstream no matter what behaviors request. Canceling an
    executing action stops the active behavior but deliberately leaves the
    vehicle armed; only an explicit disarm drops the gate.
    """

    def __init__(self):
        self.armed = False
        self.mode = "idle"           # idle | mav | depth_hold
        self.hold_depth: float | None = None

    def apply(self, action: str, current_depth: float | None = None) -> list[str]:
        """Run one action; returns announcement strings for the siren."""
        if action == "arm":
            self.armed = True
            return ["armed"]
        if action == "disarm":
            self.armed = False
            self.mode = "idle"
            self.hold_depth = None
            return ["disarmed"]
        if action == "mav_start":
            self.mode = "mav"
            self.hold_depth = current_depth
            return ["mav started"]
        if action == "mav_stop":
            if self.mode == "mav":
                self.mode = "idle"
            return ["mav stopped"]
        if action == "depth_hold":
            self.mode = "depth_hold"
            self.hold_depth = current_depth
            return ["holding depth"]
        return [f"unknown action {action}"]

    def cancel(self) -> list[str]:
        if self.mode != "idle":
            self.mode = "idle"
            return ["behavior canceled"]
        return []

    def status_line(self) -> str:
        if not self.armed:
            return "State IDLE"
        if self.mode == "idle":
            return "State ARMED"
        return f"State {self.mode.upper()}"
