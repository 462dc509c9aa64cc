"""Vehicle and environment description: types, validation, patching.

Everything physical about the vehicle lives in one JSON document (see
docs/schema/vehicle.schema.json). Configs are immutable values; runtime
reconfiguration produces a new validated config via apply_patch. All
lengths are meters, masses kg, angles rad, field names snake_case. Body
frame: x surge (forward), y sway (starboard), z heave (down); world frame
NED.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

from .quat import Quat, Vec3, qfrom_euler, qnorm, vnorm

FRESHWATER_DENSITY = 1000.0
SEAWATER_DENSITY = 1025.0
GRAVITY = 9.81


class ConfigError(ValueError):
    """Validation failure; names the first violated invariant and its path."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class ConfigParseError(ValueError):
    """The document is not well-formed JSON."""


@dataclass(frozen=True)
class ThrusterSpec:
    id: str
    position: Vec3            # body frame, m, from the geometric reference point
    direction: Vec3           # unit vector, positive-thrust direction
    max_thrust_fwd: float     # N
    max_thrust_rev: float     # N
    pwm_neutral: float        # microseconds
    pwm_min: float
    pwm_max: float


@dataclass(frozen=True)
class BallastItem:
    mass: float
    position: Vec3


@dataclass(frozen=True)
class RigidBodyParams:
    dry_mass: float
    hull_cog: Vec3            # dry hull's own center of gravity
    hull_size: Vec3           # bounding box (x, y, z extents)
    ballast: tuple[BallastItem, ...]
    cob: Vec3
    buoyant_volume: float     # m^3
    inertia: tuple[Vec3, Vec3, Vec3]      # 3x3, kg m^2
    added_mass: tuple[float, ...]         # 6 diagonal entries
    linear_drag: tuple[float, ...]        # 6 diagonal entries
    quadratic_drag: tuple[float, ...]     # 6 diagonal entries
    total_mass: float = field(default=0.0)  # derived
    cog: Vec3 = field(default=(0.0, 0.0, 0.0))  # derived


@dataclass(frozen=True)
class BatteryConfig:
    capacity_wh: float
    nominal_voltage: float
    idle_current: float
    compute_current: float        # extra draw of the main computer under load
    thruster_max_current: float   # per-thruster draw at full thrust


@dataclass(frozen=True)
class MountTransform:
    translation: Vec3
    rotation: Quat    # body <- sensor


IDENTITY_MOUNT = MountTransform((0.0, 0.0, 0.0), (1.0, 0.0, 0.0, 0.0))


@dataclass(frozen=True)
class AhrsConfig:
    actual_mount: MountTransform    # used to generate readings
    believed_mount: MountTransform  # used by consumers
    rate_hz: float
    orientation_noise: float        # small-angle sigma, rad per axis
    rate_noise: float               # rad/s sigma per axis
    rate_bias: Vec3
    accel_noise: float              # m/s^2 sigma per axis


@dataclass(frozen=True)
class DepthSensorConfig:
    rate_hz: float
    noise_sigma: float


@dataclass(frozen=True)
class BatterySensorConfig:
    rate_hz: float


@dataclass(frozen=True)
class CameraConfig:
    mount: MountTransform
    rate_hz: float
    fov: float               # full cone angle, rad
    max_range: float
    range_noise_sigma: float
    dropout: float           # Bernoulli miss probability


@dataclass(frozen=True)
class SensorSuite:
    ahrs: AhrsConfig
    depth: DepthSensorConfig
    battery: BatterySensorConfig
    camera: CameraConfig


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float
    kd: float
    integrator_limit: float
    output_limit: float


@dataclass(frozen=True)
class ControlConfig:
    axis_scale: tuple[float, ...]   # pilot axis -> max wrench, 6 entries
    gains: dict[str, PidGains]      # depth, roll, pitch, yaw_rate
    pwm_deadband: float             # N mapped to neutral


@dataclass(frozen=True)
class WaveConfig:
    amplitude: float
    wavelength: float
    period: float
    heading: float


@dataclass(frozen=True)
class EnvironmentConfig:
    water_density: float = FRESHWATER_DENSITY
    gravity: float = GRAVITY
    current: Vec3 = (0.0, 0.0, 0.0)   # world frame, m/s
    wave: WaveConfig | None = None
    surface_z: float = 0.0            # world z of the still-water surface


@dataclass(frozen=True)
class VehicleConfig:
    name: str
    body: RigidBodyParams
    thrusters: tuple[ThrusterSpec, ...]
    battery: BatteryConfig
    sensors: SensorSuite
    control: ControlConfig


def neutral_mass(volume: float, density: float) -> float:
    """Mass at which a fully submerged body of this volume is neutrally buoyant."""
    if volume <= 0:
        raise ValueError("volume must be > 0")
    if density <= 0:
        raise ValueError("density must be > 0")
    return volume * density


def derive_cog(body: RigidBodyParams) -> Vec3:
    """Mass-weighted mean of the dry hull CoG and all ballast points."""
    m = body.dry_mass
    sx = m * body.hull_cog[0]
    sy = m * body.hull_cog[1]
    sz = m * body.hull_cog[2]
    for item in body.ballast:
        m += item.mass
        sx += item.mass * item.position[0]
        sy += item.mass * item.position[1]
        sz += item.mass * item.position[2]
    if m <= 0:
        raise ValueError("total mass must be > 0")
    return (sx / m, sy / m, sz / m)


# ---------------------------------------------------------------------------
# document -> config

def _num(doc, key, path, default=None):
    if key not in doc:
        if default is not None:
            return float(default)
        raise ConfigError(f"{path}.{key}", "missing required field")
    v = doc[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{path}.{key}", "expected a number")
    return float(v)


def _vec3(doc, key, path, default=None):
    if key not in doc:
        if default is not None:
            return tuple(float(x) for x in default)
        raise ConfigError(f"{path}.{key}", "missing required field")
    v = doc[key]
    if not isinstance(v, list) or len(v) != 3 or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in v
    ):
        raise ConfigError(f"{path}.{key}", "expected a 3-element number array")
    return (float(v[0]), float(v[1]), float(v[2]))


def _vec6(doc, key, path, default=None):
    if key not in doc:
        if default is not None:
            return tuple(float(x) for x in default)
        raise ConfigError(f"{path}.{key}", "missing required field")
    v = doc[key]
    if not isinstance(v, list) or len(v) != 6 or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in v
    ):
        raise ConfigError(f"{path}.{key}", "expected a 6-element number array")
    return tuple(float(x) for x in v)


def _mount(doc, key, path) -> MountTransform:
    sub = doc.get(key)
    if sub is None:
        return IDENTITY_MOUNT
    if not isinstance(sub, dict):
        raise ConfigError(f"{path}.{key}", "expected an object")
    mpath = f"{path}.{key}"
    translation = _vec3(sub, "translation", mpath, default=(0.0, 0.0, 0.0))
    if "rotation_rpy" in sub:
        rpy = _vec3(sub, "rotation_rpy", mpath)
        rotation = qfrom_euler(*rpy)
    elif "rotation" in sub:
        q = sub["rotation"]
        if not isinstance(q, list) or len(q) != 4:
            raise ConfigError(f"{mpath}.rotation", "expected a 4-element quaternion [w, x, y, z]")
        rotation = tuple(float(x) for x in q)
        if abs(qnorm(rotation) - 1.0) > 1e-9:
            raise ConfigError(f"{mpath}.rotation", "quaternion must have unit norm")
    else:
        rotation = (1.0, 0.0, 0.0, 0.0)
    return MountTransform(translation, rotation)


def _thruster(doc, path) -> ThrusterSpec:
    if not isinstance(doc, dict):
        raise ConfigError(path, "expected an object")
    tid = doc.get("id")
    if not isinstance(tid, str) or not tid:
        raise ConfigError(f"{path}.id", "expected a nonempty string")
    direction = _vec3(doc, "direction", path)
    if abs(vnorm(direction) - 1.0) > 1e-9:
        raise ConfigError(f"{path}.direction", "must be a unit vector")
    spec = ThrusterSpec(
        id=tid,
        position=_vec3(doc, "position", path),
        direction=direction,
        max_thrust_fwd=_num(doc, "max_thrust_fwd", path),
        max_thrust_rev=_num(doc, "max_thrust_rev", path),
        pwm_neutral=_num(doc, "pwm_neutral", path, default=1500.0),
        pwm_min=_num(doc, "pwm_min", path, default=1100.0),
        pwm_max=_num(doc, "pwm_max", path, default=1900.0),
    )
    if spec.max_thrust_fwd <= 0:
        raise ConfigError(f"{path}.max_thrust_fwd", "must be > 0")
    if spec.max_thrust_rev <= 0:
        raise ConfigError(f"{path}.max_thrust_rev", "must be > 0")
    if not spec.pwm_min < spec.pwm_neutral < spec.pwm_max:
        raise ConfigError(f"{path}.pwm_neutral", "requires pwm_min < pwm_neutral < pwm_max")
    return spec


def _cuboid_inertia(mass: float, size: Vec3) -> tuple[Vec3, Vec3, Vec3]:
    lx, ly, lz = size
    k = mass / 12.0
    return (
        (k * (ly * ly + lz * lz), 0.0, 0.0),
        (0.0, k * (lx * lx + lz * lz), 0.0),
        (0.0, 0.0, k * (lx * lx + ly * ly)),
    )


def _body(doc, path) -> RigidBodyParams:
    if not isinstance(doc, dict):
        raise ConfigError(path, "expected an object")
    dry_mass = _num(doc, "dry_mass", path)
    if dry_mass <= 0:
        raise ConfigError(f"{path}.dry_mass", "must be > 0")
    ballast_doc = doc.get("ballast", [])
    if not isinstance(ballast_doc, list):
        raise ConfigError(f"{path}.ballast", "expected an array")
    ballast = []
    for i, item in enumerate(ballast_doc):
        ipath = f"{path}.ballast[{i}]"
        if not isinstance(item, dict):
            raise ConfigError(ipath, "expected an object")
        mass = _num(item, "mass", ipath)
        if mass <= 0:
            raise ConfigError(f"{ipath}.mass", "must be > 0")
        ballast.append(BallastItem(mass, _vec3(item, "position", ipath)))
    hull_size = _vec3(doc, "hull_size", path, default=(0.80, 0.60, 0.17))
    if min(hull_size) <= 0:
        raise ConfigError(f"{path}.hull_size", "extents must be > 0")
    buoyant_volume = _num(doc, "buoyant_volume", path)
    if buoyant_volume <= 0:
        raise ConfigError(f"{path}.buoyant_volume", "must be > 0")
    total_mass = dry_mass + sum(b.mass for b in ballast)

    if "inertia" in doc:
        rows = doc["inertia"]
        if (not isinstance(rows, list) or len(rows) != 3
                or any(not isinstance(r, list) or len(r) != 3 for r in rows)):
            raise ConfigError(f"{path}.inertia", "expected a 3x3 number matrix")
        inertia = tuple(tuple(float(x) for x in r) for r in rows)
        for i in range(3):
            for j in range(3):
                if abs(inertia[i][j] - inertia[j][i]) > 1e-9:
                    raise ConfigError(f"{path}.inertia", "must be symmetric")
        # positive definite check via leading principal minors
        a, b, c = inertia[0]
        _, d, e = inertia[1]
        f = inertia[2][2]
        det2 = a * d - b * b
        det3 = a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c)
        if a <= 0 or det2 <= 0 or det3 <= 0:
            raise ConfigError(f"{path}.inertia", "must be positive definite")
    else:
        inertia = _cuboid_inertia(total_mass, hull_size)

    if "added_mass" in doc:
        added_mass = _vec6(doc, "added_mass", path)
    else:
        added_mass = (
            0.2 * total_mass, 0.2 * total_mass, 0.2 * total_mass,
            0.1 * inertia[0][0], 0.1 * inertia[1][1], 0.1 * inertia[2][2],
        )
    if min(added_mass) < 0:
        raise ConfigError(f"{path}.added_mass", "entries must be >= 0")

    linear_drag = _vec6(doc, "linear_drag", path)
    quadratic_drag = _vec6(doc, "quadratic_drag", path)
    if min(linear_drag) < 0:
        raise ConfigError(f"{path}.linear_drag", "coefficients must be >= 0")
    if min(quadratic_drag) < 0:
        raise ConfigError(f"{path}.quadratic_drag", "coefficients must be >= 0")

    body = RigidBodyParams(
        dry_mass=dry_mass,
        hull_cog=_vec3(doc, "hull_cog", path, default=(0.0, 0.0, 0.0)),
        hull_size=hull_size,
        ballast=tuple(ballast),
        cob=_vec3(doc, "cob", path, default=(0.0, 0.0, 0.0)),
        buoyant_volume=buoyant_volume,
        inertia=inertia,
        added_mass=added_mass,
        linear_drag=linear_drag,
        quadratic_drag=quadratic_drag,
        total_mass=total_mass,
    )
    return replace(body, cog=derive_cog(body))


_GAIN_LOOPS = ("depth", "roll", "pitch", "yaw_rate")


def _control(doc, path) -> ControlConfig:
    if not isinstance(doc, dict):
        raise ConfigError(path, "expected an object")
    axis_scale = _vec6(doc, "axis_scale", path, default=(40.0, 40.0, 40.0, 4.0, 4.0, 4.0))
    if min(axis_scale) < 0:
        raise ConfigError(f"{path}.axis_scale", "entries must be >= 0")
    gains_doc = doc.get("gains", {})
    if not isinstance(gains_doc, dict):
        raise ConfigError(f"{path}.gains", "expected an object")
    for key in gains_doc:
        if key not in _GAIN_LOOPS:
            raise ConfigError(f"{path}.gains.{key}", "unknown control loop")
    gains = {}
    for loop in _GAIN_LOOPS:
        gpath = f"{path}.gains.{loop}"
        g = gains_doc.get(loop, {})
        if not isinstance(g, dict):
            raise ConfigError(gpath, "expected an object")
        pid = PidGains(
            kp=_num(g, "kp", gpath, default=0.0),
            ki=_num(g, "ki", gpath, default=0.0),
            kd=_num(g, "kd", gpath, default=0.0),
            integrator_limit=_num(g, "integrator_limit", gpath, default=1.0),
            output_limit=_num(g, "output_limit", gpath, default=1.0),
        )
        if pid.kp < 0 or pid.ki < 0 or pid.kd < 0:
            raise ConfigError(gpath, "gains must be >= 0")
        if pid.integrator_limit <= 0 or pid.output_limit <= 0:
            raise ConfigError(gpath, "limits must be > 0")
        gains[loop] = pid
    return ControlConfig(
        axis_scale=axis_scale,
        gains=gains,
        pwm_deadband=_num(doc, "pwm_deadband", path, default=0.2),
    )


def _sensors(doc, path) -> SensorSuite:
    if not isinstance(doc, dict):
        raise ConfigError(path, "expected an object")
    ahrs_doc = doc.get("ahrs", {})
    depth_doc = doc.get("depth", {})
    battery_doc = doc.get("battery", {})
    camera_doc = doc.get("camera", {})
    for key, sub in (("ahrs", ahrs_doc), ("depth", depth_doc),
                     ("battery", battery_doc), ("camera", camera_doc)):
        if not isinstance(sub, dict):
            raise ConfigError(f"{path}.{key}", "expected an object")
    apath = f"{path}.ahrs"
    ahrs = AhrsConfig(
        actual_mount=_mount(ahrs_doc, "actual_mount", apath),
        believed_mount=_mount(ahrs_doc, "believed_mount", apath),
        rate_hz=_num(ahrs_doc, "rate_hz", apath, default=100.0),
        orientation_noise=_num(ahrs_doc, "orientation_noise", apath, default=0.0),
        rate_noise=_num(ahrs_doc, "rate_noise", apath, default=0.0),
        rate_bias=_vec3(ahrs_doc, "rate_bias", apath, default=(0.0, 0.0, 0.0)),
        accel_noise=_num(ahrs_doc, "accel_noise", apath, default=0.0),
    )
    depth = DepthSensorConfig(
        rate_hz=_num(depth_doc, "rate_hz", f"{path}.depth", default=20.0),
        noise_sigma=_num(depth_doc, "noise_sigma", f"{path}.depth", default=0.0),
    )
    battery = BatterySensorConfig(
        rate_hz=_num(battery_doc, "rate_hz", f"{path}.battery", default=1.0),
    )
    cpath = f"{path}.camera"
    camera = CameraConfig(
        mount=_mount(camera_doc, "mount", cpath),
        rate_hz=_num(camera_doc, "rate_hz", cpath, default=10.0),
        fov=_num(camera_doc, "fov", cpath, default=math.radians(90.0)),
        max_range=_num(camera_doc, "max_range", cpath, default=20.0),
        range_noise_sigma=_num(camera_doc, "range_noise_sigma", cpath, default=0.0),
        dropout=_num(camera_doc, "dropout", cpath, default=0.0),
    )
    for name, cfg in (("ahrs", ahrs), ("depth", depth), ("battery", battery), ("camera", camera)):
        if cfg.rate_hz <= 0:
            raise ConfigError(f"{path}.{name}.rate_hz", "must be > 0")
    if not 0.0 <= camera.dropout <= 1.0:
        raise ConfigError(f"{cpath}.dropout", "must be in [0, 1]")
    if camera.fov <= 0 or camera.max_range <= 0:
        raise ConfigError(cpath, "fov and max_range must be > 0")
    return SensorSuite(ahrs=ahrs, depth=depth, battery=battery, camera=camera)


def config_from_document(doc: dict) -> VehicleConfig:
    """Validate a parsed JSON document and derive cog/total mass."""
    if not isinstance(doc, dict):
        raise ConfigError("$", "expected a JSON object")
    name = doc.get("name", "unnamed")
    if not isinstance(name, str):
        raise ConfigError("$.name", "expected a string")
    if "body" not in doc:
        raise ConfigError("$.body", "missing required field")
    body = _body(doc["body"], "body")
    thr_doc = doc.get("thrusters")
    if not isinstance(thr_doc, list) or len(thr_doc) < 1:
        raise ConfigError("thrusters", "at least one thruster is required")
    thrusters = []
    seen = set()
    for i, t in enumerate(thr_doc):
        spec = _thruster(t, f"thrusters[{i}]")
        if spec.id in seen:
            raise ConfigError(f"thrusters[{i}].id", f"duplicate thruster id {spec.id!r}")
        seen.add(spec.id)
        thrusters.append(spec)
    bat_doc = doc.get("battery", {})
    if not isinstance(bat_doc, dict):
        raise ConfigError("battery", "expected an object")
    battery = BatteryConfig(
        capacity_wh=_num(bat_doc, "capacity_wh", "battery", default=385.0),
        nominal_voltage=_num(bat_doc, "nominal_voltage", "battery", default=15.0),
        idle_current=_num(bat_doc, "idle_current", "battery", default=1.9),
        compute_current=_num(bat_doc, "compute_current", "battery", default=1.7),
        thruster_max_current=_num(bat_doc, "thruster_max_current", "battery", default=22.28),
    )
    if battery.capacity_wh <= 0 or battery.nominal_voltage <= 0:
        raise ConfigError("battery", "capacity_wh and nominal_voltage must be > 0")
    if battery.idle_current < 0 or battery.compute_current < 0 or battery.thruster_max_current < 0:
        raise ConfigError("battery", "currents must be >= 0")
    sensors = _sensors(doc.get("sensors", {}), "sensors")
    control = _control(doc.get("control", {}), "control")
    return VehicleConfig(
        name=name,
        body=body,
        thrusters=tuple(thrusters),
        battery=battery,
        sensors=sensors,
        control=control,
    )


def load_config(text: str) -> VehicleConfig:
    """Parse and validate a vehicle JSON document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"malformed JSON: {exc}") from exc
    return config_from_document(doc)


def load_reference_config() -> VehicleConfig:
    """The reference MeCO-class vehicle shipped with the package."""
    return load_config(reference_config_text())


def reference_config_text() -> str:
    from importlib.resources import files

    return files("meco_sim.data").joinpath("meco.json").read_text()


# ---------------------------------------------------------------------------
# config -> document

def _mount_doc(m: MountTransform) -> dict:
    return {"translation": list(m.translation), "rotation": list(m.rotation)}


def config_to_document(config: VehicleConfig) -> dict:
    """Canonical document form: defaults materialized, derived fields omitted."""
    body = config.body
    return {
        "name": config.name,
        "body": {
            "dry_mass": body.dry_mass,
            "hull_cog": list(body.hull_cog),
            "hull_size": list(body.hull_size),
            "ballast": [{"mass": b.mass, "position": list(b.position)} for b in body.ballast],
            "cob": list(body.cob),
            "buoyant_volume": body.buoyant_volume,
            "inertia": [list(r) for r in body.inertia],
            "added_mass": list(body.added_mass),
            "linear_drag": list(body.linear_drag),
            "quadratic_drag": list(body.quadratic_drag),
        },
        "thrusters": [
            {
                "id": t.id,
                "position": list(t.position),
                "direction": list(t.direction),
                "max_thrust_fwd": t.max_thrust_fwd,
                "max_thrust_rev": t.max_thrust_rev,
                "pwm_neutral": t.pwm_neutral,
                "pwm_min": t.pwm_min,
                "pwm_max": t.pwm_max,
            }
            for t in config.thrusters
        ],
        "battery": {
            "capacity_wh": config.battery.capacity_wh,
            "nominal_voltage": config.battery.nominal_voltage,
            "idle_current": config.battery.idle_current,
            "compute_current": config.battery.compute_current,
            "thruster_max_current": config.battery.thruster_max_current,
        },
        "sensors": {
            "ahrs": {
                "actual_mount": _mount_doc(config.sensors.ahrs.actual_mount),
                "believed_mount": _mount_doc(config.sensors.ahrs.believed_mount),
                "rate_hz": config.sensors.ahrs.rate_hz,
                "orientation_noise": config.sensors.ahrs.orientation_noise,
                "rate_noise": config.sensors.ahrs.rate_noise,
                "rate_bias": list(config.sensors.ahrs.rate_bias),
                "accel_noise": config.sensors.ahrs.accel_noise,
            },
            "depth": {
                "rate_hz": config.sensors.depth.rate_hz,
                "noise_sigma": config.sensors.depth.noise_sigma,
            },
            "battery": {"rate_hz": config.sensors.battery.rate_hz},
            "camera": {
                "mount": _mount_doc(config.sensors.camera.mount),
                "rate_hz": config.sensors.camera.rate_hz,
                "fov": config.sensors.camera.fov,
                "max_range": config.sensors.camera.max_range,
                "range_noise_sigma": config.sensors.camera.range_noise_sigma,
                "dropout": config.sensors.camera.dropout,
            },
        },
        "control": {
            "axis_scale": list(config.control.axis_scale),
            "gains": {
                loop: {
                    "kp": g.kp,
                    "ki": g.ki,
                    "kd": g.kd,
                    "integrator_limit": g.integrator_limit,
                    "output_limit": g.output_limit,
                }
                for loop, g in sorted(config.control.gains.items())
            },
            "pwm_deadband": config.control.pwm_deadband,
        },
    }


def serialize_config(config: VehicleConfig) -> str:
    return json.dumps(config_to_document(config), sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# patching

def _merge(target: dict, patch: dict, path: str) -> None:
    for key, value in patch.items():
        here = f"{path}.{key}" if path else key
        if key not in target:
            raise ConfigError(here, "unknown path")
        if isinstance(value, dict) and isinstance(target[key], dict):
            _merge(target[key], value, here)
        else:
            target[key] = value


def _patch_thrusters(current: list, patch, path: str) -> list:
    if isinstance(patch, list):
        return patch
    if not isinstance(patch, dict):
        raise ConfigError(path, "expected an array or an add/remove/update object")
    by_id = {t["id"]: t for t in current}
    for op in patch:
        if op not in ("add", "remove", "update"):
            raise ConfigError(f"{path}.{op}", "unknown path")
    for tid in patch.get("remove", []):
        if tid not in by_id:
            raise ConfigError(f"{path}.remove", f"no thruster with id {tid!r}")
        del by_id[tid]
    for spec in patch.get("add", []):
        tid = spec.get("id") if isinstance(spec, dict) else None
        if tid in by_id:
            raise ConfigError(f"{path}.add", f"thruster id {tid!r} already present")
        by_id[tid] = spec
    for tid, partial in patch.get("update", {}).items():
        if tid not in by_id:
            raise ConfigError(f"{path}.update", f"no thruster with id {tid!r}")
        _merge(by_id[tid], partial, f"{path}.update.{tid}")
    return list(by_id.values())


def apply_patch(config: VehicleConfig, patch: dict) -> VehicleConfig:
    """Apply a partial document and revalidate; the original is untouched.

    Dicts merge recursively; arrays replace wholesale, except "thrusters"
    which also accepts {"add": [...], "remove": [ids], "update": {id: {...}}}.
    """
    if not isinstance(patch, dict):
        raise ConfigError("$", "patch must be an object")
    doc = config_to_document(config)
    patch = dict(patch)
    if "thrusters" in patch:
        doc["thrusters"] = _patch_thrusters(doc["thrusters"], patch.pop("thrusters"), "thrusters")
    _merge(doc, patch, "")
    return config_from_document(doc)


# ---------------------------------------------------------------------------
# environment

def environment_from_document(doc: dict | None) -> EnvironmentConfig:
    if doc is None:
        return EnvironmentConfig()
    if not isinstance(doc, dict):
        raise ConfigError("environment", "expected an object")
    path = "environment"
    wave = None
    if doc.get("wave") is not None:
        wdoc = doc["wave"]
        if not isinstance(wdoc, dict):
            raise ConfigError(f"{path}.wave", "expected an object")
        wave = WaveConfig(
            amplitude=_num(wdoc, "amplitude", f"{path}.wave"),
            wavelength=_num(wdoc, "wavelength", f"{path}.wave"),
            period=_num(wdoc, "period", f"{path}.wave"),
            heading=_num(wdoc, "heading", f"{path}.wave", default=0.0),
        )
        if wave.amplitude < 0:
            raise ConfigError(f"{path}.wave.amplitude", "must be >= 0")
        if wave.wavelength <= 0 or wave.period <= 0:
            raise ConfigError(f"{path}.wave", "wavelength and period must be > 0")
    env = EnvironmentConfig(
        water_density=_num(doc, "water_density", path, default=FRESHWATER_DENSITY),
        gravity=_num(doc, "gravity", path, default=GRAVITY),
        current=_vec3(doc, "current", path, default=(0.0, 0.0, 0.0)),
        wave=wave,
        surface_z=_num(doc, "surface_z", path, default=0.0),
    )
    if env.water_density <= 0:
        raise ConfigError(f"{path}.water_density", "must be > 0")
    return env


def environment_to_document(env: EnvironmentConfig) -> dict:
    doc = {
        "water_density": env.water_density,
        "gravity": env.gravity,
        "current": list(env.current),
        "wave": None,
        "surface_z": env.surface_z,
    }
    if env.wave is not None:
        doc["wave"] = {
            "amplitude": env.wave.amplitude,
            "wavelength": env.wave.wavelength,
            "period": env.wave.period,
            "heading": env.wave.heading,
        }
    return doc


def apply_environment_patch(env: EnvironmentConfig, patch: dict) -> EnvironmentConfig:
    if not isinstance(patch, dict):
        raise ConfigError("environment", "patch must be an object")
    doc = environment_to_document(env)
    for key, value in patch.items():
        if key not in doc:
            raise ConfigError(f"environment.{key}", "unknown path")
        if key == "wave" and isinstance(value, dict) and isinstance(doc["wave"], dict):
            _merge(doc["wave"], value, "environment.wave")
        else:
            doc[key] = value
    return environment_from_document(doc)
