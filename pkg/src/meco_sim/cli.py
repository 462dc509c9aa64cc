"""Command-line entry points.

Heavy lifting stays in runner/service; this module parses arguments,
shapes exit codes, and for token/patch acts as a thin HTTP client against
a running serve instance.

Exit codes: 0 success, 2 validation problem (scenario, config, arguments),
3 runtime failure (the physics blew up or the loop died).
"""

from __future__ import annotations

import json
import math
import os
import sys
import threading
import urllib.error
import urllib.request

import click

from .bus.broker import DEFAULT_PORT, TcpBroker
from .runner import SimulationBlowUp, replay_log, run_scenario
from .scenario import Scenario, ScenarioError, load_scenario, scenario_from_document
from .vehicle import ConfigError

EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _load_scenario_or_exit(path: str, seed: int | None, duration: float | None) -> Scenario:
    try:
        scenario = load_scenario(path)
    except FileNotFoundError:
        click.echo(f"error: no scenario file at {path}", err=True)
        sys.exit(EXIT_VALIDATION)
    except (ScenarioError, ConfigError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    if seed is not None:
        scenario.seed = seed
    if duration is not None:
        scenario.duration = duration
    return scenario


def _default_log_path(scenario: Scenario) -> str:
    log_dir = os.environ.get("MECO_LOG_DIR", ".")
    os.makedirs(log_dir, exist_ok=True)
    return os.path.join(log_dir, f"{scenario.name}_seed{scenario.seed}.jsonl")


@click.group()
def main():
    """Simulation and control stack for a small hover-capable AUV."""


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--duration", type=float, default=None, help="Override duration, seconds.")
@click.option("--log", "log_path", type=click.Path(), default=None,
              help="Log file (default: MECO_LOG_DIR or cwd).")
@click.option("--fast", is_flag=True, help="Run as fast as possible instead of real time.")
def run(scenario_path, seed, duration, log_path, fast):
    """Run a scenario to completion and write a JSON-lines log."""
    scenario = _load_scenario_or_exit(scenario_path, seed, duration)
    if log_path is None:
        log_path = _default_log_path(scenario)
    try:
        summary = run_scenario(scenario, log_path=log_path, fast=fast)
    except SimulationBlowUp as exc:
        click.echo(f"runtime failure: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    click.echo(json.dumps(summary, indent=2))


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path())
def validate(scenario_path):
    """Check a scenario file; exit 0 when it is runnable."""
    try:
        scenario = load_scenario(scenario_path)
    except FileNotFoundError:
        click.echo(f"error: no scenario file at {scenario_path}", err=True)
        sys.exit(EXIT_VALIDATION)
    except (ScenarioError, ConfigError) as exc:
        click.echo(f"invalid: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    click.echo(
        f"ok: {scenario.name} ({scenario.duration:.1f} s, seed {scenario.seed}, "
        f"{len(scenario.vehicle.thrusters)} thrusters, {len(scenario.events)} events)"
    )


@main.command()
@click.option("--port", type=int, default=DEFAULT_PORT, show_default=True,
              help="TCP bus port.")
@click.option("--ws-port", type=int, default=8080, show_default=True,
              help="HTTP/WebSocket port.")
@click.option("--scenario", "scenario_path", type=click.Path(), default=None,
              help="Scenario to run (default: idle hover, one hour).")
@click.option("--log", "log_path", type=click.Path(), default=None)
@click.option("--external-broker", default=None, metavar="HOST:PORT",
              help="Bridge to an existing bus broker instead of starting one.")
@click.option("--fast", is_flag=True, help="Step without real-time pacing.")
def serve(port, ws_port, scenario_path, log_path, external_broker, fast):
    """Run the simulation live behind the bus broker and HTTP/WS service."""
    import uvicorn

    from .runner import Simulation
    from .service import SimDriver, create_app

    if scenario_path is not None:
        scenario = _load_scenario_or_exit(scenario_path, None, None)
    else:
        scenario = scenario_from_document(
            {"name": "idle", "duration": 3600.0, "seed": 0}
        )

    broker = None
    bridge = None
    if external_broker is None:
        try:
            broker = TcpBroker(port=port)
        except OSError as exc:
            click.echo(f"error: cannot bind bus port {port}: {exc}", err=True)
            sys.exit(EXIT_RUNTIME)
        router = broker.router
        sim = Simulation(scenario, router=router, log_path=log_path)
    else:
        host, _, pstr = external_broker.partition(":")
        try:
            remote_port = int(pstr) if pstr else DEFAULT_PORT
        except ValueError:
            click.echo(f"error: bad --external-broker {external_broker!r}", err=True)
            sys.exit(EXIT_VALIDATION)
        sim = Simulation(scenario, log_path=log_path)
        try:
            bridge = _BrokerBridge(sim.router, host, remote_port)
        except OSError as exc:
            click.echo(f"error: cannot reach broker at {external_broker}: {exc}", err=True)
            sys.exit(EXIT_RUNTIME)

    driver = SimDriver(sim, fast=fast)
    app = create_app(sim, driver, bus_stats=broker.stats if broker else None)
    driver.start()
    click.echo(f"bus on :{sim_bus_port(broker, external_broker)}  http/ws on :{ws_port}")
    try:
        uvicorn.run(app, host="127.0.0.1", port=ws_port, log_level="warning")
    finally:
        driver.stop()
        sim.close()
        if bridge is not None:
            bridge.close()
        if broker is not None:
            broker.close()


def sim_bus_port(broker, external):
    return external if external else broker.port


class _BrokerBridge:
    """Relays every frame between the local router and a remote TCP broker."""

    def __init__(self, router, host: str, port: int):
        from .bus.client import BusClient
        from .bus.broker import InProcessClient

        self.remote = BusClient(host, port, name="bridge")
        self.remote.hello()
        self.remote.subscribe("/*")
        self.local = InProcessClient(router, "bridge")
        self.local.subscribe("/*", self._to_remote)
        self._stop = threading.Event()
        self._pump = threading.Thread(target=self._from_remote, daemon=True)
        self._pump.start()

    def _to_remote(self, frame) -> None:
        try:
            self.remote.publish(frame.topic, frame.payload, frame.timestamp_ns)
        except OSError:
            pass

    def _from_remote(self) -> None:
        from .bus.frames import FrameKind

        while not self._stop.is_set():
            frame = self.remote.next_frame(timeout=0.25)
            if frame is None:
                continue
            if frame.kind == FrameKind.PUBLISH:
                self.local.publish(frame.topic, frame.payload, frame.timestamp_ns)

    def close(self) -> None:
        self._stop.set()
        self.remote.close()
        self.local.close()


@main.command()
@click.option("--log", "log_path", required=True, type=click.Path())
@click.option("--speed", default="1.0", show_default=True,
              help="Pacing factor; 'max' or 'inf' replays unpaced.")
@click.option("--port", type=int, default=DEFAULT_PORT, show_default=True,
              help="TCP bus port to publish the replay on.")
def replay(log_path, speed, port):
    """Re-publish a recorded log onto a fresh bus broker."""
    if speed in ("max", "inf"):
        factor = math.inf
    else:
        try:
            factor = float(speed)
        except ValueError:
            click.echo(f"error: bad --speed {speed!r}", err=True)
            sys.exit(EXIT_VALIDATION)
    if not factor > 0:
        click.echo("error: --speed must be positive", err=True)
        sys.exit(EXIT_VALIDATION)
    if not os.path.exists(log_path):
        click.echo(f"error: no log file at {log_path}", err=True)
        sys.exit(EXIT_VALIDATION)
    try:
        broker = TcpBroker(port=port)
    except OSError as exc:
        click.echo(f"error: cannot bind bus port {port}: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    client = broker.attach_client("replay")
    try:
        stats = replay_log(
            log_path,
            lambda topic, t_ns, payload: client.publish(topic, payload, t_ns),
            speed=factor,
        )
    finally:
        broker.close()
    if stats["skipped"]:
        click.echo(f"warning: skipped {stats['skipped']} corrupt lines", err=True)
    click.echo(json.dumps(stats))


def _post_json(url: str, body: dict) -> dict:
    req = urllib.request.Request(
        url,
        data=json.dumps(body).encode("utf-8"),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    with urllib.request.urlopen(req, timeout=5.0) as resp:
        return json.loads(resp.read().decode("utf-8"))


@main.command()
@click.argument("name")
@click.option("--url", default="http://127.0.0.1:8080", show_default=True)
def token(name, url):
    """Send one interaction token (NEXT/PREV/SELECT/BACK/START_STOP) to a live sim."""
    try:
        out = _post_json(f"{url}/api/token", {"token": name.upper()})
    except (urllib.error.URLError, OSError) as exc:
        click.echo(f"error: cannot reach {url}: {exc}", err=True)
        sys.exit(1)
    click.echo(json.dumps(out))
    if not out.get("accepted"):
        sys.exit(1)


def _json_arg(value: str | None, label: str) -> dict | None:
    if value is None:
        return None
    if value.startswith("@"):
        with open(value[1:]) as fh:
            value = fh.read()
    try:
        doc = json.loads(value)
    except json.JSONDecodeError as exc:
        click.echo(f"error: {label} is not valid JSON: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    if not isinstance(doc, dict):
        click.echo(f"error: {label} must be a JSON object", err=True)
        sys.exit(EXIT_VALIDATION)
    return doc


@main.command()
@click.option("--vehicle", default=None, help="Vehicle patch JSON, or @file.")
@click.option("--environment", default=None, help="Environment patch JSON, or @file.")
@click.option("--url", default="http://127.0.0.1:8080", show_default=True)
def patch(vehicle, environment, url):
    """Apply a runtime patch to a live sim through its HTTP service."""
    body = {}
    vdoc = _json_arg(vehicle, "--vehicle")
    edoc = _json_arg(environment, "--environment")
    if vdoc is not None:
        body["vehicle"] = vdoc
    if edoc is not None:
        body["environment"] = edoc
    if not body:
        click.echo("error: nothing to patch (use --vehicle and/or --environment)", err=True)
        sys.exit(EXIT_VALIDATION)
    try:
        out = _post_json(f"{url}/api/patch", body)
    except (urllib.error.URLError, OSError) as exc:
        click.echo(f"error: cannot reach {url}: {exc}", err=True)
        sys.exit(1)
    click.echo(json.dumps(out))
    if not out.get("applied"):
        sys.exit(1)


if __name__ == "__main__":
    main()
