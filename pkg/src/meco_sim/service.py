"""HTTP and WebSocket face of a live simulation.

The REST surface is small and typed: health, current config, runtime
patches, scenario validation, bus statistics, and token injection. The
WebSocket endpoint is a transparent gateway onto the bus: every bus
message goes out as {"topic", "timestamp_ns", "payload"} (timestamp as a
decimal string, since u64 nanoseconds exceed what JSON numbers can carry
losslessly), and inbound messages may publish only to command topics
(/cmd/* and /sim/patch). A disallowed publish gets an error message back
but keeps the connection, so one bad console action cannot drop the link.
"""

from __future__ import annotations

import asyncio
import json
import threading
import time
import uuid

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from pydantic import BaseModel

from .behaviors import Token
from .bus.broker import InProcessClient, Router
from .runner import Simulation, T_EVENT, T_PATCH, T_TOKEN
from .scenario import ScenarioError, scenario_from_document
from .vehicle import ConfigError, config_to_document, environment_to_document

WS_QUEUE_LIMIT = 1024


def ws_topic_allowed(topic: str) -> bool:
    """Console-origin publishes: commands and runtime patches only."""
    return topic.startswith("/cmd/") or topic == "/sim/patch"


class TokenRequest(BaseModel):
    token: str


class TokenResponse(BaseModel):
    accepted: bool
    detail: str = ""


class PatchRequest(BaseModel):
    vehicle: dict | None = None
    environment: dict | None = None


class PatchResponse(BaseModel):
    applied: bool
    detail: str = ""


class ValidateRequest(BaseModel):
    scenario: dict


class ValidateResponse(BaseModel):
    valid: bool
    error: str | None = None


class HealthResponse(BaseModel):
    status: str
    sim_time: float
    steps: int
    running: bool
    armed: bool
    mode: str


class SimDriver(threading.Thread):
    """Steps a Simulation on a wall-clock schedule in the background."""

    def __init__(self, sim: Simulation, speed: float = 1.0, fast: bool = False):
        super().__init__(daemon=True, name="sim-driver")
        self.sim = sim
        self.speed = speed
        self.fast = fast
        self.stop_event = threading.Event()

    def run(self) -> None:
        sim = self.sim
        t0 = time.monotonic()
        while not sim.finished and not self.stop_event.is_set():
            sim.step_once()
            if not self.fast:
                ahead = sim.t / self.speed - (time.monotonic() - t0)
                if ahead > 0.001:
                    time.sleep(ahead)

    def stop(self) -> None:
        self.stop_event.set()
        self.join(timeout=2.0)

    @property
    def running(self) -> bool:
        return self.is_alive() and not self.sim.finished


class _PatchGate:
    """Correlates POSTed patches with the sim's applied/rejected events."""

    def __init__(self, router: Router):
        self._client = InProcessClient(router, "patch-gate")
        self._client.subscribe(T_EVENT, self._on_event)
        self._pub = InProcessClient(router, "api")
        self._waiters: dict[str, tuple[threading.Event, list]] = {}
        self._lock = threading.Lock()

    def _on_event(self, frame) -> None:
        try:
            payload = json.loads(frame.payload.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return
        rid = payload.get("rid")
        if not rid or payload.get("event") not in ("patch_applied", "patch_rejected"):
            return
        with self._lock:
            waiter = self._waiters.pop(rid, None)
        if waiter is not None:
            event, slot = waiter
            slot.append(payload)
            event.set()

    def apply(self, patch: PatchRequest, t_ns: int, timeout: float = 2.0) -> PatchResponse:
        rid = uuid.uuid4().hex
        done = threading.Event()
        slot: list = []
        with self._lock:
            self._waiters[rid] = (done, slot)
        doc: dict = {"rid": rid}
        if patch.vehicle is not None:
            doc["vehicle"] = patch.vehicle
        if patch.environment is not None:
            doc["environment"] = patch.environment
        self._pub.publish(T_PATCH, doc, t_ns)
        if not done.wait(timeout):
            with self._lock:
                self._waiters.pop(rid, None)
            return PatchResponse(applied=False, detail="timed out waiting for the sim loop")
        result = slot[0]
        if result["event"] == "patch_applied":
            return PatchResponse(applied=True, detail="applied")
        return PatchResponse(applied=False, detail=result.get("error", "rejected"))

    def publish_command(self, topic: str, payload: dict, t_ns: int) -> None:
        self._pub.publish(topic, payload, t_ns)

    def close(self) -> None:
        self._client.close()
        self._pub.close()


def create_app(sim: Simulation, driver: SimDriver | None = None,
               bus_stats=None) -> FastAPI:
    """Service over a live Simulation; bus_stats is an optional callable."""
    app = FastAPI(title="meco-sim", version="0.1.0")
    router = sim.router
    gate = _PatchGate(router)
    app.state.gate = gate

    @app.get("/api/health", response_model=HealthResponse)
    def health():
        return HealthResponse(
            status="ok",
            sim_time=sim.t,
            steps=sim.n,
            running=driver.running if driver else False,
            armed=sim.supervisor.armed,
            mode=sim.supervisor.mode,
        )

    @app.get("/api/config")
    def config():
        body = sim.config.body
        return {
            "vehicle": config_to_document(sim.config),
            "environment": environment_to_document(sim.env),
            "derived": {
                "cog": list(body.cog),
                "total_mass": body.total_mass,
                "allocation_rank": sim.alloc.rank,
                "battery_energy_wh": sim.battery.energy_wh,
            },
        }

    @app.post("/api/patch", response_model=PatchResponse)
    def patch(req: PatchRequest):
        if req.vehicle is None and req.environment is None:
            return PatchResponse(applied=False, detail="empty patch")
        return gate.apply(req, sim.t_ns)

    @app.post("/api/validate/scenario", response_model=ValidateResponse)
    def validate_scenario(req: ValidateRequest):
        try:
            scenario_from_document(req.scenario)
        except (ScenarioError, ConfigError) as exc:
            return ValidateResponse(valid=False, error=str(exc))
        return ValidateResponse(valid=True)

    @app.get("/api/stats")
    def stats():
        out = {
            "sim": {
                "steps": sim.n,
                "sim_time": sim.t,
                "armed": sim.supervisor.armed,
                "mode": sim.supervisor.mode,
                "battery_wh": sim.battery.energy_wh,
            },
            "bus": bus_stats() if bus_stats else sim.router.stats(),
        }
        return out

    @app.post("/api/token", response_model=TokenResponse)
    def token(req: TokenRequest):
        if req.token not in Token.__members__:
            names = ", ".join(Token.__members__)
            return TokenResponse(accepted=False, detail=f"token must be one of {names}")
        gate.publish_command(T_TOKEN, {"token": req.token}, sim.t_ns)
        return TokenResponse(accepted=True)

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        loop = asyncio.get_running_loop()
        outq: asyncio.Queue = asyncio.Queue(maxsize=WS_QUEUE_LIMIT)
        client = InProcessClient(router, "ws-gateway")

        def deliver(frame, _loop=loop, _q=outq):
            try:
                payload = json.loads(frame.payload.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError):
                payload = None
            msg = {
                "topic": frame.topic,
                "timestamp_ns": str(frame.timestamp_ns),
                "payload": payload,
            }

            def offer():
                if _q.full():
                    _q.get_nowait()  # shed the oldest, same as the bus
                _q.put_nowait(msg)

            try:
                _loop.call_soon_threadsafe(offer)
            except RuntimeError:
                pass  # loop is closing

        client.subscribe("/*", deliver)

        async def sender():
            while True:
                msg = await outq.get()
                await ws.send_text(json.dumps(msg))

        send_task = asyncio.create_task(sender())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    doc = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_text(json.dumps({"error": "not valid JSON"}))
                    continue
                topic = doc.get("topic")
                payload = doc.get("payload")
                if not isinstance(topic, str) or not ws_topic_allowed(topic):
                    await ws.send_text(json.dumps(
                        {"error": f"publishing to {topic!r} is not allowed"}
                    ))
                    continue
                if not isinstance(payload, dict):
                    await ws.send_text(json.dumps({"error": "payload must be an object"}))
                    continue
                client.publish(topic, payload, sim.t_ns)
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            client.close()

    return app
