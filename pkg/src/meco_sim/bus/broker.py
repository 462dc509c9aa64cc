"""Topic router, in-process clients, and the TCP broker.

One Router instance carries all subscriptions. Publishing walks the
subscriber list under a single lock, so deliveries from one publisher to
one topic arrive at every subscriber in publication order (at-most-once:
a slow TCP subscriber sheds its oldest queued frames rather than stalling
the bus). Publishers never hear their own frames back.

The same router backs two transports. In-process clients deliver
synchronously on the publisher's thread, which is what the deterministic
simulation loop needs. The TCP broker gives every connection a reader
thread, a writer thread, and a bounded outbound queue (drop-oldest, 1024
frames) and speaks the framed protocol from frames.py.
"""

from __future__ import annotations

import json
import socket
import threading
from collections import deque

from .frames import (
    Frame,
    FrameDecoder,
    FrameError,
    FrameKind,
    encode_frame,
    error_frame,
    json_payload,
    parse_json_payload,
)
from .topics import topic_matches, valid_pattern, valid_topic

DEFAULT_PORT = 7777
QUEUE_LIMIT = 1024
REGISTRATION_LIMIT = 8  # constrained-profile topic cap


class _Subscription:
    __slots__ = ("pattern", "owner", "deliver", "delivered", "name")

    def __init__(self, pattern, owner, deliver, name):
        self.pattern = pattern
        self.owner = owner
        self.deliver = deliver
        self.delivered = 0
        self.name = name


class Router:
    """Pattern-matched fan-out with self-echo suppression and counters."""

    def __init__(self):
        self._lock = threading.RLock()
        self._subs: list[_Subscription] = []
        self._topics: set[str] = set()
        self._published = 0
        self._delivered = 0

    def subscribe(self, owner, pattern: str, deliver, name: str = "") -> _Subscription:
        if not valid_pattern(pattern):
            raise ValueError(f"invalid subscription pattern {pattern!r}")
        sub = _Subscription(pattern, owner, deliver, name)
        with self._lock:
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: _Subscription) -> None:
        with self._lock:
            try:
                self._subs.remove(sub)
            except ValueError:
                pass

    def drop_owner(self, owner) -> None:
        with self._lock:
            self._subs = [s for s in self._subs if s.owner is not owner]

    def drop_pattern(self, owner, pattern: str) -> None:
        with self._lock:
            self._subs = [
                s for s in self._subs if not (s.owner is owner and s.pattern == pattern)
            ]

    def note_topic(self, topic: str) -> None:
        with self._lock:
            self._topics.add(topic)

    def publish(self, owner, frame: Frame) -> int:
        """Route one PUBLISH frame; returns the number of deliveries."""
        if not valid_topic(frame.topic):
            raise ValueError(f"invalid topic {frame.topic!r}")
        count = 0
        with self._lock:
            self._published += 1
            self._topics.add(frame.topic)
            for sub in self._subs:
                if sub.owner is owner:
                    continue
                if topic_matches(sub.pattern, frame.topic):
                    sub.deliver(frame)
                    sub.delivered += 1
                    count += 1
            self._delivered += count
        return count

    def topics(self) -> list[str]:
        with self._lock:
            return sorted(self._topics)

    def stats(self) -> dict:
        with self._lock:
            subs = [
                {
                    "name": s.name,
                    "pattern": s.pattern,
                    "delivered": s.delivered,
                    "drops": getattr(s.owner, "drops", 0),
                }
                for s in self._subs
            ]
        return {
            "published": self._published,
            "delivered": self._delivered,
            "topics": self.topics(),
            "subscribers": subs,
        }


class InProcessClient:
    """Bus endpoint living inside the process, no sockets involved.

    Subscriptions either invoke a callback synchronously on the publisher's
    thread or buffer into a bounded pull queue (drop-oldest). The
    simulation loop uses callback mode so every delivery lands at a
    deterministic point in the step.
    """

    def __init__(self, router: Router, name: str = "inproc"):
        self._router = router
        self.name = name
        self._queue: deque[Frame] = deque(maxlen=QUEUE_LIMIT)
        self.drops = 0
        self._subs: list[_Subscription] = []

    def subscribe(self, pattern: str, callback=None) -> None:
        if callback is None:
            def deliver(frame, q=self._queue):
                if len(q) == q.maxlen:
                    self.drops += 1
                q.append(frame)
        else:
            deliver = callback
        self._subs.append(self._router.subscribe(self, pattern, deliver, self.name))

    def publish(self, topic: str, payload, timestamp_ns: int = 0) -> int:
        data = payload if isinstance(payload, bytes) else json_payload(payload)
        return self._router.publish(self, Frame(FrameKind.PUBLISH, topic, timestamp_ns, data))

    def poll(self) -> Frame | None:
        try:
            return self._queue.popleft()
        except IndexError:
            return None

    def close(self) -> None:
        self._router.drop_owner(self)
        self._subs.clear()


class _Connection:
    """One TCP peer: framed reader, queued writer, per-profile state."""

    def __init__(self, broker: "TcpBroker", sock: socket.socket, peer):
        self.broker = broker
        self.sock = sock
        self.peer = peer
        self.name = f"tcp:{peer[0]}:{peer[1]}"
        self.registered: set[str] = set()
        self.constrained = False
        self.drops = 0
        self._out: deque[Frame] = deque()
        self._cv = threading.Condition()
        self._closed = False
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._writer = threading.Thread(target=self._write_loop, daemon=True)

    def start(self):
        self._reader.start()
        self._writer.start()

    # writer side -----------------------------------------------------------

    def send(self, frame: Frame) -> None:
        with self._cv:
            if self._closed:
                return
            if len(self._out) >= QUEUE_LIMIT:
                self._out.popleft()
                self.drops += 1
            self._out.append(frame)
            self._cv.notify()

    def _write_loop(self):
        while True:
            with self._cv:
                while not self._out and not self._closed:
                    self._cv.wait()
                if self._closed and not self._out:
                    return
                batch = []
                while self._out:
                    batch.append(self._out.popleft())
            try:
                self.sock.sendall(b"".join(encode_frame(f) for f in batch))
            except OSError:
                self.close()
                return

    # reader side ------------------------------------------------------------

    def _read_loop(self):
        decoder = FrameDecoder()
        try:
            while True:
                data = self.sock.recv(65536)
                if not data:
                    break
                try:
                    frames = decoder.feed(data)
                except FrameError as exc:
                    self.send(error_frame(str(exc)))
                    break
                for frame in frames:
                    self._dispatch(frame)
        except OSError:
            pass
        finally:
            self.close()

    def _dispatch(self, frame: Frame) -> None:
        kind = frame.kind
        if kind == FrameKind.HELLO:
            self._on_hello(frame)
        elif kind == FrameKind.SUBSCRIBE:
            self._on_subscribe(frame)
        elif kind == FrameKind.UNSUBSCRIBE:
            self.broker.router.drop_pattern(self, frame.topic)
        elif kind == FrameKind.PUBLISH:
            self._on_publish(frame)
        elif kind == FrameKind.TOPIC_LIST:
            payload = json_payload(self.broker.router.topics())
            self.send(Frame(FrameKind.TOPIC_LIST, "", 0, payload))
        # inbound ERROR frames are informational; nothing to do

    def _on_hello(self, frame: Frame) -> None:
        try:
            doc = parse_json_payload(frame) if frame.payload else {}
        except (json.JSONDecodeError, UnicodeDecodeError):
            self.send(error_frame("HELLO payload is not valid JSON"))
            return
        if not isinstance(doc, dict):
            self.send(error_frame("HELLO payload must be an object"))
            return
        name = doc.get("client")
        if isinstance(name, str) and name:
            self.name = name
        topics = doc.get("topics")
        if topics is None:
            return
        if not isinstance(topics, list) or not all(isinstance(t, str) for t in topics):
            self.send(error_frame("HELLO topics must be an array of strings"))
            return
        self.constrained = True
        for topic in topics:
            if not valid_topic(topic):
                self.send(error_frame(f"invalid topic {topic!r}"))
                continue
            if topic in self.registered:
                continue
            if len(self.registered) >= REGISTRATION_LIMIT:
                self.send(error_frame(
                    f"registration limit of {REGISTRATION_LIMIT} topics reached"
                ))
                return
            self.registered.add(topic)
            self.broker.router.note_topic(topic)
            self.broker.router.subscribe(self, topic, self.send, self.name)

    def _on_subscribe(self, frame: Frame) -> None:
        pattern = frame.topic
        if self.constrained:
            if pattern not in self.registered:
                self.send(error_frame(f"constrained client may not subscribe to {pattern!r}"))
            return  # registered topics are already subscribed
        if not valid_pattern(pattern):
            self.send(error_frame(f"invalid subscription pattern {pattern!r}"))
            return
        self.broker.router.subscribe(self, pattern, self.send, self.name)

    def _on_publish(self, frame: Frame) -> None:
        if self.constrained and frame.topic not in self.registered:
            self.send(error_frame(f"topic {frame.topic!r} is not registered"))
            return
        if not valid_topic(frame.topic):
            self.send(error_frame(f"invalid topic {frame.topic!r}"))
            return
        self.broker.router.publish(self, frame)

    def close(self) -> None:
        with self._cv:
            if self._closed:
                return
            self._closed = True
            self._cv.notify_all()
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()
        self.broker.router.drop_owner(self)
        self.broker._forget(self)


class TcpBroker:
    """Threaded TCP face of a Router; also hosts in-process endpoints.

    Connections that register topics in HELLO become constrained clients:
    they are auto-subscribed to those topics, may publish only to them, and
    are capped at eight registrations, mirroring a microcontroller peer
    with a fixed topic table.
    """

    def __init__(self, host: str = "127.0.0.1", port: int = DEFAULT_PORT):
        self.router = Router()
        self._listener = socket.create_server((host, port))
        self.host, self.port = self._listener.getsockname()[:2]
        self._conns: set[_Connection] = set()
        self._lock = threading.Lock()
        self._closed = False
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    def attach_client(self, name: str = "inproc") -> InProcessClient:
        """In-process endpoint sharing this broker's router (no socket)."""
        return InProcessClient(self.router, name)

    def stats(self) -> dict:
        return self.router.stats()

    def _accept_loop(self):
        while True:
            try:
                sock, peer = self._listener.accept()
            except OSError:
                return
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            conn = _Connection(self, sock, peer)
            with self._lock:
                if self._closed:
                    sock.close()
                    return
                self._conns.add(conn)
            conn.start()

    def _forget(self, conn: _Connection) -> None:
        with self._lock:
            self._conns.discard(conn)

    def close(self) -> None:
        with self._lock:
            if self._closed:
                return
            self._closed = True
            conns = list(self._conns)
        self._listener.close()
        for conn in conns:
            conn.close()
