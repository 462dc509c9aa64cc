"""Blocking TCP client for the framed bus.

A background reader thread decodes inbound frames into a local queue;
callers drain it with next_frame(). Writes happen on the caller's thread.
The client is intentionally dumb: no reconnect, no acknowledgements, which
matches the at-most-once semantics of the bus itself.
"""

from __future__ import annotations

import queue
import socket
import threading

from .frames import (
    Frame,
    FrameDecoder,
    FrameError,
    FrameKind,
    encode_frame,
    json_payload,
    parse_json_payload,
)


class BusClient:
    def __init__(self, host: str = "127.0.0.1", port: int = 7777, name: str = "client"):
        self.name = name
        self.sock = socket.create_connection((host, port))
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.inbound: queue.Queue[Frame] = queue.Queue()
        self._closed = threading.Event()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self):
        decoder = FrameDecoder()
        try:
            while not self._closed.is_set():
                data = self.sock.recv(65536)
                if not data:
                    break
                for frame in decoder.feed(data):
                    self.inbound.put(frame)
        except (OSError, FrameError):
            pass
        finally:
            self._closed.set()

    def _send(self, frame: Frame) -> None:
        self.sock.sendall(encode_frame(frame))

    def hello(self, topics: list[str] | None = None) -> None:
        doc: dict = {"client": self.name}
        if topics is not None:
            doc["topics"] = topics
        self._send(Frame(FrameKind.HELLO, "", 0, json_payload(doc)))

    def subscribe(self, pattern: str) -> None:
        self._send(Frame(FrameKind.SUBSCRIBE, pattern, 0))

    def unsubscribe(self, pattern: str) -> None:
        self._send(Frame(FrameKind.UNSUBSCRIBE, pattern, 0))

    def publish(self, topic: str, payload, timestamp_ns: int = 0) -> None:
        data = payload if isinstance(payload, bytes) else json_payload(payload)
        self._send(Frame(FrameKind.PUBLISH, topic, timestamp_ns, data))

    def next_frame(self, timeout: float | None = 1.0) -> Frame | None:
        try:
            return self.inbound.get(timeout=timeout)
        except queue.Empty:
            return None

    def topic_list(self, timeout: float = 2.0) -> list[str]:
        """Ask the broker for known topics; other frames keep queuing."""
        self._send(Frame(FrameKind.TOPIC_LIST, "", 0))
        stash = []
        result: list[str] = []
        while True:
            frame = self.next_frame(timeout=timeout)
            if frame is None:
                break
            if frame.kind == FrameKind.TOPIC_LIST:
                result = parse_json_payload(frame)
                break
            stash.append(frame)
        for frame in stash:
            self.inbound.put(frame)
        return result

    def close(self) -> None:
        self._closed.set()
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()
