"""Wire format for the framed pub/sub protocol.

Every frame is:

    magic   4 bytes  "MECO"
    version u8       currently 1
    kind    u8       see FrameKind
    topic   u16 BE length, then that many bytes of UTF-8
    t_ns    u64 BE   publisher timestamp, nanoseconds
    payload u32 BE length, then that many bytes (1 MiB cap)

Integers are big-endian. Built-in topics carry JSON payloads but the frame
layer treats payloads as opaque bytes. The decoder distinguishes "feed me
more bytes" (NeedMoreData) from "this stream is broken" (FrameError) so a
transport can buffer partial frames yet fail fast on garbage.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum

MAGIC = b"MECO"
VERSION = 1
MAX_PAYLOAD = 1 << 20
MAX_TOPIC = 1024

_HEAD = len(MAGIC) + 1 + 1 + 2  # through the topic length field


class FrameKind(IntEnum):
    HELLO = 0
    SUBSCRIBE = 1
    UNSUBSCRIBE = 2
    PUBLISH = 3
    TOPIC_LIST = 4
    ERROR = 5


class NeedMoreData(Exception):
    """The buffer ends mid-frame; retry once more bytes arrive."""


class FrameError(ValueError):
    """The buffer cannot be a valid frame no matter what follows."""


@dataclass(frozen=True)
class Frame:
    kind: FrameKind
    topic: str
    timestamp_ns: int
    payload: bytes = b""


def encode_frame(frame: Frame) -> bytes:
    topic = frame.topic.encode("utf-8")
    if len(topic) > MAX_TOPIC:
        raise FrameError(f"topic exceeds {MAX_TOPIC} bytes")
    if len(frame.payload) > MAX_PAYLOAD:
        raise FrameError(f"payload exceeds {MAX_PAYLOAD} bytes")
    if not 0 <= frame.timestamp_ns < 1 << 64:
        raise FrameError("timestamp out of u64 range")
    out = bytearray(MAGIC)
    out.append(VERSION)
    out.append(int(frame.kind))
    out += len(topic).to_bytes(2, "big")
    out += topic
    out += frame.timestamp_ns.to_bytes(8, "big")
    out += len(frame.payload).to_bytes(4, "big")
    out += frame.payload
    return bytes(out)


def decode_frame(buf, offset: int = 0) -> tuple[Frame, int]:
    """Decode one frame starting at offset; returns (frame, bytes consumed).

    Validates eagerly: bad magic, version, kind, length, or text raises
    FrameError as soon as those bytes are visible, even if the rest of the
    frame has not arrived, so corruption is not mistaken for a short read.
    """
    view = memoryview(buf)[offset:]
    n = len(view)
    if n >= 1 and not MAGIC.startswith(bytes(view[: min(4, n)])):
        raise FrameError("bad magic")
    if n < _HEAD:
        raise NeedMoreData
    if view[4] != VERSION:
        raise FrameError(f"unsupported version {view[4]}")
    kind_raw = view[5]
    try:
        kind = FrameKind(kind_raw)
    except ValueError:
        raise FrameError(f"unknown frame kind {kind_raw}") from None
    topic_len = int.from_bytes(view[6:8], "big")
    if topic_len > MAX_TOPIC:
        raise FrameError(f"topic length {topic_len} exceeds {MAX_TOPIC}")
    need = _HEAD + topic_len + 8 + 4
    if n < need:
        raise NeedMoreData
    try:
        topic = bytes(view[_HEAD:_HEAD + topic_len]).decode("utf-8")
    except UnicodeDecodeError:
        raise FrameError("topic is not valid UTF-8") from None
    t_ns = int.from_bytes(view[_HEAD + topic_len:_HEAD + topic_len + 8], "big")
    payload_len = int.from_bytes(view[need - 4:need], "big")
    if payload_len > MAX_PAYLOAD:
        raise FrameError(f"payload length {payload_len} exceeds {MAX_PAYLOAD}")
    total = need + payload_len
    if n < total:
        raise NeedMoreData
    payload = bytes(view[need:total])
    return Frame(kind, topic, t_ns, payload), total


class FrameDecoder:
    """Incremental decoder for a byte stream; buffers partial frames."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[Frame]:
        """Append bytes and return every complete frame now available.

        FrameError propagates; a stream transport should treat it as fatal
        for the connection since resynchronization is not supported.
        """
        self._buf += data
        frames = []
        pos = 0
        while pos < len(self._buf):
            try:
                frame, used = decode_frame(self._buf, pos)
            except NeedMoreData:
                break
            frames.append(frame)
            pos += used
        if pos:
            del self._buf[:pos]
        return frames

    @property
    def pending(self) -> int:
        return len(self._buf)


def json_payload(obj) -> bytes:
    """Canonical JSON bytes: sorted keys, compact separators."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def parse_json_payload(frame: Frame):
    return json.loads(frame.payload.decode("utf-8"))


def error_frame(message: str) -> Frame:
    return Frame(FrameKind.ERROR, "", 0, json_payload({"error": message}))
