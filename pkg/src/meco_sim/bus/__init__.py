"""Framed pub/sub bus: wire codec, router, TCP broker, clients."""

from .broker import DEFAULT_PORT, InProcessClient, Router, TcpBroker
from .client import BusClient
from .frames import (
    MAX_PAYLOAD,
    Frame,
    FrameDecoder,
    FrameError,
    FrameKind,
    NeedMoreData,
    decode_frame,
    encode_frame,
    json_payload,
    parse_json_payload,
)
from .topics import topic_matches, valid_pattern, valid_topic

__all__ = [
    "DEFAULT_PORT",
    "MAX_PAYLOAD",
    "BusClient",
    "Frame",
    "FrameDecoder",
    "FrameError",
    "FrameKind",
    "InProcessClient",
    "NeedMoreData",
    "Router",
    "TcpBroker",
    "decode_frame",
    "encode_frame",
    "json_payload",
    "parse_json_payload",
    "topic_matches",
    "valid_pattern",
    "valid_topic",
]
