"""Wire format, topic matching, routing, and the TCP broker."""

import random
import time

import pytest

from meco_sim.bus.broker import (
    QUEUE_LIMIT,
    REGISTRATION_LIMIT,
    InProcessClient,
    Router,
    TcpBroker,
)
from meco_sim.bus.client import BusClient
from meco_sim.bus.frames import (
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
from meco_sim.bus.topics import topic_matches, valid_pattern, valid_topic


# --- frame encoding ---------------------------------------------------------


def test_publish_frame_reference_bytes():
    # hand-assembled reference: magic, version, kind, topic length, topic,
    # eight timestamp bytes, four payload-length bytes
    frame = Frame(FrameKind.PUBLISH, "/x", 0, b"")
    expected = bytes.fromhex("4d45434f" "01" "03" "0002" "2f78") + b"\x00" * 12
    assert encode_frame(frame) == expected
    assert len(expected) == 22


def test_timestamp_and_payload_are_big_endian():
    frame = Frame(FrameKind.PUBLISH, "/x", 0x0102030405060708, b"ab")
    raw = encode_frame(frame)
    assert raw[10:18] == bytes.fromhex("0102030405060708")
    assert raw[18:22] == b"\x00\x00\x00\x02"
    assert raw[22:] == b"ab"


def test_roundtrip_random_frames():
    rng = random.Random(42)
    kinds = list(FrameKind)
    for _ in range(1000):
        topic = "/" + "/".join(
            "".join(rng.choice("abcz09_-") for _ in range(rng.randint(1, 6)))
            for _ in range(rng.randint(1, 4))
        )
        frame = Frame(
            rng.choice(kinds),
            topic,
            rng.randint(0, 2**64 - 1),
            rng.randbytes(rng.randint(0, 64)),
        )
        decoded, used = decode_frame(encode_frame(frame))
        assert decoded == frame
        assert used == len(encode_frame(frame))


def test_unicode_topic_roundtrip():
    frame = Frame(FrameKind.PUBLISH, "/søna/r", 7, b"\xff\x00")
    decoded, _ = decode_frame(encode_frame(frame))
    assert decoded.topic == "/søna/r"


def test_encode_rejects_oversized_payload():
    with pytest.raises(FrameError):
        encode_frame(Frame(FrameKind.PUBLISH, "/x", 0, b"\x00" * (MAX_PAYLOAD + 1)))


def test_encode_rejects_negative_timestamp():
    with pytest.raises(FrameError):
        encode_frame(Frame(FrameKind.PUBLISH, "/x", -1, b""))


# --- frame decoding ---------------------------------------------------------


def valid_frame_bytes():
    return encode_frame(Frame(FrameKind.PUBLISH, "/sensors/ahrs", 123456789, b"hi"))


def test_every_truncation_asks_for_more():
    raw = valid_frame_bytes()
    for cut in range(len(raw)):
        with pytest.raises(NeedMoreData):
            decode_frame(raw[:cut])
    frame, used = decode_frame(raw)
    assert used == len(raw)
    assert frame.payload == b"hi"


def test_bad_magic_fails_eagerly():
    # a single wrong leading byte is enough, no need to buffer a header
    with pytest.raises(FrameError):
        decode_frame(b"X")
    with pytest.raises(FrameError):
        decode_frame(b"MECX" + valid_frame_bytes()[4:])


def test_unsupported_version_rejected():
    raw = bytearray(valid_frame_bytes())
    raw[4] = 2
    with pytest.raises(FrameError, match="version"):
        decode_frame(bytes(raw))


def test_unknown_kind_rejected():
    raw = bytearray(valid_frame_bytes())
    raw[5] = 250
    with pytest.raises(FrameError, match="kind"):
        decode_frame(bytes(raw))


def test_invalid_utf8_topic_rejected():
    raw = bytearray(encode_frame(Frame(FrameKind.PUBLISH, "/ab", 0, b"")))
    raw[8] = 0xFF  # first topic byte
    with pytest.raises(FrameError, match="UTF-8"):
        decode_frame(bytes(raw))


def test_oversized_payload_length_rejected_before_buffering():
    raw = bytearray(valid_frame_bytes())
    off = 8 + len("/sensors/ahrs") + 8
    raw[off:off + 4] = (MAX_PAYLOAD + 1).to_bytes(4, "big")
    with pytest.raises(FrameError, match="payload"):
        decode_frame(bytes(raw))


def test_decode_at_offset():
    raw = valid_frame_bytes()
    frame, used = decode_frame(b"\xde\xad" + raw, offset=2)
    assert frame.topic == "/sensors/ahrs"
    assert used == len(raw)


def test_decoder_reassembles_byte_by_byte():
    frames = [
        Frame(FrameKind.PUBLISH, "/a", 1, b"one"),
        Frame(FrameKind.SUBSCRIBE, "/b/*", 0, b""),
        Frame(FrameKind.PUBLISH, "/c/d", 2, b"\x00" * 100),
    ]
    raw = b"".join(encode_frame(f) for f in frames)
    decoder = FrameDecoder()
    got = []
    for i in range(len(raw)):
        got.extend(decoder.feed(raw[i:i + 1]))
    assert got == frames
    assert decoder.pending == 0


def test_decoder_handles_many_frames_in_one_buffer():
    frames = [Frame(FrameKind.PUBLISH, "/t", i, str(i).encode()) for i in range(50)]
    raw = b"".join(encode_frame(f) for f in frames)
    decoder = FrameDecoder()
    assert decoder.feed(raw) == frames


def test_decoder_poisons_after_error():
    decoder = FrameDecoder()
    with pytest.raises(FrameError):
        decoder.feed(b"JUNKJUNKJUNK")
    # a poisoned stream cannot resynchronize; later feeds keep failing
    with pytest.raises(FrameError):
        decoder.feed(valid_frame_bytes())


def test_json_payload_helpers():
    frame = Frame(FrameKind.PUBLISH, "/x", 0, json_payload({"b": 1, "a": [2, 3]}))
    assert frame.payload == b'{"a":[2,3],"b":1}'
    assert parse_json_payload(frame) == {"a": [2, 3], "b": 1}


def test_decode_fuzz_never_crashes():
    rng = random.Random(1)
    decoder_exceptions = (NeedMoreData, FrameError)
    for _ in range(20000):
        n = rng.randint(0, 40)
        buf = bytes(rng.randrange(256) for _ in range(n))
        try:
            decode_frame(buf)
        except decoder_exceptions:
            pass
    # mutated valid frames stress the deeper fields
    base = bytearray(valid_frame_bytes())
    for _ in range(20000):
        buf = bytearray(base)
        for _ in range(rng.randint(1, 4)):
            buf[rng.randrange(len(buf))] = rng.randrange(256)
        try:
            decode_frame(bytes(buf))
        except decoder_exceptions:
            pass


# --- topic grammar ----------------------------------------------------------


def test_topic_validity_table():
    good = ["/x", "/sensors/ahrs", "/a/b/c", "/under_score", "/dash-9"]
    bad = ["", "/", "x", "/a//b", "/a/", "//a", "/a b", "/a/*", "/*"]
    for topic in good:
        assert valid_topic(topic), topic
    for topic in bad:
        assert not valid_topic(topic), topic


def test_pattern_validity_table():
    good = ["/x", "/sensors/*", "/*", "/a/b/*"]
    bad = ["", "/", "*", "/a/*/b", "/*/a", "/a*", "/a/**"]
    for pattern in good:
        assert valid_pattern(pattern), pattern
    for pattern in bad:
        assert not valid_pattern(pattern), pattern


def test_wildcard_matches_one_or_more_segments():
    assert topic_matches("/sensors/*", "/sensors/ahrs")
    assert topic_matches("/sensors/*", "/sensors/depth")
    assert topic_matches("/sensors/*", "/sensors/ahrs/raw")
    assert not topic_matches("/sensors/*", "/actuators/pwm")
    assert not topic_matches("/sensors/*", "/sensors")
    assert not topic_matches("/sensors/*", "/sensorsplus/x")


def test_root_wildcard_matches_everything():
    for topic in ["/a", "/a/b", "/sensors/ahrs"]:
        assert topic_matches("/*", topic)


def test_exact_pattern_is_exact():
    assert topic_matches("/a/b", "/a/b")
    assert not topic_matches("/a/b", "/a/b/c")
    assert not topic_matches("/a/b", "/a")


# --- router -----------------------------------------------------------------


def publish(router, owner, topic, payload=b"", t=0):
    return router.publish(owner, Frame(FrameKind.PUBLISH, topic, t, payload))


def test_router_delivers_in_publish_order():
    router = Router()
    got = []
    router.subscribe(object(), "/t", got.append)
    sender = object()
    for i in range(100):
        publish(router, sender, "/t", str(i).encode(), t=i)
    assert [f.timestamp_ns for f in got] == list(range(100))
    assert [f.payload for f in got] == [str(i).encode() for i in range(100)]


def test_publish_without_subscribers_returns_zero():
    router = Router()
    assert publish(router, object(), "/lonely") == 0


def test_publisher_does_not_hear_itself():
    router = Router()
    me = object()
    got = []
    router.subscribe(me, "/t", got.append)
    assert publish(router, me, "/t") == 0
    assert got == []
    assert publish(router, object(), "/t") == 1
    assert len(got) == 1


def test_wildcard_subscription_fans_out():
    router = Router()
    got = []
    router.subscribe(object(), "/sensors/*", got.append)
    sender = object()
    publish(router, sender, "/sensors/ahrs")
    publish(router, sender, "/sensors/depth")
    publish(router, sender, "/actuators/pwm")
    assert [f.topic for f in got] == ["/sensors/ahrs", "/sensors/depth"]


def test_unsubscribe_stops_delivery():
    router = Router()
    got = []
    owner = object()
    sub = router.subscribe(owner, "/t", got.append)
    sender = object()
    publish(router, sender, "/t")
    router.unsubscribe(sub)
    publish(router, sender, "/t")
    assert len(got) == 1


def test_invalid_topic_publish_raises():
    router = Router()
    with pytest.raises(ValueError):
        publish(router, object(), "not/absolute")


def test_stats_counts_and_topic_registry():
    router = Router()
    router.subscribe(object(), "/a/*", lambda f: None, name="watcher")
    sender = object()
    publish(router, sender, "/a/x")
    publish(router, sender, "/a/y")
    publish(router, sender, "/b")
    stats = router.stats()
    assert stats["published"] == 3
    assert stats["delivered"] == 2
    assert stats["topics"] == ["/a/x", "/a/y", "/b"]
    assert stats["subscribers"][0]["name"] == "watcher"
    assert stats["subscribers"][0]["delivered"] == 2


def test_inprocess_queue_drops_oldest_when_full():
    router = Router()
    client = InProcessClient(router, "slow")
    client.subscribe("/t")
    sender = InProcessClient(router, "fast")
    for i in range(QUEUE_LIMIT + 50):
        sender.publish("/t", str(i).encode(), timestamp_ns=i)
    assert client.drops == 50
    first = client.poll()
    assert first.timestamp_ns == 50  # the oldest 50 fell off the front
    count = 1
    while client.poll() is not None:
        count += 1
    assert count == QUEUE_LIMIT


def test_inprocess_callback_mode_is_synchronous():
    router = Router()
    client = InProcessClient(router, "cb")
    seen = []
    client.subscribe("/t", seen.append)
    InProcessClient(router, "src").publish("/t", b"now")
    assert seen and seen[0].payload == b"now"


def test_close_drops_all_subscriptions():
    router = Router()
    client = InProcessClient(router, "gone")
    client.subscribe("/t")
    client.close()
    assert publish(router, object(), "/t") == 0


# --- tcp broker -------------------------------------------------------------


@pytest.fixture()
def broker():
    b = TcpBroker(port=0)
    yield b
    b.close()


def connect(broker, name="test"):
    return BusClient("127.0.0.1", broker.port, name=name)


def drain_until(client, kind, timeout=2.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        frame = client.next_frame(timeout=0.2)
        if frame is not None and frame.kind == kind:
            return frame
    raise AssertionError(f"no {kind!r} frame arrived within {timeout}s")


def test_tcp_publish_reaches_subscriber(broker):
    sub = connect(broker, "listener")
    pub = connect(broker, "talker")
    try:
        sub.hello()
        sub.subscribe("/sensors/*")
        time.sleep(0.1)  # allow SUBSCRIBE to land before publishing
        pub.publish("/sensors/ahrs", {"q": [1, 0, 0, 0]}, timestamp_ns=5)
        frame = drain_until(sub, FrameKind.PUBLISH)
        assert frame.topic == "/sensors/ahrs"
        assert frame.timestamp_ns == 5
        assert parse_json_payload(frame) == {"q": [1, 0, 0, 0]}
    finally:
        sub.close()
        pub.close()


def test_constrained_client_at_registration_limit(broker):
    topics = [f"/mcu/t{i}" for i in range(REGISTRATION_LIMIT)]
    cli = connect(broker, "mcu")
    try:
        cli.hello(topics=topics)
        cli.publish(topics[-1], b"ok")
        assert cli.next_frame(timeout=0.3) is None  # no ERROR back
        assert set(broker.router.topics()) == set(topics)
    finally:
        cli.close()


def test_ninth_registration_is_refused(broker):
    topics = [f"/mcu/t{i}" for i in range(REGISTRATION_LIMIT + 1)]
    cli = connect(broker, "mcu")
    try:
        cli.hello(topics=topics)
        frame = drain_until(cli, FrameKind.ERROR)
        assert b"registration limit" in frame.payload
    finally:
        cli.close()


def test_constrained_publish_outside_registration_errors(broker):
    cli = connect(broker, "mcu")
    try:
        cli.hello(topics=["/mcu/out"])
        cli.publish("/other", b"nope")
        frame = drain_until(cli, FrameKind.ERROR)
        assert b"not registered" in frame.payload
    finally:
        cli.close()


def test_constrained_client_is_auto_subscribed(broker):
    mcu = connect(broker, "mcu")
    pub = connect(broker, "sim")
    try:
        mcu.hello(topics=["/mcu/cmd"])
        time.sleep(0.1)
        pub.publish("/mcu/cmd", b"go")
        frame = drain_until(mcu, FrameKind.PUBLISH)
        assert frame.topic == "/mcu/cmd"
        assert frame.payload == b"go"
    finally:
        mcu.close()
        pub.close()


def test_constrained_subscribe_outside_registration_errors(broker):
    cli = connect(broker, "mcu")
    try:
        cli.hello(topics=["/mcu/out"])
        cli.subscribe("/sensors/*")
        frame = drain_until(cli, FrameKind.ERROR)
        assert b"may not subscribe" in frame.payload
    finally:
        cli.close()


def test_topic_list_reply(broker):
    pub = connect(broker, "talker")
    cli = connect(broker, "asker")
    try:
        pub.publish("/a/x", b"")
        pub.publish("/b/y", b"")
        time.sleep(0.1)
        assert cli.topic_list() == ["/a/x", "/b/y"]
    finally:
        pub.close()
        cli.close()


def test_garbage_bytes_get_error_and_disconnect(broker):
    cli = connect(broker, "fuzzer")
    try:
        cli.sock.sendall(b"GARBAGE GARBAGE GARBAGE")
        frame = drain_until(cli, FrameKind.ERROR)
        assert b"magic" in frame.payload
        # broker hangs up after a framing error
        deadline = time.monotonic() + 2.0
        while time.monotonic() < deadline and not cli._closed.is_set():
            time.sleep(0.02)
        assert cli._closed.is_set()
    finally:
        cli.close()


def test_attach_client_shares_router_with_tcp(broker):
    inproc = broker.attach_client("sim")
    tcp = connect(broker, "console")
    try:
        tcp.subscribe("/telemetry/*")
        time.sleep(0.1)
        inproc.publish("/telemetry/pose", {"z": 2.5})
        frame = drain_until(tcp, FrameKind.PUBLISH)
        assert parse_json_payload(frame) == {"z": 2.5}
    finally:
        tcp.close()
        inproc.close()
