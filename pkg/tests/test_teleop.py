import asyncio
import json
import math
import socket
import struct
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carebot.spatial import Twist
from carebot.teleop import (
    ArmToggle,
    CommandQueue,
    FreeShoulder,
    GripperCmd,
    HapticState,
    HeadToggle,
    Heartbeat,
    ModeSwitch,
    ProtocolError,
    SessionState,
    StickLimits,
    TeleopServer,
    VelocityCmd,
    decode_command,
    decode_feedback,
    encode_command,
    encode_feedback,
    gripper_from_trigger,
    haptic_from_wrench,
    velocity_from_sticks,
)
from carebot.teleop.protocol import HapticPulse, StatusIcons, frame_message, unframe_messages
from carebot.teleop.mapping import GripperRateLimiter


def command_strategy():
    side = st.sampled_from(["left", "right"])
    finite = st.floats(-10, 10, allow_nan=False)
    return st.one_of(
        st.builds(VelocityCmd, vx=finite, vy=finite, wz=finite),
        st.just(HeadToggle()),
        st.builds(ArmToggle, side=side),
        st.builds(GripperCmd, side=side, pressure=st.floats(-1, 3, allow_nan=False)),
        st.builds(FreeShoulder, side=side),
        st.builds(ModeSwitch, target=st.sampled_from(["autonomous", "teleop", "multicontact"])),
        st.builds(Heartbeat, t=st.floats(0, 1e6, allow_nan=False)),
    )


class TestProtocol:
    def test_velocity_roundtrip(self):
        cmd = VelocityCmd(0.1, 0.0, 0.0)
        assert decode_command(encode_command(cmd)) == cmd

    def test_pressure_clamped(self):
        cmd = decode_command(b'{"type":"gripper","side":"left","pressure":1.7}')
        assert cmd.pressure == 1.0

    def test_truncated_payload_rejected(self):
        with pytest.raises(ProtocolError):
            decode_command(b'{"type":"velocity","vx":0.1')

    def test_unknown_variant_rejected(self):
        with pytest.raises(ProtocolError):
            decode_command(b'{"type":"self_destruct"}')

    def test_unknown_fields_ignored(self):
        cmd = decode_command(b'{"type":"head_toggle","extra":"stuff"}')
        assert cmd == HeadToggle()

    def test_oversize_rejected(self):
        blob = json.dumps({"type": "mode_switch", "target": "x" * 2000}).encode()
        with pytest.raises(ProtocolError):
            decode_command(blob)

    @given(command_strategy())
    @settings(max_examples=300, deadline=None)
    def test_roundtrip_property(self, cmd):
        assert decode_command(encode_command(cmd)) == cmd

    def test_feedback_roundtrip(self):
        for evt in (HapticPulse("left", 0.5), StatusIcons(True, False, True)):
            assert decode_feedback(encode_feedback(evt)) == evt

    def test_stream_framing(self):
        buf = bytearray()
        blobs = [encode_command(VelocityCmd(0.1, 0, 0)), encode_command(HeadToggle())]
        for b in blobs:
            buf.extend(frame_message(b))
        # deliver in awkward chunks
        out = []
        partial = bytearray()
        data = bytes(buf)
        for i in range(0, len(data), 7):
            partial.extend(data[i:i + 7])
            out.extend(unframe_messages(partial))
        assert out == blobs


class TestMappings:
    limits = StickLimits(0.25, 0.10, 0.30)

    def test_centered_sticks_zero(self):
        tw = velocity_from_sticks((0.0, 0.0), 0.0, self.limits)
        assert tw.is_zero()

    def test_full_forward(self):
        tw = velocity_from_sticks((0.0, 1.0), 0.0, self.limits)
        assert tw.vx == pytest.approx(0.25)
        assert tw.vy == 0.0 and tw.wz == 0.0

    def test_arc_combination(self):
        tw = velocity_from_sticks((0.0, 1.0), 1.0, self.limits)
        assert tw.vx == pytest.approx(0.25)
        assert tw.wz == pytest.approx(-0.30)

    def test_deadzone(self):
        tw = velocity_from_sticks((0.05, 0.05), 0.05, self.limits)
        assert tw.is_zero()

    def test_gripper_endpoints_and_monotonicity(self):
        assert gripper_from_trigger(0.0) == 0.0
        assert gripper_from_trigger(1.0) == 1.0
        samples = np.linspace(0, 1, 101)
        outs = [gripper_from_trigger(p) for p in samples]
        assert all(b >= a for a, b in zip(outs, outs[1:]))

    def test_gripper_rate_cap(self):
        lim = GripperRateLimiter(max_rate=2.0)
        out = lim.update(1.0, 0.1)
        assert out == pytest.approx(0.2)

    def test_haptic_zero_force_no_event(self):
        state = HapticState()
        assert haptic_from_wrench(state, (0.0, 0.0, 0.0), "left") is None

    def test_haptic_linear_intensity(self):
        state = HapticState(threshold=2.0, scale=20.0)
        evt = haptic_from_wrench(state, (12.0, 0.0, 0.0), "left")
        assert evt.intensity == pytest.approx(0.5)

    def test_haptic_hysteresis_prevents_chatter(self):
        state = HapticState(threshold=2.0, scale=20.0, hysteresis=0.5)
        events = 0
        for k in range(100):
            f = 2.0 + (0.1 if k % 2 == 0 else -0.1)
            if haptic_from_wrench(state, (f, 0.0, 0.0), "left"):
                events += 1
        assert events <= 1


class TestSession:
    def test_watchdog_zeroes_velocity(self):
        s = SessionState()
        s.apply(VelocityCmd(0.2, 0, 0), now=0.0)
        assert s.effective_twist(0.5) == Twist(0.2, 0, 0)
        assert s.effective_twist(1.1).is_zero()

    def test_heartbeat_does_not_feed_watchdog(self):
        s = SessionState()
        s.apply(VelocityCmd(0.2, 0, 0), now=0.0)
        s.apply(Heartbeat(t=1.0), now=1.0)
        assert s.effective_twist(1.5).is_zero()

    def test_rate_limit(self):
        s = SessionState()
        dropped = sum(1 for _ in range(150) if s.rate_limited(now=0.5))
        assert dropped == 50
        assert s.dropped_commands == 50

    def test_queue_order_and_mode_switch_preserved(self):
        q = CommandQueue(maxlen=4)
        for i in range(10):
            q.push(VelocityCmd(i * 0.01, 0, 0))
        q.push(ModeSwitch("teleop"))
        out = q.drain()
        assert out[0] == ModeSwitch("teleop")
        vels = [c for c in out if isinstance(c, VelocityCmd)]
        assert len(vels) == 4  # oldest dropped
        assert vels[-1].vx == pytest.approx(0.09)


def _recv_frames(sock, n, timeout=3.0):
    """Read n length-prefixed messages from a raw socket."""
    sock.settimeout(timeout)
    buf = b""
    out = []
    while len(out) < n:
        buf += sock.recv(4096)
        while len(buf) >= 4:
            (ln,) = struct.unpack(">I", buf[:4])
            if len(buf) < 4 + ln:
                break
            out.append(buf[4:4 + ln])
            buf = buf[4 + ln:]
    return out


class TestServer:
    def test_raw_socket_session(self):
        server = TeleopServer(port=0)
        server.start()
        try:
            with socket.create_connection(("127.0.0.1", server.port), timeout=3) as sock:
                blob = encode_command(VelocityCmd(0.1, 0.0, 0.0))
                sock.sendall(frame_message(blob))
                deadline = time.time() + 2.0
                cmds = []
                while time.time() < deadline and not cmds:
                    cmds = server.drain_commands()
                    time.sleep(0.01)
                assert cmds and cmds[0] == VelocityCmd(0.1, 0.0, 0.0)
                # heartbeats arrive without asking
                frames = _recv_frames(sock, 1)
                evt = decode_feedback(frames[0])
                assert evt.type in ("heartbeat", "fault")
                # broadcast reaches the client
                server.broadcast(StatusIcons(True, False, False))
                found = False
                for _ in range(10):
                    for f in _recv_frames(sock, 1):
                        if decode_feedback(f).type == "status":
                            found = True
                    if found:
                        break
                assert found
        finally:
            server.stop()

    def test_second_connection_refused(self):
        server = TeleopServer(port=0)
        server.start()
        try:
            with socket.create_connection(("127.0.0.1", server.port), timeout=3) as first:
                first.sendall(frame_message(encode_command(Heartbeat(t=0.0))))
                time.sleep(0.1)
                with socket.create_connection(("127.0.0.1", server.port), timeout=3) as second:
                    second.sendall(frame_message(encode_command(Heartbeat(t=0.0))))
                    frames = _recv_frames(second, 1)
                    evt = decode_feedback(frames[0])
                    assert evt.type == "fault" and "busy" in evt.text
        finally:
            server.stop()

    def test_malformed_keeps_session_alive(self):
        server = TeleopServer(port=0)
        server.start()
        try:
            with socket.create_connection(("127.0.0.1", server.port), timeout=3) as sock:
                sock.sendall(frame_message(b'{"type":"junk"}'))
                frames = _recv_frames(sock, 1)
                assert decode_feedback(frames[0]).type in ("fault", "heartbeat")
                # still alive: a valid command goes through
                sock.sendall(frame_message(encode_command(HeadToggle())))
                deadline = time.time() + 2.0
                got = []
                while time.time() < deadline and not got:
                    got = server.drain_commands()
                    time.sleep(0.01)
                assert any(c == HeadToggle() for c in got)
        finally:
            server.stop()

    def test_websocket_handshake_and_roundtrip(self):
        server = TeleopServer(port=0)
        server.start()
        try:
            asyncio.run(self._ws_session(server.port, server))
        finally:
            server.stop()

    async def _ws_session(self, port, server):
        reader, writer = await asyncio.open_connection("127.0.0.1", port)
        key = "dGhlIHNhbXBsZSBub25jZQ=="
        writer.write((f"GET / HTTP/1.1\r\nHost: x\r\nUpgrade: websocket\r\n"
                      f"Connection: Upgrade\r\nSec-WebSocket-Key: {key}\r\n"
                      f"Sec-WebSocket-Version: 13\r\n\r\n").encode())
        await writer.drain()
        response = await reader.readuntil(b"\r\n\r\n")
        assert b"101" in response.split(b"\r\n")[0]
        assert b"s3pPLMBiTxaQ9kYGzzhZRbK+xOo=" in response  # RFC 6455 sample accept
        # send a masked text frame with a velocity command
        payload = encode_command(VelocityCmd(0.05, 0.0, 0.1))
        mask = b"\x01\x02\x03\x04"
        masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        frame = bytes([0x81, 0x80 | len(payload)]) + mask + masked
        writer.write(frame)
        await writer.drain()
        for _ in range(100):
            cmds = server.drain_commands()
            if cmds:
                assert cmds[0] == VelocityCmd(0.05, 0.0, 0.1)
                break
            await asyncio.sleep(0.01)
        else:
            raise AssertionError("command never arrived over websocket")
        # server-side frames decode as feedback documents
        head = await reader.readexactly(2)
        length = head[1] & 0x7F
        if length == 126:
            (length,) = struct.unpack(">H", await reader.readexactly(2))
        payload = await reader.readexactly(length)
        evt = decode_feedback(payload)
        assert evt.type in ("heartbeat", "status", "fault", "telemetry")
        writer.close()
