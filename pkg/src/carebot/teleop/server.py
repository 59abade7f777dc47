"""Teleoperation endpoint: one port, two framings.

A connecting client either speaks the native length-prefixed JSON stream or
opens with an HTTP upgrade, in which case the same JSON documents travel in
WebSocket text frames (that is what the browser console uses). One operator
session at a time; a second connection is refused. Heartbeats flow both
ways every 250 ms.

The server runs its own event loop in a background thread; the control loop
reads commands from a thread-safe queue and publishes feedback through
`broadcast`, so the control tick never blocks on the network.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib
import struct
import threading
import time
from typing import Callable, Optional

from .protocol import (
    MAX_MESSAGE_BYTES,
    Heartbeat,
    ProtocolError,
    decode_command,
    encode_feedback,
    frame_message,
    unframe_messages,
)
from .session import CommandQueue, SessionState

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
HEARTBEAT_PERIOD = 0.25


def _ws_accept(key: str) -> str:
    digest = hashlib.sha1((key + WS_GUID).encode()).digest()
    return base64.b64encode(digest).decode()


def ws_encode_frame(payload: bytes, opcode: int = 0x1) -> bytes:
    header = bytes([0x80 | opcode])
    n = len(payload)
    if n < 126:
        header += bytes([n])
    elif n < 65536:
        header += bytes([126]) + struct.pack(">H", n)
    else:
        header += bytes([127]) + struct.pack(">Q", n)
    return header + payload


async def ws_read_frame(reader: asyncio.StreamReader) -> tuple[int, bytes]:
    """(opcode, payload); raises on EOF. Client frames must be masked."""
    head = await reader.readexactly(2)
    opcode = head[0] & 0x0F
    masked = bool(head[1] & 0x80)
    length = head[1] & 0x7F
    if length == 126:
        (length,) = struct.unpack(">H", await reader.readexactly(2))
    elif length == 127:
        (length,) = struct.unpack(">Q", await reader.readexactly(8))
    if length > 4 * MAX_MESSAGE_BYTES:
        raise ProtocolError(f"websocket frame too large: {length}")
    mask = await reader.readexactly(4) if masked else b"\x00" * 4
    payload = bytearray(await reader.readexactly(length))
    if masked:
        for i in range(len(payload)):
            payload[i] ^= mask[i % 4]
    return opcode, bytes(payload)


class TeleopServer:
    def __init__(self, port: int = 8765, host: str = "127.0.0.1",
                 clock: Callable[[], float] = time.monotonic,
                 on_command: Optional[Callable] = None):
        self.host = host
        self.port = port
        self.clock = clock
        self.on_command = on_command
        self.queue = CommandQueue()
        self.session: Optional[SessionState] = None
        self._outbox: Optional[asyncio.Queue] = None
        self._loop: Optional[asyncio.AbstractEventLoop] = None
        self._thread: Optional[threading.Thread] = None
        self._server = None
        self._started = threading.Event()
        self._lock = threading.Lock()

    # -- lifecycle ---------------------------------------------------------
    def start(self) -> None:
        self._thread = threading.Thread(target=self._run, daemon=True,
                                        name="teleop-server")
        self._thread.start()
        if not self._started.wait(5.0):
            raise RuntimeError("teleop server failed to start")

    def _run(self) -> None:
        self._loop = asyncio.new_event_loop()
        asyncio.set_event_loop(self._loop)
        try:
            self._loop.run_until_complete(self._serve())
        except asyncio.CancelledError:
            pass
        finally:
            self._loop.close()

    async def _serve(self) -> None:
        self._server = await asyncio.start_server(self._handle, self.host, self.port)
        if self.port == 0:
            self.port = self._server.sockets[0].getsockname()[1]
        self._started.set()
        try:
            async with self._server:
                await self._server.serve_forever()
        except asyncio.CancelledError:
            pass

    def stop(self) -> None:
        if self._loop is None:
            return
        def _shutdown():
            for task in asyncio.all_tasks(self._loop):
                task.cancel()
        self._loop.call_soon_threadsafe(_shutdown)
        self._thread.join(timeout=5.0)
        self._loop = None

    # -- control-loop facing API -------------------------------------------
    def drain_commands(self) -> list:
        return self.queue.drain()

    def broadcast(self, event) -> None:
        """Queue a feedback event to the operator; safe from any thread."""
        if self._loop is None or self._outbox is None:
            return
        blob = encode_feedback(event)
        def _put():
            if self._outbox is not None:
                self._outbox.put_nowait(blob)
        self._loop.call_soon_threadsafe(_put)

    # -- connection handling -------------------------------------------------
    async def _handle(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        try:
            first = await reader.readexactly(4)
        except (asyncio.IncompleteReadError, ConnectionError):
            writer.close()
            return
        try:
            if first == b"GET ":
                await self._handle_websocket(reader, writer, first)
            else:
                await self._handle_raw(reader, writer, first)
        except (asyncio.IncompleteReadError, ConnectionError, ProtocolError,
                asyncio.CancelledError):
            pass
        finally:
            with self._lock:
                if self.session is not None and getattr(writer, "_carebot_session", False):
                    self.session = None
                    self._outbox = None
            try:
                writer.close()
            except Exception:
                pass

    def _try_claim(self, writer, peer: str) -> bool:
        with self._lock:
            if self.session is not None:
                return False
            self.session = SessionState(connection_id=peer,
                                        last_command_time=self.clock())
            self._outbox = asyncio.Queue()
            writer._carebot_session = True
            return True

    async def _handle_raw(self, reader, writer, first: bytes):
        peer = str(writer.get_extra_info("peername"))
        if not self._try_claim(writer, peer):
            writer.write(frame_message(encode_feedback(
                _fault("session busy: another operator is connected"))))
            await writer.drain()
            return
        buffer = bytearray(first)
        sender = asyncio.ensure_future(self._send_loop(writer, websocket=False))
        try:
            while True:
                for payload in unframe_messages(buffer):
                    self._ingest(payload, writer, websocket=False)
                chunk = await reader.read(4096)
                if not chunk:
                    break
                buffer.extend(chunk)
        finally:
            sender.cancel()

    async def _handle_websocket(self, reader, writer, first: bytes):
        request = first + await reader.readuntil(b"\r\n\r\n")
        headers = {}
        for line in request.decode("latin-1").split("\r\n")[1:]:
            if ":" in line:
                k, v = line.split(":", 1)
                headers[k.strip().lower()] = v.strip()
        key = headers.get("sec-websocket-key")
        if key is None:
            writer.write(b"HTTP/1.1 400 Bad Request\r\n\r\n")
            await writer.drain()
            return
        peer = str(writer.get_extra_info("peername"))
        if not self._try_claim(writer, peer):
            writer.write(b"HTTP/1.1 503 Service Unavailable\r\n"
                         b"Content-Length: 0\r\n\r\n")
            await writer.drain()
            return
        writer.write(
            b"HTTP/1.1 101 Switching Protocols\r\n"
            b"Upgrade: websocket\r\nConnection: Upgrade\r\n"
            b"Sec-WebSocket-Accept: " + _ws_accept(key).encode() + b"\r\n\r\n")
        await writer.drain()
        sender = asyncio.ensure_future(self._send_loop(writer, websocket=True))
        try:
            while True:
                opcode, payload = await ws_read_frame(reader)
                if opcode == 0x8:  # close
                    writer.write(ws_encode_frame(b"", opcode=0x8))
                    await writer.drain()
                    break
                if opcode == 0x9:  # ping
                    writer.write(ws_encode_frame(payload, opcode=0xA))
                    await writer.drain()
                    continue
                if opcode in (0x1, 0x2):
                    self._ingest(payload, writer, websocket=True)
        finally:
            sender.cancel()

    def _ingest(self, payload: bytes, writer, websocket: bool) -> None:
        now = self.clock()
        try:
            cmd = decode_command(payload)
        except ProtocolError as exc:
            # malformed input answers with an error and keeps the session
            blob = encode_feedback(_fault(f"bad command: {exc}"))
            self._send_now(writer, blob, websocket)
            return
        session = self.session
        if session is None:
            return
        if not isinstance(cmd, Heartbeat) and session.rate_limited(now):
            return
        session.apply(cmd, now)
        self.queue.push(cmd)
        if self.on_command is not None:
            self.on_command(cmd, now)

    def _send_now(self, writer, blob: bytes, websocket: bool) -> None:
        writer.write(ws_encode_frame(blob) if websocket else frame_message(blob))

    async def _send_loop(self, writer, websocket: bool) -> None:
        outbox = self._outbox
        try:
            while True:
                try:
                    blob = await asyncio.wait_for(outbox.get(), timeout=HEARTBEAT_PERIOD)
                except asyncio.TimeoutError:
                    blob = encode_feedback(Heartbeat(t=self.clock()))
                self._send_now(writer, blob, websocket)
                await writer.drain()
        except (ConnectionError, asyncio.CancelledError):
            pass


def _fault(text: str):
    from .protocol import Fault

    return Fault(text)
