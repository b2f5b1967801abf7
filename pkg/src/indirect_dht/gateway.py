"""Line-oriented TCP gateway in front of a :class:`MemoryStore`, and its client.

Requests and responses are single ASCII lines ending in ``\\n``::

    PUT <40-hex key> <ttl seconds> <base64 value>   ->  OK
    GET <40-hex key>                                ->  VALUES <k>
                                                        then k lines "<remaining ttl> <base64 value>"
    anything else                                   ->  ERR <code> <message>

Codes are 400 (malformed), 413 (oversize) and 500 (internal). Errors never
close the connection. One request is in flight per connection; clients get
concurrency by opening several.
"""

from __future__ import annotations

import base64
import binascii
import logging
import math
import queue
import socket
import socketserver
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field

from indirect_dht.dht import DEFAULT_TTL, DEFAULT_WINDOW, MAX_VALUE_OCTETS, DhtBackend, MemoryStore, check_put
from indirect_dht.entries import HostAddress
from indirect_dht.errors import (
    BackendUnreachableError,
    BatchPutError,
    GatewayProtocolError,
    IdentifierDecodeError,
    ValueTooLargeError,
)
from indirect_dht.identifiers import Identifier, decode_hex

logger = logging.getLogger(__name__)

DEFAULT_REQUEST_LIMIT = 4096


class _RequestError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def format_ttl(seconds: float) -> str:
    return f"{seconds:.3f}"


@dataclass
class GatewayConfig:
    listen: HostAddress | None = None  # None: loopback, ephemeral port
    store: DhtBackend = field(default_factory=MemoryStore)
    max_connections: int = 128
    request_limit: int = DEFAULT_REQUEST_LIMIT

    def __post_init__(self):
        if self.max_connections < 1 or self.request_limit < 1:
            raise ValueError("gateway limits must be positive")


def handle_request(store: DhtBackend, line: bytes) -> bytes:
    """Process one request line (without the newline) and return the full response."""
    try:
        try:
            text = line.decode("ascii")
        except UnicodeDecodeError:
            raise _RequestError(400, "request is not ASCII") from None
        parts = text.split(" ")
        verb = parts[0]
        if verb == "PUT":
            if len(parts) != 4:
                raise _RequestError(400, "usage: PUT <key> <ttl> <base64-value>")
            key = _parse_key(parts[1])
            try:
                ttl = float(parts[2])
            except ValueError:
                raise _RequestError(400, f"bad ttl {parts[2]!r}") from None
            if not (ttl > 0 and math.isfinite(ttl)):
                raise _RequestError(400, "ttl must be positive")
            try:
                value = base64.b64decode(parts[3], validate=True)
            except binascii.Error:
                raise _RequestError(400, "value is not valid base64") from None
            try:
                store.put(key, value, ttl)
            except ValueTooLargeError as exc:
                raise _RequestError(413, str(exc)) from None
            return b"OK\n"
        if verb == "GET":
            if len(parts) != 2:
                raise _RequestError(400, "usage: GET <key>")
            records = store.get(_parse_key(parts[1]))
            out = [f"VALUES {len(records)}\n"]
            for value, remaining in records:
                out.append(f"{format_ttl(remaining)} {base64.b64encode(value).decode('ascii')}\n")
            return "".join(out).encode("ascii")
        raise _RequestError(400, f"unknown verb {verb[:16]!r}")
    except _RequestError as exc:
        return f"ERR {exc.code} {exc}\n".encode("ascii", "replace")
    except Exception as exc:  # keep the connection alive whatever the store does
        logger.exception("internal error handling request")
        return f"ERR 500 {type(exc).__name__}\n".encode("ascii")


def _parse_key(text: str) -> Identifier:
    try:
        return decode_hex(text)
    except IdentifierDecodeError as exc:
        raise _RequestError(400, str(exc)) from None


class _Handler(socketserver.StreamRequestHandler):
    server: "_TCPServer"

    def handle(self):
        srv = self.server
        with srv.slots:
            srv.track(self.connection, True)
            try:
                self._serve_lines()
            except OSError:
                pass
            finally:
                srv.track(self.connection, False)

    def _serve_lines(self):
        limit = self.server.config.request_limit
        while True:
            line = self.rfile.readline(limit + 1)
            if not line:
                return
            if not line.endswith(b"\n"):
                if len(line) <= limit:
                    return  # peer closed mid-line
                while line and not line.endswith(b"\n"):
                    line = self.rfile.readline(limit + 1)
                self.wfile.write(f"ERR 413 request exceeds {limit} octets\n".encode("ascii"))
                continue
            self.wfile.write(handle_request(self.server.config.store, line.rstrip(b"\r\n")))


class _TCPServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    block_on_close = False
    allow_reuse_address = True
    request_queue_size = 256

    def __init__(self, config: GatewayConfig):
        self.config = config
        self.slots = threading.BoundedSemaphore(config.max_connections)
        self._conns: set[socket.socket] = set()
        self._conns_lock = threading.Lock()
        listen = ("127.0.0.1", 0) if config.listen is None else (config.listen.host, config.listen.port)
        super().__init__(listen, _Handler)

    def track(self, conn: socket.socket, alive: bool) -> None:
        with self._conns_lock:
            if alive:
                self._conns.add(conn)
            else:
                self._conns.discard(conn)

    def drop_connections(self) -> None:
        with self._conns_lock:
            conns = list(self._conns)
        for conn in conns:
            try:
                conn.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass


class GatewayServer:
    """Threaded gateway; use :meth:`start`/:meth:`stop` or :meth:`serve_forever`."""

    def __init__(self, config: GatewayConfig | None = None):
        self.config = config or GatewayConfig()
        self._server = _TCPServer(self.config)
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> HostAddress:
        host, port = self._server.server_address[:2]
        return HostAddress(host, port)

    @property
    def store(self) -> DhtBackend:
        return self.config.store

    def serve_forever(self) -> None:
        logger.info("gateway listening on %s", self.address)
        try:
            self._server.serve_forever(poll_interval=0.1)
        finally:
            self._server.server_close()

    def start(self) -> GatewayServer:
        self._thread = threading.Thread(target=self._server.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        """Stop accepting, close the listener and cut every open connection."""
        self._server.shutdown()
        self._server.server_close()
        self._server.drop_connections()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def serve(config: GatewayConfig) -> None:
    """Run a gateway in the foreground until interrupted."""
    server = GatewayServer(config)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        logger.info("gateway shutting down")


class _Connection:
    def __init__(self, address: HostAddress, timeout: float):
        self.sock = socket.create_connection((address.host, address.port), timeout=timeout)
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.rfile = self.sock.makefile("rb")

    def request(self, line: bytes) -> list[bytes]:
        self.sock.sendall(line)
        head = self._readline()
        if head.startswith(b"VALUES "):
            return [head] + [self._readline() for _ in range(int(head[7:]))]
        return [head]

    def _readline(self) -> bytes:
        line = self.rfile.readline()
        if not line.endswith(b"\n"):
            raise ConnectionError("gateway closed the connection")
        return line[:-1]

    def close(self):
        try:
            self.rfile.close()
            self.sock.close()
        except OSError:
            pass


class GatewayClient(DhtBackend):
    """:class:`DhtBackend` speaking the gateway protocol.

    Connections are pooled; :meth:`batch_put` keeps up to ``window`` puts in
    flight on separate connections.
    """

    def __init__(self, address: HostAddress, window: int = DEFAULT_WINDOW, timeout: float = 10.0):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.address = address
        self.window = window
        self.timeout = timeout
        self._pool: queue.LifoQueue[_Connection] = queue.LifoQueue()

    def now(self) -> float:
        return time.monotonic() * 1000.0

    def _roundtrip(self, line: bytes) -> list[bytes]:
        try:
            conn = self._pool.get_nowait()
        except queue.Empty:
            conn = None
        try:
            if conn is None:
                conn = _Connection(self.address, self.timeout)
            reply = conn.request(line)
        except (OSError, ValueError) as exc:
            if conn is not None:
                conn.close()
            raise BackendUnreachableError(f"gateway {self.address}: {exc}") from exc
        self._pool.put(conn)
        if reply[0].startswith(b"ERR "):
            _, code, msg = (reply[0].decode("ascii", "replace") + " ").split(" ", 2)
            if code == "413":
                raise ValueTooLargeError(msg.strip())
            raise GatewayProtocolError(int(code), msg.strip())
        return reply

    def put(self, key, value, ttl=DEFAULT_TTL):
        check_put(value, ttl)
        line = f"PUT {key.hex()} {ttl!r} {base64.b64encode(value).decode('ascii')}\n"
        reply = self._roundtrip(line.encode("ascii"))
        if reply[0] != b"OK":
            raise GatewayProtocolError(500, f"unexpected reply {reply[0][:40]!r}")

    def get(self, key):
        reply = self._roundtrip(f"GET {key.hex()}\n".encode("ascii"))
        out = []
        for row in reply[1:]:
            ttl, _, b64 = row.partition(b" ")
            out.append((base64.b64decode(b64, validate=True), float(ttl)))
        return out

    def batch_put(self, ops, window=None):
        window = self.window if window is None else window
        if window < 1:
            raise ValueError("window must be >= 1")
        start = self.now()
        completed: list[int] = []
        failure: BaseException | None = None
        with ThreadPoolExecutor(max_workers=min(window, max(1, len(ops)))) as pool:
            futures = {pool.submit(self.put, *op): i for i, op in enumerate(ops)}
            for fut in as_completed(futures):
                if fut.cancelled():
                    continue
                exc = fut.exception()
                if exc is None:
                    completed.append(futures[fut])
                elif failure is None:
                    failure = exc
                    for other in futures:
                        other.cancel()
        if failure is not None:
            raise BatchPutError(completed, len(ops), failure) from failure
        return self.now() - start

    def close(self) -> None:
        while True:
            try:
                self._pool.get_nowait().close()
            except queue.Empty:
                return

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def gateway_client_connect(address: HostAddress, window: int = DEFAULT_WINDOW) -> GatewayClient:
    """Return a client after checking that the gateway answers."""
    client = GatewayClient(address, window)
    client.get(Identifier(bytes(20)))
    return client
