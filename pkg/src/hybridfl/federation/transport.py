"""In-process and TCP transports with identical framing semantics.

Both move length-prefixed byte frames (4-byte big-endian length, then
the UTF-8 JSON envelope). The in-process transport is a loopback through
the same codec, sequential in party order, hence fully deterministic.
The socket transport authenticates parties with a pre-shared token at
connect time; parties dial the aggregator and then serve queries.
"""

from __future__ import annotations

import socket
import struct
from concurrent.futures import ThreadPoolExecutor

MAX_FRAME_BYTES = 1 << 30


class TransportError(Exception):
    pass


class ConnectionLostError(TransportError):
    """Peer went away mid-conversation."""


class RoundTimeoutError(TransportError):
    """A party did not answer within the round deadline."""


class HandshakeError(TransportError):
    """Bad token or malformed hello."""


def send_frame(sock: socket.socket, payload: bytes) -> None:
    sock.sendall(struct.pack(">I", len(payload)) + payload)


def recv_frame(sock: socket.socket) -> bytes:
    header = _recv_exact(sock, 4)
    (length,) = struct.unpack(">I", header)
    if length > MAX_FRAME_BYTES:
        raise TransportError(f"frame of {length} bytes exceeds limit")
    return _recv_exact(sock, length)


def _recv_exact(sock: socket.socket, count: int) -> bytes:
    chunks = []
    remaining = count
    while remaining:
        try:
            chunk = sock.recv(min(remaining, 1 << 20))
        except socket.timeout as exc:
            raise RoundTimeoutError("receive timed out") from exc
        except OSError as exc:
            raise ConnectionLostError(str(exc)) from exc
        if not chunk:
            raise ConnectionLostError("peer closed the connection")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


class InProcChannel:
    """Direct call into a party living in the same process."""

    parallel_requests = False

    def __init__(self, party) -> None:
        self.party = party
        self.party_index = party.index

    def request(self, frame: bytes, timeout: float | None = None) -> bytes:
        return self.party.handle_frame(frame)

    def close(self) -> None:
        pass


def in_proc_transport(parties) -> list[InProcChannel]:
    return [InProcChannel(p) for p in parties]


class SocketChannel:
    """Aggregator-side handle on one connected party."""

    parallel_requests = True

    def __init__(self, sock: socket.socket, party_index: int) -> None:
        self.sock = sock
        self.party_index = party_index

    def request(self, frame: bytes, timeout: float | None = None) -> bytes:
        self.sock.settimeout(timeout)
        try:
            send_frame(self.sock, frame)
        except OSError as exc:
            raise ConnectionLostError(str(exc)) from exc
        return recv_frame(self.sock)

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


class AggregatorListener:
    """Accepts party connections and performs the token handshake."""

    def __init__(self, address: tuple[str, int], token: str) -> None:
        self.token = token
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self.sock.bind(address)
        self.sock.listen()
        self.address = self.sock.getsockname()

    def accept_parties(
        self, n_parties: int, timeout: float | None = None
    ) -> list[SocketChannel]:
        """Block until all expected parties have said hello."""
        import json

        channels: dict[int, SocketChannel] = {}
        self.sock.settimeout(timeout)
        while len(channels) < n_parties:
            try:
                conn, _ = self.sock.accept()
            except socket.timeout as exc:
                raise RoundTimeoutError("not all parties connected") from exc
            hello = json.loads(recv_frame(conn).decode("utf-8"))
            if hello.get("kind") != "hello" or hello.get("token") != self.token:
                send_frame(conn, b'{"kind":"reject"}')
                conn.close()
                raise HandshakeError("party presented a bad token")
            index = int(hello["party_index"])
            if index in channels or not 1 <= index <= n_parties:
                conn.close()
                raise HandshakeError(f"bad party index {index}")
            send_frame(conn, b'{"kind":"welcome"}')
            channels[index] = SocketChannel(conn, index)
        return [channels[i] for i in sorted(channels)]

    def close(self) -> None:
        self.sock.close()


def run_party_client(address: tuple[str, int], token: str, party) -> None:
    """Connect to the aggregator and serve queries until it hangs up."""
    import json

    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.connect(address)
    hello = json.dumps(
        {"kind": "hello", "token": token, "party_index": party.index}
    ).encode("utf-8")
    send_frame(sock, hello)
    welcome = json.loads(recv_frame(sock).decode("utf-8"))
    if welcome.get("kind") != "welcome":
        sock.close()
        raise HandshakeError("aggregator rejected the handshake")
    try:
        while True:
            try:
                frame = recv_frame(sock)
            except ConnectionLostError:
                return  # session over
            send_frame(sock, party.handle_frame(frame))
    finally:
        sock.close()


def request_all(
    channels, frames, timeout: float | None = None
) -> list[bytes | Exception]:
    """Issue one request per channel; exceptions are returned in place.

    Channels that support it are driven concurrently (the aggregator
    queries parties asynchronously); in-process channels run
    sequentially in party order for determinism.
    """
    if isinstance(frames, bytes):
        frames = [frames] * len(channels)

    def one(channel, frame):
        try:
            return channel.request(frame, timeout)
        except Exception as exc:  # noqa: BLE001 - surfaced to the round
            return exc

    if any(getattr(c, "parallel_requests", False) for c in channels):
        with ThreadPoolExecutor(max_workers=max(1, len(channels))) as pool:
            return list(pool.map(one, channels, frames))
    return [one(c, f) for c, f in zip(channels, frames)]
