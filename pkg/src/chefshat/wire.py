"""Wire protocol for live tables.

One message = one JSON object with exactly three fields:

  {"body": {...}, "protocol_version": 1, "type": "<message type>"}

encoded with the same canonical serialization as the event log (sorted keys,
compact separators, no floats). Over plain TCP a message is one LF-terminated
line; over WebSocket it is one text frame. The WebSocket side here is the
server half of RFC 6455: handshake, client-masked frame parsing with
fragmentation, and ping/pong/close handling. Browsers use their native
WebSocket; non-browser clients can stay on newline-delimited TCP.
"""

from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import dataclass

from .events import canonical_json

PROTOCOL_VERSION = 1

# client -> server
HELLO = "hello"
CREATE_TABLE = "create_table"
JOIN_TABLE = "join_table"
SUBMIT_ACTION = "submit_action"
PING = "ping"
# server -> client
SEAT_ASSIGNED = "seat_assigned"
TABLE_STATE = "table_state"
YOUR_TURN = "your_turn"
ACTION_ACCEPTED = "action_accepted"
ACTION_REJECTED = "action_rejected"
VIEW_UPDATE = "view_update"
EXCHANGE_PROMPT = "exchange_prompt"
SPECIAL_ACTION_PROMPT = "special_action_prompt"
MATCH_ENDED_MSG = "match_ended"
ERROR = "error"
PONG = "pong"

MESSAGE_TYPES = frozenset(
    {
        HELLO,
        CREATE_TABLE,
        JOIN_TABLE,
        SUBMIT_ACTION,
        PING,
        SEAT_ASSIGNED,
        TABLE_STATE,
        YOUR_TURN,
        ACTION_ACCEPTED,
        ACTION_REJECTED,
        VIEW_UPDATE,
        EXCHANGE_PROMPT,
        SPECIAL_ACTION_PROMPT,
        MATCH_ENDED_MSG,
        ERROR,
        PONG,
    }
)

# error codes carried by ERROR / ACTION_REJECTED bodies (engine legality
# rejection codes pass through ACTION_REJECTED unchanged)
E_MALFORMED = "MALFORMED"
E_EXPECTED_HELLO = "EXPECTED_HELLO"
E_UNSUPPORTED_VERSION = "UNSUPPORTED_VERSION"
E_INVALID_CONFIG = "INVALID_CONFIG"
E_UNKNOWN_TABLE = "UNKNOWN_TABLE"
E_TABLE_FULL = "TABLE_FULL"
E_ALREADY_SEATED = "ALREADY_SEATED"
E_NOT_SEATED = "NOT_SEATED"
E_NOT_YOUR_TURN = "NOT_YOUR_TURN"
E_BAD_ACTION = "BAD_ACTION"


class WireError(Exception):
    """A malformed frame or protocol violation from the peer."""


def encode_message(mtype: str, body: dict) -> str:
    """One canonical line, LF-terminated, ready for TCP or a WS text frame."""
    if mtype not in MESSAGE_TYPES:
        raise ValueError(f"unknown message type {mtype!r}")
    return (
        canonical_json({"body": body, "protocol_version": PROTOCOL_VERSION, "type": mtype}) + "\n"
    )


def decode_message(line: str) -> tuple[str, dict, int]:
    """Parse one frame; returns (type, body, protocol_version).

    The version is returned rather than enforced so a server can answer a
    futuristic Hello with UNSUPPORTED_VERSION instead of dropping it.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise WireError(f"frame is not JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise WireError("frame must be a JSON object")
    mtype = obj.get("type")
    body = obj.get("body")
    version = obj.get("protocol_version")
    if mtype not in MESSAGE_TYPES:
        raise WireError(f"unknown message type {mtype!r}")
    if not isinstance(body, dict):
        raise WireError("body must be a JSON object")
    if not isinstance(version, int) or isinstance(version, bool):
        raise WireError("protocol_version must be an integer")
    return mtype, body, version


# ------------------------------------------------------------- HTTP parsing


@dataclass(slots=True)
class HttpRequest:
    method: str
    path: str
    headers: dict[str, str]  # keys lower-cased


def parse_http_request(head: bytes) -> HttpRequest:
    """Parse a request head (everything up to the blank line)."""
    try:
        text = head.decode("latin-1")
    except UnicodeDecodeError as exc:  # pragma: no cover - latin-1 total
        raise WireError(str(exc)) from None
    lines = text.split("\r\n")
    parts = lines[0].split(" ")
    if len(parts) != 3 or not parts[2].startswith("HTTP/"):
        raise WireError(f"bad request line: {lines[0]!r}")
    headers: dict[str, str] = {}
    for line in lines[1:]:
        if not line:
            continue
        name, sep, value = line.partition(":")
        if not sep:
            raise WireError(f"bad header line: {line!r}")
        headers[name.strip().lower()] = value.strip()
    return HttpRequest(method=parts[0], path=parts[1], headers=headers)


# --------------------------------------------------------------- WebSocket

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_CONT = 0x0
OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA

MAX_WS_MESSAGE = 1 << 20


def ws_accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + _WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def is_websocket_upgrade(request: HttpRequest) -> bool:
    connection = request.headers.get("connection", "")
    upgrade = request.headers.get("upgrade", "")
    return (
        request.method == "GET"
        and "upgrade" in {token.strip().lower() for token in connection.split(",")}
        and upgrade.lower() == "websocket"
        and "sec-websocket-key" in request.headers
    )


def ws_handshake_response(request: HttpRequest) -> bytes:
    key = request.headers["sec-websocket-key"]
    return (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {ws_accept_key(key)}\r\n"
        "\r\n"
    ).encode("ascii")


def _ws_frame(opcode: int, payload: bytes) -> bytes:
    """A single unmasked (server-to-client) frame."""
    length = len(payload)
    head = bytearray([0x80 | opcode])
    if length < 126:
        head.append(length)
    elif length < 1 << 16:
        head.append(126)
        head += length.to_bytes(2, "big")
    else:
        head.append(127)
        head += length.to_bytes(8, "big")
    return bytes(head) + payload


def ws_text_frame(text: str) -> bytes:
    return _ws_frame(OP_TEXT, text.encode("utf-8"))


def ws_close_frame(code: int = 1000) -> bytes:
    return _ws_frame(OP_CLOSE, code.to_bytes(2, "big"))


def ws_pong_frame(payload: bytes = b"") -> bytes:
    return _ws_frame(OP_PONG, payload)


class WSParser:
    """Incremental parser for client-to-server frames.

    feed() returns completed messages as (opcode, payload) pairs; text
    fragments are reassembled, control frames surface immediately (they may
    legally interleave a fragmented message). Client frames must be masked.
    """

    def __init__(self) -> None:
        self._buf = bytearray()
        self._fragments: list[bytes] = []
        self._fragment_opcode: int | None = None

    def feed(self, data: bytes) -> list[tuple[int, bytes]]:
        self._buf += data
        out: list[tuple[int, bytes]] = []
        while True:
            frame = self._next_frame()
            if frame is None:
                return out
            fin, opcode, payload = frame
            if opcode in (OP_CLOSE, OP_PING, OP_PONG):
                if not fin:
                    raise WireError("fragmented control frame")
                out.append((opcode, payload))
            elif opcode in (OP_TEXT, OP_BINARY):
                if self._fragment_opcode is not None:
                    raise WireError("new data frame inside a fragmented message")
                if fin:
                    out.append((opcode, payload))
                else:
                    self._fragment_opcode = opcode
                    self._fragments = [payload]
            elif opcode == OP_CONT:
                if self._fragment_opcode is None:
                    raise WireError("continuation frame without a start")
                self._fragments.append(payload)
                if sum(len(p) for p in self._fragments) > MAX_WS_MESSAGE:
                    raise WireError("message too large")
                if fin:
                    out.append((self._fragment_opcode, b"".join(self._fragments)))
                    self._fragment_opcode = None
                    self._fragments = []
            else:
                raise WireError(f"unsupported opcode {opcode:#x}")

    def _next_frame(self) -> tuple[bool, int, bytes] | None:
        buf = self._buf
        if len(buf) < 2:
            return None
        b0, b1 = buf[0], buf[1]
        if b0 & 0x70:
            raise WireError("reserved bits set")
        fin = bool(b0 & 0x80)
        opcode = b0 & 0x0F
        masked = bool(b1 & 0x80)
        if not masked:
            raise WireError("client frames must be masked")
        length = b1 & 0x7F
        offset = 2
        if length == 126:
            if len(buf) < offset + 2:
                return None
            length = int.from_bytes(buf[offset : offset + 2], "big")
            offset += 2
        elif length == 127:
            if len(buf) < offset + 8:
                return None
            length = int.from_bytes(buf[offset : offset + 8], "big")
            offset += 8
        if length > MAX_WS_MESSAGE:
            raise WireError("frame too large")
        if len(buf) < offset + 4 + length:
            return None
        mask = buf[offset : offset + 4]
        offset += 4
        raw = buf[offset : offset + length]
        del self._buf[: offset + length]
        payload = bytes(b ^ mask[i & 3] for i, b in enumerate(raw))
        return fin, opcode, payload


def mask_client_frame(opcode: int, payload: bytes, mask: bytes = b"\x00\x00\x00\x00") -> bytes:
    """A masked client-to-server frame; for test clients (browsers mask
    natively). A zero mask is valid per RFC 6455 and keeps tests readable."""
    if len(mask) != 4:
        raise ValueError("mask must be 4 bytes")
    length = len(payload)
    head = bytearray([0x80 | opcode])
    if length < 126:
        head.append(0x80 | length)
    elif length < 1 << 16:
        head.append(0x80 | 126)
        head += length.to_bytes(2, "big")
    else:
        head.append(0x80 | 127)
        head += length.to_bytes(8, "big")
    head += mask
    return bytes(head) + bytes(b ^ mask[i & 3] for i, b in enumerate(payload))
