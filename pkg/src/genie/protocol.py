"""Wire protocol: one JSON object per WebSocket text frame, no newlines.

Client -> server types: init, press, release, lookahead, reset,
set_temperature. Server -> client types: ready, note_on, note_off,
lookahead_result, error. Every client message gets at least one response;
`ready` doubles as the generic acknowledgement.
"""

from __future__ import annotations

import json

CLIENT_TYPES = frozenset({"init", "press", "release", "lookahead", "reset",
                          "set_temperature"})
SERVER_TYPES = frozenset({"ready", "note_on", "note_off", "lookahead_result",
                          "error"})


class ProtocolError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def parse_client_message(raw: str) -> dict:
    """Validate one frame; raises ProtocolError with a stable error code."""
    try:
        msg = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ProtocolError("bad_message", f"not valid JSON: {e}") from e
    if not isinstance(msg, dict):
        raise ProtocolError("bad_message", "message must be a JSON object")
    mtype = msg.get("type")
    if mtype not in CLIENT_TYPES:
        raise ProtocolError("unknown_type", f"unknown message type {mtype!r}")
    if mtype in ("press", "release"):
        button = msg.get("button")
        if not isinstance(button, int) or isinstance(button, bool) or not 0 <= button < 8:
            raise ProtocolError("bad_button", f"button must be an int in [0,8), got {button!r}")
    if "t_ms" in msg and not isinstance(msg["t_ms"], (int, float)):
        raise ProtocolError("bad_timestamp", f"t_ms must be a number, got {msg['t_ms']!r}")
    if mtype == "set_temperature":
        temp = msg.get("temperature")
        if not isinstance(temp, (int, float)) or isinstance(temp, bool) or temp < 0:
            raise ProtocolError("bad_temperature",
                                f"temperature must be a number >= 0, got {temp!r}")
    if mtype == "init" and "seed" in msg and not isinstance(msg["seed"], int):
        raise ProtocolError("bad_seed", f"seed must be an int, got {msg['seed']!r}")
    return msg


def serialize(msg: dict) -> str:
    if msg.get("type") not in SERVER_TYPES:
        raise ValueError(f"not a server message type: {msg.get('type')!r}")
    return json.dumps(msg, separators=(",", ":"))


def ready(session_id: str) -> dict:
    return {"type": "ready", "session_id": session_id}


def note(kind: str, key: int, button: int, t_ms: float) -> dict:
    return {"type": f"note_{kind}", "key": int(key), "button": int(button),
            "t_ms": float(t_ms)}


def lookahead_result(matrix) -> dict:
    return {"type": "lookahead_result",
            "matrix": [[float(p) for p in row] for row in matrix]}


def error(code: str, message: str) -> dict:
    return {"type": "error", "code": code, "message": message}
