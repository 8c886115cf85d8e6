"""WebSocket service hosting decoder sessions, plus /healthz and static UI.

One session per connection: the client sends init first, then drives its
session with press/release/lookahead/reset/set_temperature frames. All
engine calls for a connection run serialized in its receive loop;
checkpoint weights are shared read-only across sessions.
"""

from __future__ import annotations

import asyncio
import logging
import time
import uuid
from collections import deque
from contextlib import asynccontextmanager
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import protocol
from .checkpoint import load_checkpoint
from .session import (
    DEFAULT_TEMPERATURE,
    DecoderSession,
    LookaheadUnsupportedError,
    session_init,
)

logger = logging.getLogger(__name__)

IDLE_REAP_SECONDS = 600.0


@dataclass
class SessionEntry:
    session: DecoderSession
    created_at: float
    last_active: float


@dataclass
class SessionRegistry:
    """Live sessions plus rolling press-latency stats."""

    entries: dict[str, SessionEntry] = field(default_factory=dict)
    press_latencies: deque = field(default_factory=lambda: deque(maxlen=1000))

    def create(self, session: DecoderSession) -> str:
        session_id = uuid.uuid4().hex[:12]
        now = time.monotonic()
        self.entries[session_id] = SessionEntry(session, now, now)
        return session_id

    def get(self, session_id: str | None) -> DecoderSession | None:
        entry = self.entries.get(session_id)
        if entry is None:
            return None
        entry.last_active = time.monotonic()
        return entry.session

    def drop(self, session_id: str | None) -> None:
        self.entries.pop(session_id, None)

    def reap_idle(self, max_idle_seconds: float) -> int:
        now = time.monotonic()
        stale = [sid for sid, e in self.entries.items()
                 if now - e.last_active > max_idle_seconds]
        for sid in stale:
            self.entries[sid].session.reset()
            del self.entries[sid]
        return len(stale)

    def latency_stats(self) -> dict | None:
        if not self.press_latencies:
            return None
        arr = np.asarray(self.press_latencies)
        return {"p50_ms": float(np.percentile(arr, 50) * 1e3),
                "p99_ms": float(np.percentile(arr, 99) * 1e3)}


def handle_message(registry: SessionRegistry, session_id: str | None, msg: dict,
                   model, default_temperature: float,
                   recv_t_ms: float | None = None) -> tuple[str | None, list[dict]]:
    """Dispatch one parsed client message.

    Returns (possibly updated session_id, response messages). The server
    supplies its receive timestamp when the client omitted t_ms.
    """
    mtype = msg["type"]
    if mtype == "init":
        if session_id is not None:
            registry.drop(session_id)
        temperature = msg.get("temperature", default_temperature)
        try:
            session = session_init(model, temperature=temperature,
                                   seed=msg.get("seed", 0))
        except ValueError as e:
            return session_id, [protocol.error("bad_init", str(e))]
        new_id = registry.create(session)
        return new_id, [protocol.ready(new_id)]

    session = registry.get(session_id)
    if session is None:
        return session_id, [protocol.error("no_session", "send init first")]

    t_ms = msg.get("t_ms")
    if t_ms is None:
        t_ms = recv_t_ms if recv_t_ms is not None else time.monotonic() * 1e3
    wall = float(t_ms) / 1e3

    if mtype == "press":
        t0 = time.perf_counter()
        events = session.press(msg["button"], wall)
        registry.press_latencies.append(time.perf_counter() - t0)
        return session_id, [protocol.note(e.kind, e.key, e.button, e.timestamp * 1e3)
                            for e in events]
    if mtype == "release":
        event = session.release(msg["button"], wall)
        if event is None:
            return session_id, [protocol.ready(session_id)]
        return session_id, [protocol.note(event.kind, event.key, event.button,
                                          event.timestamp * 1e3)]
    if mtype == "lookahead":
        try:
            matrix = session.lookahead()
        except LookaheadUnsupportedError as e:
            return session_id, [protocol.error("lookahead_unsupported", str(e))]
        return session_id, [protocol.lookahead_result(matrix)]
    if mtype == "reset":
        events = session.reset(wall)
        responses = [protocol.note(e.kind, e.key, e.button, e.timestamp * 1e3)
                     for e in events]
        responses.append(protocol.ready(session_id))
        return session_id, responses
    if mtype == "set_temperature":
        session.temperature = float(msg["temperature"])
        return session_id, [protocol.ready(session_id)]
    return session_id, [protocol.error("unknown_type", f"unhandled type {mtype!r}")]


def create_app(checkpoint_path: str, default_temperature: float = DEFAULT_TEMPERATURE,
               static_dir: str | None = None,
               idle_reap_seconds: float = IDLE_REAP_SECONDS) -> FastAPI:
    model = load_checkpoint(checkpoint_path)
    from .checkpoint import checkpoint_id
    ckpt_id = checkpoint_id(checkpoint_path)
    registry = SessionRegistry()

    async def reaper():
        while True:
            await asyncio.sleep(min(idle_reap_seconds, 60.0))
            n = registry.reap_idle(idle_reap_seconds)
            if n:
                logger.info("reaped %d idle sessions", n)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        task = asyncio.create_task(reaper())
        try:
            yield
        finally:
            task.cancel()

    app = FastAPI(lifespan=lifespan)
    app.state.registry = registry
    app.state.model = model

    @app.get("/healthz")
    async def healthz():
        return JSONResponse({
            "checkpoint": ckpt_id,
            "active_sessions": len(registry.entries),
            "press_latency_ms": registry.latency_stats(),
        })

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        session_id: str | None = None
        try:
            while True:
                raw = await ws.receive_text()
                recv_t_ms = time.monotonic() * 1e3
                try:
                    msg = protocol.parse_client_message(raw)
                except protocol.ProtocolError as e:
                    await ws.send_text(protocol.serialize(
                        protocol.error(e.code, e.message)))
                    continue
                session_id, responses = handle_message(
                    registry, session_id, msg, model, default_temperature, recv_t_ms)
                for response in responses:
                    await ws.send_text(protocol.serialize(response))
        except WebSocketDisconnect:
            pass
        finally:
            # a dropped connection must not leave notes sounding
            session = registry.get(session_id)
            if session is not None:
                session.reset()
            registry.drop(session_id)

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app


def serve(bind: str, checkpoint_path: str,
          temperature: float = DEFAULT_TEMPERATURE,
          static_dir: str | None = None) -> None:
    """Run until interrupted. bind is "host:port"."""
    import uvicorn
    host, _, port = bind.rpartition(":")
    app = create_app(checkpoint_path, temperature, static_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="info")
