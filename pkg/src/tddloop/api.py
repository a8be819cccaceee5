"""HTTP surface for steering one collaborative session.

The API is a pure projection of engine state: reads report it, the decision
endpoint forwards to the engine, and nothing the engine forbids can happen
here. Events stream out as server-sent events in session-log order.
"""

from __future__ import annotations

import asyncio
import json
import threading

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from .engine import CollaborativeEngine, DecisionKind, DeveloperDecision
from .errors import StateError
from .session import LogEvent, SessionStatus

EVENT_POLL_SECONDS = 0.05


class DecisionBody(BaseModel):
    kind: str
    test_source: str | None = None
    production_source: str | None = None
    prompt: str | None = None
    note: str | None = None


class SessionController:
    """Serializes all session mutations and keeps the event history."""

    def __init__(self):
        self.engine: CollaborativeEngine | None = None
        self.events: list[LogEvent] = []
        self._lock = threading.Lock()

    def on_event(self, event: LogEvent) -> None:
        self.events.append(event)

    def attach(self, engine: CollaborativeEngine, history: list[LogEvent]) -> None:
        # history holds events written before the engine existed (session-created).
        self.events = history + self.events
        self.engine = engine

    def state(self) -> dict:
        with self._lock:
            document = self.engine.state_document()
            document["event_position"] = len(self.events)
            return document

    def iteration(self, index: int) -> dict | None:
        with self._lock:
            records = self.engine.session.iterations
            if not 1 <= index <= len(records):
                return None
            return records[index - 1].to_dict()

    def submit(self, decision: DeveloperDecision) -> dict:
        with self._lock:
            self.engine.submit(decision)
            document = self.engine.state_document()
            document["event_position"] = len(self.events)
            return document

    def is_terminal(self) -> bool:
        return self.engine.session.status in (SessionStatus.COMPLETED, SessionStatus.HALTED)


def create_app(controller: SessionController) -> FastAPI:
    app = FastAPI(title="tddloop collaborative session")

    @app.get("/session")
    def get_session() -> dict:
        return controller.state()

    @app.get("/session/iterations/{index}")
    def get_iteration(index: int) -> dict:
        record = controller.iteration(index)
        if record is None:
            raise HTTPException(status_code=404, detail=f"no iteration {index}")
        return record

    @app.post("/session/decision")
    def post_decision(body: DecisionBody):
        try:
            kind = DecisionKind(body.kind)
        except ValueError:
            raise HTTPException(status_code=422, detail=f"unknown decision kind {body.kind!r}")
        try:
            decision = DeveloperDecision(
                kind=kind,
                test_source=body.test_source,
                production_source=body.production_source,
                prompt=body.prompt,
                note=body.note,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        try:
            return controller.submit(decision)
        except StateError as exc:
            return JSONResponse(status_code=409, content={"error": str(exc)})

    @app.get("/session/events")
    async def get_events(request: Request) -> StreamingResponse:
        async def stream():
            position = 0
            while True:
                while position < len(controller.events):
                    event = controller.events[position]
                    payload = json.dumps(
                        {"event": event.kind, "at": event.at, "data": event.data},
                        ensure_ascii=False,
                    )
                    yield f"id: {position}\ndata: {payload}\n\n"
                    position += 1
                if controller.is_terminal() and position >= len(controller.events):
                    return
                if await request.is_disconnected():
                    return
                await asyncio.sleep(EVENT_POLL_SECONDS)

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app
