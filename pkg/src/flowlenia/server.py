"""HTTP + WebSocket front door for live sessions.

Endpoints
---------
- ``POST /sessions`` — create a session from a config JSON body, returns id.
- ``GET /sessions/{id}/config`` — current effective configuration.
- ``POST /sessions/{id}/command`` — apply one control command, JSON in/out.
- ``DELETE /sessions/{id}`` — stop and discard the session.
- ``WS /sessions/{id}/stream`` — binary frames out (see ``flowlenia.frames``),
  JSON text commands in, JSON text events out (command replies and
  ``config-changed`` notifications).
"""

from __future__ import annotations

import asyncio
import json
import uuid

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from starlette.websockets import WebSocketState

from flowlenia.config import SimConfig
from flowlenia.session import Session
from flowlenia.sim import Simulation

POLL_INTERVAL = 0.02


def create_app() -> FastAPI:
    app = FastAPI(title="flowlenia")
    sessions: dict[str, Session] = {}
    app.state.sessions = sessions

    @app.post("/sessions")
    def create_session(body: dict | None = None):
        try:
            config = SimConfig.from_dict(body or {})
            session = Session(Simulation(config))
        except (ValueError, TypeError, KeyError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        session_id = uuid.uuid4().hex[:12]
        sessions[session_id] = session
        return {"id": session_id, "config": session.submit({"op": "get_config"})["config"]}

    def _get(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="no such session")
        return session

    @app.get("/sessions/{session_id}/config")
    def get_config(session_id: str):
        return _get(session_id).submit({"op": "get_config"})

    @app.post("/sessions/{session_id}/command")
    def post_command(session_id: str, body: dict):
        return _get(session_id).submit(body)

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str):
        session = sessions.pop(session_id, None)
        if session is None:
            raise HTTPException(status_code=404, detail="no such session")
        session.close()
        return {"ok": True}

    @app.websocket("/sessions/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str, stride: int = 1,
                     encoding: str = "raw"):
        session = sessions.get(session_id)
        if session is None:
            await websocket.close(code=4004)
            return
        await websocket.accept()
        subscriber = session.subscribe(stride=stride, rgb=encoding == "rgb")
        loop = asyncio.get_running_loop()

        async def pump_out():
            while True:
                frame, events = await loop.run_in_executor(
                    None, subscriber.poll, POLL_INTERVAL)
                if websocket.client_state != WebSocketState.CONNECTED:
                    return
                for event in events:
                    await websocket.send_text(json.dumps(event))
                if frame is not None:
                    await websocket.send_bytes(frame.to_bytes())

        async def pump_in():
            while True:
                text = await websocket.receive_text()
                command = json.loads(text)
                reply = await loop.run_in_executor(None, session.submit, command)
                reply.setdefault("event", "reply")
                if "id" in command:
                    reply["id"] = command["id"]
                await websocket.send_text(json.dumps(reply))

        out_task = asyncio.create_task(pump_out())
        try:
            await pump_in()
        except WebSocketDisconnect:
            pass
        finally:
            out_task.cancel()
            session.unsubscribe(subscriber)

    return app


app = create_app()
