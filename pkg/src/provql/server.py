"""HTTP service exposing sessions, statement execution, and graph pages.

One session maps to one serialized execution lane: a second execute on the
same session while one is running is rejected with 409 rather than queued.
Graph payloads are paged so a dependency explosion cannot flood a client.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .budget import Deadline
from .errors import BudgetExceeded, ExecutionError, LexError, ParseError, SemanticError
from .runtime import Session, graph_payload
from .store import Store

ENV_PREFIX = "PROVQL_"
DEFAULT_PAGE_SIZE = 2000


class ServerConfig(BaseModel):
    """Service configuration; every field can be overridden by PROVQL_* env vars."""

    host: str = "127.0.0.1"
    port: int = 8750
    snapshots: dict = Field(default_factory=dict)  # source name -> snapshot path
    max_statement_seconds: float = 120.0
    page_size: int = DEFAULT_PAGE_SIZE
    export_dir: str = "."

    @classmethod
    def load(cls, path: Optional[str] = None) -> "ServerConfig":
        doc = {}
        if path:
            with open(path) as fp:
                doc = json.load(fp)
        cfg = cls(**doc)
        if os.environ.get(ENV_PREFIX + "HOST"):
            cfg.host = os.environ[ENV_PREFIX + "HOST"]
        if os.environ.get(ENV_PREFIX + "PORT"):
            cfg.port = int(os.environ[ENV_PREFIX + "PORT"])
        if os.environ.get(ENV_PREFIX + "MAX_STATEMENT_SECONDS"):
            cfg.max_statement_seconds = float(os.environ[ENV_PREFIX + "MAX_STATEMENT_SECONDS"])
        if os.environ.get(ENV_PREFIX + "PAGE_SIZE"):
            cfg.page_size = int(os.environ[ENV_PREFIX + "PAGE_SIZE"])
        if os.environ.get(ENV_PREFIX + "EXPORT_DIR"):
            cfg.export_dir = os.environ[ENV_PREFIX + "EXPORT_DIR"]
        return cfg


class ExecuteBody(BaseModel):
    text: str


class _SessionSlot:
    def __init__(self, session: Session):
        self.session = session
        self.lock = threading.Lock()


def _page(items: list, page: int, size: int) -> tuple:
    start = page * size
    chunk = items[start:start + size]
    next_page = page + 1 if start + size < len(items) else None
    return chunk, next_page


def _render_graph(graph, page: int, size: int) -> dict:
    payload = graph_payload(graph)
    entities, next_entities = _page(payload["entities"], page, size)
    events, next_events = _page(payload["events"], page, size)
    next_page = next_entities if next_entities is not None else next_events
    return {
        "nodes": graph.node_count(),
        "edges": graph.edge_count(),
        "page": page,
        "nextPage": next_page,
        "entities": entities,
        "events": events,
    }


def create_app(config: Optional[ServerConfig] = None, stores: Optional[list] = None) -> FastAPI:
    config = config or ServerConfig()
    app = FastAPI(title="provql", version="0.1.0")
    # the notebook client may be served from another origin; auth is a non-goal
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )
    app.state.config = config
    app.state.sessions = {}
    app.state.stores = {}

    for store in stores or []:
        app.state.stores[store.name] = store
    for name, path in config.snapshots.items():
        store = Store.load(path)
        store.name = name
        app.state.stores[name] = store

    def _slot(session_id: str) -> _SessionSlot:
        slot = app.state.sessions.get(session_id)
        if slot is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return slot

    @app.post("/sessions")
    def create_session():
        session = Session(export_dir=config.export_dir)
        for store in app.state.stores.values():
            session.register_source(store)
        session_id = uuid.uuid4().hex
        app.state.sessions[session_id] = _SessionSlot(session)
        return {"sessionId": session_id}

    @app.get("/sources")
    def sources():
        return [
            {"name": s.name, "entities": s.entity_count(), "events": s.event_count()}
            for s in app.state.stores.values()
        ]

    @app.post("/sessions/{session_id}/execute")
    def execute(session_id: str, body: ExecuteBody):
        slot = _slot(session_id)
        if not slot.lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="session is already executing a statement")
        try:
            deadline = Deadline(config.max_statement_seconds)
            try:
                results = slot.session.execute_text(body.text, deadline=deadline)
            except (LexError, ParseError) as exc:
                loc = getattr(exc, "loc", None)
                detail = [{"message": exc.message, "line": loc.line, "col": loc.col}]
                raise HTTPException(status_code=400, detail=detail)
            except SemanticError as exc:
                detail = [
                    {"message": d.message, "line": d.loc.line if d.loc else 0,
                     "col": d.loc.col if d.loc else 0}
                    for d in exc.diagnostics
                ]
                raise HTTPException(status_code=400, detail=detail)
            except BudgetExceeded as exc:
                raise HTTPException(status_code=408, detail=str(exc))
            except ExecutionError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            out = []
            for res in results:
                doc = {
                    "kind": res.kind,
                    "summary": res.summary(),
                    "elapsedMs": round(res.elapsed_ms, 3),
                    "truncated": res.truncated,
                }
                if res.bound_name:
                    doc["bound"] = res.bound_name
                if res.export_path:
                    doc["exportPath"] = res.export_path
                if res.graph is not None:
                    doc["graph"] = {"nodes": res.graph.node_count(), "edges": res.graph.edge_count()}
                    if res.display:
                        doc["render"] = _render_graph(res.graph, 0, config.page_size)
                out.append(doc)
            return {"results": out}
        finally:
            slot.lock.release()

    @app.get("/sessions/{session_id}/vars")
    def list_vars(session_id: str):
        slot = _slot(session_id)
        return [
            {"name": name, "nodes": g.node_count(), "edges": g.edge_count()}
            for name, g in slot.session.vars.items()
        ]

    @app.get("/sessions/{session_id}/vars/{name}")
    def get_var(session_id: str, name: str, page: int = 0):
        slot = _slot(session_id)
        graph = slot.session.vars.get(name)
        if graph is None:
            raise HTTPException(status_code=404, detail=f"unknown variable {name}")
        return {"name": name, **_render_graph(graph, page, app.state.config.page_size)}

    return app


def serve(config: ServerConfig, stores: Optional[list] = None) -> None:  # pragma: no cover
    import uvicorn

    app = create_app(config, stores)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
