"""HTTP service exposing the pipeline: session CRUD, server-sent-event
streaming of generation, design edits, and static hosting of the UI bundle."""

from __future__ import annotations

import json
import queue
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response, StreamingResponse

from . import session as sessions
from .errors import (
    KeyframerError,
    MalformedXml,
    NotAnSvg,
    SchemaVersionError,
    StaleSource,
    TypeMismatch,
    UnknownDesign,
    UnknownIteration,
)
from .prompting import ProviderConfig, get_provider
from .property_sheet import derive_sheet
from .css_core import parse_css


class ApiError(Exception):
    def __init__(self, status, code, message):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class SessionStore:
    """In-memory sessions with write-through persistence and per-session
    serialization of mutations."""

    def __init__(self, data_dir=None):
        self.data_dir = Path(data_dir) if data_dir else None
        if self.data_dir:
            self.data_dir.mkdir(parents=True, exist_ok=True)
        self._sessions = {}
        self._locks = {}
        self._streaming = set()
        self._mutex = threading.Lock()

    def add(self, session):
        with self._mutex:
            self._sessions[session.id] = session
            self._locks[session.id] = threading.Lock()
        self.persist(session)

    def get(self, session_id):
        session = self._sessions.get(session_id)
        if session is None:
            raise ApiError(404, "unknown_session", f"no session {session_id!r}")
        return session

    def lock(self, session_id):
        return self._locks[session_id]

    def by_design(self, design_id):
        for session in self._sessions.values():
            for design in session.all_designs():
                if design.id == design_id:
                    return session, design
        raise ApiError(404, "unknown_design", f"no design {design_id!r}")

    def begin_stream(self, session_id):
        with self._mutex:
            if session_id in self._streaming:
                raise ApiError(409, "iteration_in_progress",
                               "an iteration is already streaming on this session")
            self._streaming.add(session_id)

    def end_stream(self, session_id):
        with self._mutex:
            self._streaming.discard(session_id)

    def persist(self, session):
        if not self.data_dir:
            return
        path = self.data_dir / f"session-{session.id}.json"
        path.write_text(json.dumps(sessions.session_to_json(session), indent=2))


def _sse(event, data):
    return f"event: {event}\ndata: {json.dumps(data)}\n\n"


def create_app(data_dir=None, config: ProviderConfig = None, ui_dir=None) -> FastAPI:
    app = FastAPI(title="keyframer")
    store = SessionStore(data_dir)
    app.state.store = store
    config = config or ProviderConfig()
    # A replay provider cycles through its fixture directory, so it must
    # live for the whole app; the live provider is stateless.
    shared_provider = get_provider(config) if config.provider == "replay" else None

    def provider():
        return shared_provider if shared_provider else get_provider(config)

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(KeyframerError)
    async def domain_error_handler(request: Request, exc: KeyframerError):
        status = 400
        if isinstance(exc, (UnknownDesign, UnknownIteration)):
            status = 404
        code = type(exc).__name__
        return JSONResponse(status_code=status,
                            content={"code": code, "message": str(exc)})

    async def _body(request):
        try:
            return await request.json()
        except json.JSONDecodeError:
            raise ApiError(400, "invalid_payload", "request body is not valid JSON")

    @app.post("/api/sessions", status_code=201)
    async def create_session(request: Request):
        body = await _body(request)
        svg = body.get("svg")
        if not isinstance(svg, str) or not svg.strip():
            raise ApiError(400, "invalid_payload", "field 'svg' (string) is required")
        try:
            session = sessions.create_session(svg)
        except (MalformedXml, NotAnSvg) as exc:
            raise ApiError(400, type(exc).__name__, str(exc))
        store.add(session)
        return {
            "session_id": session.id,
            "element_index": session.svg.index.to_json(),
            "preprocessed_svg": session.svg.svg,
            "warnings": session.svg.warnings,
        }

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        return sessions.session_to_json(store.get(session_id))

    def _stream_iteration(session, run):
        events = queue.Queue()

        class QueueSink:
            def chunk(self, text):
                events.put(("chunk", {"text": text}))

            def done(self, full_text, elapsed):
                events.put(("done", {"elapsed_seconds": elapsed}))

            def error(self, kind, message):
                events.put(("error", {"code": kind, "message": message}))

        def on_design(design):
            events.put(("design", {
                "ordinal": design.scope_index,
                "design_id": design.id,
                "css": design.css_current,
                "explanation": design.explanation,
                "lint": design.lint.to_json(),
            }))

        def work():
            try:
                with store.lock(session.id):
                    iteration = run(QueueSink(), on_design)
                    if iteration.failed and iteration.error:
                        events.put(("error", {"code": "provider",
                                              "message": iteration.error}))
                store.persist(session)
            except Exception as exc:  # defensive: stream must terminate
                events.put(("error", {"code": "internal", "message": str(exc)}))
            finally:
                events.put(None)

        def generate():
            threading.Thread(target=work, daemon=True).start()
            try:
                while True:
                    item = events.get()
                    if item is None:
                        break
                    yield _sse(*item)
            finally:
                store.end_stream(session.id)

        return StreamingResponse(generate(), media_type="text/event-stream")

    @app.post("/api/sessions/{session_id}/iterations")
    async def run_iteration(session_id: str, request: Request):
        session = store.get(session_id)
        body = await _body(request)
        prompt = body.get("prompt")
        if not isinstance(prompt, str) or not prompt.strip():
            raise ApiError(400, "invalid_payload", "field 'prompt' (string) is required")
        base = body.get("base_design_id")
        store.begin_stream(session_id)

        def run(sink, on_design):
            return sessions.run_iteration(
                session, prompt, base_design=base, provider=provider(),
                sink=sink, design_callback=on_design)

        return _stream_iteration(session, run)

    @app.post("/api/sessions/{session_id}/iterations/{n}/regenerate")
    def regenerate(session_id: str, n: int):
        session = store.get(session_id)
        if not 0 <= n < len(session.iterations):
            raise ApiError(404, "unknown_iteration", f"no iteration {n}")
        store.begin_stream(session_id)

        def run(sink, on_design):
            original = session.iterations[n]
            return sessions.run_iteration(
                session, original.prompt_text, base_design=original.base_design,
                provider=provider(), is_regenerate=True, sink=sink,
                design_callback=on_design)

        return _stream_iteration(session, run)

    @app.patch("/api/designs/{design_id}/css")
    async def patch_css(design_id: str, request: Request):
        body = await _body(request)
        css = body.get("css")
        if not isinstance(css, str):
            raise ApiError(400, "invalid_payload", "field 'css' (string) is required")
        session, _ = store.by_design(design_id)
        with store.lock(session.id):
            design = sessions.apply_code_edit(session, design_id, css)
        store.persist(session)
        return {"design": design.to_json(), "lint": design.lint.to_json()}

    @app.patch("/api/designs/{design_id}/property")
    async def patch_property(design_id: str, request: Request):
        body = await _body(request)
        if "source" not in body or "value" not in body:
            raise ApiError(400, "invalid_payload", "fields 'source' and 'value' required")
        session, _ = store.by_design(design_id)
        try:
            with store.lock(session.id):
                design = sessions.apply_property_edit(
                    session, design_id, body["source"], body["value"])
        except (TypeMismatch, StaleSource) as exc:
            raise ApiError(400, type(exc).__name__, str(exc))
        except (KeyError, TypeError, ValueError) as exc:
            raise ApiError(400, "invalid_payload", f"bad source/value: {exc}")
        store.persist(session)
        sheet = derive_sheet(parse_css(design.css_current), session.svg.index)
        return {"design": design.to_json(), "property_sheet": sheet.to_json()}

    @app.get("/api/designs/{design_id}/property_sheet")
    def get_property_sheet(design_id: str):
        session, design = store.by_design(design_id)
        sheet = derive_sheet(parse_css(design.css_current), session.svg.index)
        return {"design_id": design_id, "property_sheet": sheet.to_json()}

    @app.post("/api/designs/{design_id}/favorite")
    def toggle_favorite(design_id: str):
        session, _ = store.by_design(design_id)
        with store.lock(session.id):
            sessions.toggle_favorite(session, design_id)
        store.persist(session)
        return {"design_id": design_id, "favorited": design_id in session.favorites}

    @app.get("/api/sessions/{session_id}/summary")
    def summary(session_id: str):
        session = store.get(session_id)
        return {
            "session_id": session.id,
            "favorites": sorted(session.favorites),
            "iterations": [
                {
                    "prompt_text": it.prompt_text,
                    "is_regenerate": it.is_regenerate,
                    "failed": it.failed,
                    "designs": [
                        {
                            "id": d.id,
                            "scope_index": d.scope_index,
                            "explanation": d.explanation,
                            "favorited": d.id in session.favorites,
                        }
                        for d in it.designs
                    ],
                }
                for it in session.iterations
            ],
        }

    @app.get("/api/sessions/{session_id}/export")
    def export(session_id: str):
        session = store.get(session_id)
        with store.lock(session.id):
            data = sessions.export_log(session)
        store.persist(session)
        return Response(content=data, media_type="application/json")

    @app.post("/api/sessions/import", status_code=201)
    async def import_session(request: Request):
        raw = await request.body()
        try:
            session = sessions.import_log(raw)
        except SchemaVersionError as exc:
            raise ApiError(400, "SchemaVersionError", str(exc))
        store.add(session)
        return {"session_id": session.id}

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(port=8400, data_dir=None, config=None, ui_dir=None, host="127.0.0.1"):
    import uvicorn

    app = create_app(data_dir=data_dir, config=config, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)
