"""HTTP + streaming session service.

Endpoints:
    POST /sessions                          start a pipeline run
    GET  /sessions/{id}                     state + snapshot
    GET  /sessions/{id}/events?from=N       NDJSON event stream (replay + tail)
    GET  /sessions/{id}/backlog.csv?technique=T
    POST /sessions/{id}/feedback
    GET  /sessions/{id}/feedback
    GET  /healthz

The stream replays persisted events from the requested sequence number and
then live-tails until a terminal event (metrics_ready or error). Delivery is
at-least-once; clients dedup by sequence_no.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import PlainTextResponse, Response, StreamingResponse

from . import fixture_loader, pipeline
from .domain import (
    FeedbackEntry,
    PrioritizationTechnique,
    ProjectDescription,
    Satisfaction,
)
from .gateway import GatewayError, ModelConfig
from .schemas import (
    FeedbackListResponse,
    FeedbackRequest,
    FeedbackResponse,
    SessionCreateRequest,
    SessionCreateResponse,
    SessionStateResponse,
)
from .store import SessionStore, UnknownSession

DEFAULT_STORE_ENV = "STORYAGENTS_STORE"


def create_app(store_dir: Optional[str | Path] = None) -> FastAPI:
    store_dir = store_dir or os.environ.get(DEFAULT_STORE_ENV, ".storyagents-store")
    store = SessionStore(store_dir)
    app = FastAPI(title="storyagents", version="0.1.0")
    app.state.store = store
    # kept so tests can join workers before simulating a restart
    app.state.workers: dict[str, threading.Thread] = {}

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/sessions", response_model=SessionCreateResponse, status_code=201)
    def create_session(request: SessionCreateRequest) -> SessionCreateResponse:
        try:
            techniques = tuple(
                PrioritizationTechnique.parse(t) for t in request.techniques
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=f"invalid_config: {exc}")
        if not techniques:
            raise HTTPException(status_code=422, detail="invalid_config: no techniques")

        script = None
        embedder = None
        if request.fixture:
            try:
                bundle = fixture_loader.load_packaged_fixture(request.fixture)
            except FileNotFoundError:
                raise HTTPException(
                    status_code=422,
                    detail=f"invalid_config: unknown fixture {request.fixture!r}",
                )
            project = bundle.project
            config = bundle.config
            script = bundle.script
            embedder = bundle.embedder
            techniques = bundle.techniques
        else:
            if request.project is None or not request.project.body.strip():
                raise HTTPException(
                    status_code=422, detail="invalid_config: project body is empty"
                )
            if request.provider not in ("mock", "openai_compatible"):
                raise HTTPException(
                    status_code=422,
                    detail=f"invalid_config: unknown provider {request.provider!r}",
                )
            project = ProjectDescription(
                id="adhoc", title=request.project.title, body=request.project.body
            )
            config = ModelConfig(
                provider=request.provider,
                model_name=request.model,
                base_url=os.environ.get("STORYAGENTS_BASE_URL", ""),
                api_key_env=os.environ.get("STORYAGENTS_API_KEY_ENV", "OPENAI_API_KEY"),
            )

        session_id = store.create_session(
            {
                "project": {"id": project.id, "title": project.title, "body": project.body},
                "config": {
                    "model": config.model_name,
                    "provider": config.provider,
                    "techniques": [t.slug for t in techniques],
                },
            }
        )

        def work() -> None:
            def observer(kind: str, payload: dict) -> None:
                store.append_event(session_id, kind, payload)

            try:
                session = pipeline.run_pipeline(
                    session_id=session_id,
                    project=project,
                    config=config,
                    techniques=techniques,
                    script=script,
                    embedder=embedder,
                    observer=observer,
                )
                store.save_snapshot(session_id, pipeline.session_to_dict(session))
            except GatewayError as exc:
                store.append_event(session_id, "error", {"error": "gateway", "detail": str(exc)})
            except Exception as exc:  # pipeline failures become terminal events
                store.append_event(session_id, "error", {"error": "pipeline", "detail": str(exc)})

        worker = threading.Thread(target=work, name=f"pipeline-{session_id}", daemon=True)
        app.state.workers[session_id] = worker
        worker.start()
        return SessionCreateResponse(id=session_id)

    @app.get("/sessions/{session_id}", response_model=SessionStateResponse)
    def get_session(session_id: str) -> SessionStateResponse:
        try:
            meta = store.meta(session_id)
        except UnknownSession:
            raise HTTPException(status_code=404, detail="unknown_session")
        snapshot = store.load_snapshot(session_id)
        events = store.events(session_id)
        if snapshot is not None:
            state = "completed"
        elif events and events[-1].kind == "error":
            state = "failed"
        elif events:
            state = "running"
        else:
            state = "created"
        return SessionStateResponse(
            id=session_id, state=state, config=meta.get("config", {}), snapshot=snapshot
        )

    @app.get("/sessions/{session_id}/events")
    def stream_events(session_id: str, request_from: int = Query(default=0, alias="from")):
        if not store.exists(session_id):
            raise HTTPException(status_code=404, detail="unknown_session")

        def generate():
            for event in store.follow(session_id, from_sequence=request_from):
                yield json.dumps(event.to_dict()) + "\n"

        return StreamingResponse(generate(), media_type="application/x-ndjson")

    @app.get("/sessions/{session_id}/backlog.csv")
    def export_csv(session_id: str, technique: str = Query(...)):
        try:
            store.meta(session_id)
        except UnknownSession:
            raise HTTPException(status_code=404, detail="unknown_session")
        try:
            tech = PrioritizationTechnique.parse(technique)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        snapshot = store.load_snapshot(session_id)
        if snapshot is None:
            raise HTTPException(status_code=409, detail="not_ready")
        session = _session_from_snapshot(snapshot)
        try:
            body = pipeline.export_backlog_csv(session, tech)
        except LookupError:
            raise HTTPException(status_code=409, detail="not_ready")
        return Response(
            content=body,
            media_type="text/csv; charset=utf-8",
            headers={
                "Content-Disposition": f'attachment; filename="backlog_{tech.slug}.csv"'
            },
        )

    @app.post(
        "/sessions/{session_id}/feedback",
        response_model=FeedbackResponse,
        status_code=201,
    )
    def record_feedback(session_id: str, request: FeedbackRequest) -> FeedbackResponse:
        if not store.exists(session_id):
            raise HTTPException(status_code=404, detail="unknown_session")
        try:
            satisfaction = Satisfaction(request.satisfaction)
        except ValueError:
            raise HTTPException(
                status_code=422,
                detail=f"invalid_enum: satisfaction {request.satisfaction!r}",
            )
        entry = FeedbackEntry(
            practitioner_role=request.practitioner_role,
            experience=request.experience,
            satisfaction=satisfaction,
            comment=request.comment,
            suggestion=request.suggestion,
        )
        entry_id = store.append_feedback(
            session_id,
            {
                "practitioner_role": entry.practitioner_role,
                "experience": entry.experience,
                "satisfaction": entry.satisfaction.value,
                "comment": entry.comment,
                "suggestion": entry.suggestion,
            },
        )
        return FeedbackResponse(id=entry_id)

    @app.get("/sessions/{session_id}/feedback", response_model=FeedbackListResponse)
    def list_feedback(session_id: str) -> FeedbackListResponse:
        if not store.exists(session_id):
            raise HTTPException(status_code=404, detail="unknown_session")
        return FeedbackListResponse(entries=store.feedback(session_id))

    return app


def _session_from_snapshot(snapshot: dict):
    """Rebuild just enough of the session for CSV export."""
    from .domain import SessionRecord

    session = SessionRecord(
        id=snapshot["id"],
        project=ProjectDescription(**snapshot["project"]),
        config=snapshot.get("config", {}),
    )
    session.stories = [pipeline.story_from_dict(s) for s in snapshot.get("stories", [])]
    session.backlogs = [
        pipeline.backlog_from_dict(b) for b in snapshot.get("backlogs", [])
    ]
    return session
