"""HTTP+JSON API for the labelling UI.

Endpoints:
  POST /sessions                      {recording_paths, snippet_ms, projection, seed}
  GET  /sessions/{id}/points
  GET  /sessions/{id}/audio/{snippet_id}
  POST /sessions/{id}/labels          {snippet_ids, label}
  POST /sessions/{id}/undo
  POST /sessions/{id}/projection      {method, seed} -> {job_id}
  GET  /sessions/{id}/projection/{job_id}
  GET  /sessions/{id}/export          (zip of per-recording label CSVs)

Reads are served from in-memory state; label mutations are serialized per
session; projections run as background jobs so the session stays readable
while t-SNE grinds.
"""

from __future__ import annotations

import io
import threading
import uuid
import zipfile

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response
from pydantic import BaseModel, Field

from ..audio import wav_bytes
from .session import LABEL_VOCAB, SessionStore


class CreateSessionRequest(BaseModel):
    recording_paths: list[str]
    snippet_ms: int = 500
    projection: str = "pca"
    seed: int = 0
    embedding: str = "mfcc"


class LabelRequest(BaseModel):
    snippet_ids: list[str] = Field(min_length=1)
    label: str


class ProjectionRequest(BaseModel):
    method: str
    seed: int = 0


def create_app(sessions_dir="labeller-sessions") -> FastAPI:
    app = FastAPI(title="whispermine labeller")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    store = SessionStore(sessions_dir)
    jobs: dict = {}
    jobs_lock = threading.Lock()
    app.state.store = store

    def get_session(session_id: str):
        try:
            return store.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")

    @app.post("/sessions")
    def create_session(req: CreateSessionRequest):
        try:
            session = store.create(req.recording_paths, req.snippet_ms,
                                   req.projection, req.seed, req.embedding)
        except FileNotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"session_id": session.id, "n_snippets": len(session.snippets),
                "labels": list(LABEL_VOCAB)}

    @app.get("/sessions/{session_id}/points")
    def points(session_id: str):
        return get_session(session_id).points()

    @app.get("/sessions/{session_id}/audio/{snippet_id}")
    def audio(session_id: str, snippet_id: str):
        session = get_session(session_id)
        if snippet_id not in session.by_id:
            raise HTTPException(status_code=404, detail=f"unknown snippet {snippet_id}")
        return Response(content=wav_bytes(session.snippet_audio(snippet_id)),
                        media_type="audio/wav")

    @app.post("/sessions/{session_id}/labels")
    def label(session_id: str, req: LabelRequest):
        session = get_session(session_id)
        try:
            n = store.record_label(session, req.snippet_ids, req.label)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"history_len": n}

    @app.post("/sessions/{session_id}/undo")
    def undo(session_id: str):
        session = get_session(session_id)
        try:
            n = store.record_undo(session)
        except IndexError:
            raise HTTPException(status_code=409, detail="label history is empty")
        return {"history_len": n}

    @app.post("/sessions/{session_id}/projection")
    def start_projection(session_id: str, req: ProjectionRequest):
        session = get_session(session_id)
        if req.method not in ("pca", "tsne"):
            raise HTTPException(status_code=422, detail=f"unknown method {req.method!r}")
        job_id = uuid.uuid4().hex[:12]
        with jobs_lock:
            jobs[job_id] = {"status": "running", "method": req.method,
                            "session_id": session_id}

        def run():
            try:
                store.record_projection(session, req.method, req.seed)
                with jobs_lock:
                    jobs[job_id]["status"] = "done"
            except Exception as exc:  # surfaced through job polling
                with jobs_lock:
                    jobs[job_id]["status"] = "error"
                    jobs[job_id]["detail"] = str(exc)

        threading.Thread(target=run, daemon=True).start()
        return {"job_id": job_id}

    @app.get("/sessions/{session_id}/projection/{job_id}")
    def poll_projection(session_id: str, job_id: str):
        with jobs_lock:
            job = jobs.get(job_id)
        if job is None or job["session_id"] != session_id:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id}")
        return job

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str):
        session = get_session(session_id)
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
            for rid, track in session.export_tracks().items():
                lines = ["start_s,end_s,label"]
                lines += [f"{iv.start_s:.6f},{iv.end_s:.6f},{iv.label}"
                          for iv in track.intervals]
                zf.writestr(f"{rid}.csv", "\n".join(lines) + "\n")
        return Response(content=buf.getvalue(), media_type="application/zip",
                        headers={"Content-Disposition":
                                 f'attachment; filename="{session_id}_labels.zip"'})

    return app
