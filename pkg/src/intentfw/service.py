"""HTTP service around the pipeline and the context store.

The API is the integration surface for operator consoles: upload contexts,
run the pipeline, read traces. Everything the UI needs is in the trace
document; no endpoint exposes internal objects.
"""

from __future__ import annotations

import os

from fastapi import FastAPI, HTTPException, Request
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .context import ContextError, ContextNotFound, ContextStore, context_to_doc, load_context
from .intent import AgentConfig
from .pipeline import BACKENDS, run_pipeline

DEFAULT_STORE = os.path.join(os.path.expanduser("~"), ".intentfw", "contexts")


class RunRequest(BaseModel):
    context_id: str
    query: str
    backend: str = "grammar"


def create_app(
    store_dir: str = DEFAULT_STORE,
    agent_endpoint: str | None = None,
    audit_path: str | None = None,
    ui_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="intentfw", docs_url=None, redoc_url=None)
    store = ContextStore(store_dir)
    agent = AgentConfig(endpoint=agent_endpoint) if agent_endpoint else None

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.post("/api/contexts", status_code=201)
    async def add_context(request: Request):
        body = await request.body()
        try:
            context = load_context(body)
        except ContextError as exc:
            raise HTTPException(422, detail={"findings": [f.to_doc() for f in exc.findings]})
        store.save(context)
        return {"id": context.id}

    @app.get("/api/contexts")
    def list_contexts():
        return {"contexts": store.list()}

    @app.get("/api/contexts/{context_id}")
    def get_context(context_id: str):
        try:
            context = store.get(context_id)
        except ContextNotFound as exc:
            raise HTTPException(404, detail={"findings": [exc.finding.to_doc()]})
        return context_to_doc(context)

    @app.post("/api/pipeline/run")
    def run(request: RunRequest):
        if request.backend not in BACKENDS:
            raise HTTPException(422, detail=f"unknown backend {request.backend!r}")
        if request.backend == "agent" and agent is None:
            raise HTTPException(422, detail="agent backend is not configured on this server")
        try:
            trace = run_pipeline(
                store,
                request.context_id,
                request.query,
                backend=request.backend,
                agent=agent,
                audit_path=audit_path,
            )
        except ContextNotFound as exc:
            raise HTTPException(404, detail={"findings": [exc.finding.to_doc()]})
        return trace.to_doc()

    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
