"""HTTP service for running the ranking survey.

Endpoints:
    POST /api/session                    new shuffled session (persisted first)
    GET  /img/{image_id}                 stylized image bytes, identity withheld
    POST /api/session/{pid}/response     submit one task's ranking
    GET  /api/report                     mean-rank report (the only place model
                                         names appear)

Participants only ever see opaque image ids; 400 = invalid ranking payload,
404 = unknown participant/task/image, 409 = submission that replays image ids
not belonging to the task.
"""

from __future__ import annotations

import secrets

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel

from .definition import SurveyDefinition
from .report import mean_rank_report
from .store import (
    RankingRecord,
    ResponseLog,
    StorageError,
    ValidationError,
    new_session,
    submit_ranking,
)

_MEDIA_TYPES = {".png": "image/png", ".jpg": "image/jpeg", ".jpeg": "image/jpeg"}


class ResponseBody(BaseModel):
    task_id: str
    rankings: dict[str, int]  # opaque image id -> rank


def create_app(definition: SurveyDefinition, log: ResponseLog,
               ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="toonlab survey", docs_url=None, redoc_url=None)

    # the UI may be served from any static host; the API carries no secrets
    from fastapi.middleware.cors import CORSMiddleware
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": "malformed request body"})

    @app.post("/api/session", status_code=201)
    def create_session():
        session = new_session(definition, rng_seed=secrets.randbits(63))
        try:
            log.add_session(session)  # must be durable before the client sees it
        except StorageError as e:
            return JSONResponse(status_code=500, content={"detail": str(e)})
        tasks = []
        for task_id in session.task_order:
            task = definition.task_by_id(task_id)
            question = definition.question_by_id(task.question_id)
            shuffled = [task.image_ids[m] for m in session.image_orders[task_id]]
            tasks.append({
                "task_id": task.id,
                "question_id": task.question_id,
                "prompt": question.prompt,
                "images": [f"/img/{oid}" for oid in shuffled],
            })
        return {"participant_id": session.participant_id, "tasks": tasks}

    @app.get("/img/{image_id}")
    def get_image(image_id: str):
        path = definition.image_files.get(image_id)
        if path is None:
            return JSONResponse(status_code=404, content={"detail": "unknown image"})
        suffix = path[path.rfind("."):].lower() if "." in path else ""
        return FileResponse(path, media_type=_MEDIA_TYPES.get(suffix, "application/octet-stream"))

    @app.post("/api/session/{participant_id}/response")
    def submit_response(participant_id: str, body: ResponseBody):
        session = log.get_session(participant_id)
        if session is None:
            return JSONResponse(status_code=404, content={"detail": "unknown participant"})
        task = definition.task_by_id(body.task_id)
        if task is None:
            return JSONResponse(status_code=404, content={"detail": "unknown task"})
        expected_ids = set(task.image_ids.values())
        if set(body.rankings.keys()) != expected_ids:
            return JSONResponse(
                status_code=409,
                content={"detail": "submitted images do not belong to this task"})
        id_to_model = {oid: model for model, oid in task.image_ids.items()}
        by_model = {id_to_model[oid]: rank for oid, rank in body.rankings.items()}
        record = RankingRecord(
            participant_id=participant_id,
            task_id=task.id,
            question_id=task.question_id,
            rankings=by_model,
        )
        try:
            submit_ranking(log, definition, session, record)
        except ValidationError as e:
            return JSONResponse(status_code=400, content={"detail": str(e)})
        except StorageError as e:
            return JSONResponse(status_code=500, content={"detail": str(e)})
        return {"status": "ok", "task_id": task.id}

    @app.get("/api/report")
    def report():
        return mean_rank_report(log.effective_records()).to_dict()

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(definition: SurveyDefinition, storage_path, bind_address: str = "127.0.0.1:8765",
          ui_dir: str | None = None) -> None:
    """Run the survey service until interrupted."""
    import uvicorn

    host, _, port = bind_address.partition(":")
    app = create_app(definition, ResponseLog(storage_path), ui_dir=ui_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8765), log_level="warning")
