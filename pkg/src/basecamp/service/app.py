"""HTTP session service: the annotate -> optimize -> adjust -> rerun loop
over a polling JSON API (versioned under /v1) for the browser studio."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response

from ..annotate import InsufficientSprayError
from ..cloud import PlyParseError
from ..hull import DegeneracyError
from ..optimizer import Rotate, Scale, Translate
from . import schemas
from .store import SessionNotFound, SessionStore, WorkflowError


def create_app(data_dir: Path, studio_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="basecamp", version="1.0")
    store = SessionStore(Path(data_dir))
    app.state.store = store

    if studio_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/studio", StaticFiles(directory=Path(studio_dir), html=True),
                  name="studio")

    def find(session_id: str) -> dict:
        try:
            return store.info(session_id)
        except SessionNotFound:
            raise HTTPException(404,
                                f"unknown session '{session_id}'")

    @app.post("/v1/sessions", response_model=schemas.SessionInfo,
              status_code=201)
    def create_session():
        state = store.create()
        return store.info(state["session_id"])

    @app.get("/v1/sessions/{session_id}", response_model=schemas.SessionInfo)
    def get_session(session_id: str):
        return find(session_id)

    @app.put("/v1/sessions/{session_id}/cloud",
             response_model=schemas.CloudSummary)
    async def upload_cloud(session_id: str, request: Request):
        find(session_id)
        body = await request.body()
        try:
            return store.upload_cloud(session_id, body)
        except PlyParseError as exc:
            raise HTTPException(422, str(exc))
        except WorkflowError as exc:
            raise HTTPException(409, str(exc))

    @app.put("/v1/sessions/{session_id}/annotations",
             response_model=schemas.DerivedGeometry)
    def put_annotations(session_id: str, body: schemas.AnnotationsRequest):
        find(session_id)
        try:
            strokes = [s.to_stroke() for s in body.strokes]
            space = body.searchspace.to_space() if body.searchspace else None
            zones, regions, space = store.put_annotations(session_id, strokes,
                                                          space)
        except (InsufficientSprayError, DegeneracyError, ValueError) as exc:
            if isinstance(exc, WorkflowError):
                raise HTTPException(409, str(exc))
            raise HTTPException(422, str(exc))
        return schemas.DerivedGeometry(
            zones=[schemas.ZoneModel(**z.to_json()) for z in zones],
            regions=[schemas.RegionModel(**r.to_json()) for r in regions],
            searchspace=schemas.SearchSpaceModel.from_space(space),
        )

    @app.post("/v1/sessions/{session_id}/optimize",
              response_model=schemas.RunHandle,
              status_code=202)
    def start_optimize(session_id: str, body: schemas.OptimizeRequest):
        find(session_id)
        try:
            state = store.start_optimize(
                session_id, body.robot, body.seed_targets, body.seed_opt,
                body.threshold, body.per_zone, body.max_evals)
        except WorkflowError as exc:
            raise HTTPException(409, str(exc))
        except FileNotFoundError as exc:
            raise HTTPException(422, str(exc))
        return schemas.RunHandle(session_id=session_id, status=state["status"],
                                 progress=state["progress"])

    @app.get("/v1/sessions/{session_id}/result")
    def get_result(session_id: str):
        find(session_id)
        try:
            payload = store.get_result_bytes(session_id)
        except WorkflowError as exc:
            raise HTTPException(409, str(exc))
        except SessionNotFound as exc:
            raise HTTPException(404, str(exc))
        # served verbatim so the payload matches result.json byte-for-byte
        return Response(content=payload, media_type="application/json")

    @app.patch("/v1/sessions/{session_id}/searchspace",
               response_model=schemas.SearchSpaceModel)
    def patch_searchspace(session_id: str, body: schemas.AdjustmentRequest):
        find(session_id)
        try:
            if body.op == "translate":
                if body.offset is None:
                    raise ValueError("translate needs 'offset'")
                op = Translate(np.array(body.offset, dtype=float))
            elif body.op == "scale":
                if body.fx is None or body.fy is None:
                    raise ValueError("scale needs 'fx' and 'fy'")
                op = Scale(body.fx, body.fy)
            else:
                if body.quaternion is None:
                    raise ValueError("rotate needs 'quaternion'")
                op = Rotate(np.array(body.quaternion, dtype=float))
            space = store.patch_searchspace(session_id, op)
        except WorkflowError as exc:
            raise HTTPException(409, str(exc))
        except ValueError as exc:
            raise HTTPException(422, str(exc))
        return schemas.SearchSpaceModel.from_space(space)

    return app
