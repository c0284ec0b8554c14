"""HTTP/JSON session service for the interactive normal editor.

Sessions hold a base mesh whose control normals can be edited; refined
levels are cached per (scheme, variant) and invalidated exactly when a
normal changes.  All geometry is computed here, never in the client.
"""

from __future__ import annotations

import base64
import binascii
import io
import threading
import uuid
import warnings

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from pydantic import BaseModel, Field

from .analysis import discrete_curvature, primitive_residual
from .errors import InputError, PNSubdError
from .meshes import PNMesh, load_obj, validate
from .refine import subdivide_surface
from .stencils import SCHEME_ALIASES

DEFAULT_MAX_LEVEL = 8


class NormalEdit(BaseModel):
    vertex: int
    normal: list[float] = Field(min_length=3, max_length=3)


class PatchBody(BaseModel):
    edits: list[NormalEdit]


class CreateBody(BaseModel):
    obj: str  # base64-encoded OBJ text


class Session:
    def __init__(self, mesh: PNMesh):
        self.mesh = mesh
        self.lock = threading.Lock()
        self.scheme: str | None = None
        self.variant: str | None = None
        self.cached: dict[int, PNMesh] = {}
        self.notes: dict[int, list[str]] = {}

    def invalidate(self) -> list[int]:
        dropped = sorted(self.cached)
        self.cached.clear()
        self.notes.clear()
        return dropped

    def level(self, level: int, scheme: str, variant: str) -> PNMesh:
        """Mesh after exactly ``level`` refinements of the current base."""
        if (scheme, variant) != (self.scheme, self.variant):
            self.invalidate()
            self.scheme, self.variant = scheme, variant
        if level == 0:
            return self.mesh
        start = max((k for k in self.cached if k <= level), default=0)
        mesh = self.cached.get(start, self.mesh)
        for k in range(start + 1, level + 1):
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                mesh = subdivide_surface(mesh, scheme, 1, variant)
            self.cached[k] = mesh
            self.notes[k] = sorted(str(w.message) for w in caught)
        return self.cached[level]


def _json_vectors(a: np.ndarray) -> list[list[float]]:
    return [[float(x) for x in row] for row in a]


def create_app(max_level: int = DEFAULT_MAX_LEVEL) -> FastAPI:
    app = FastAPI(title="pnsubd session service", docs_url=None,
                  redoc_url=None)
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()

    def get_session(session_id: str) -> Session:
        with registry_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    def check_request(level: int, scheme: str, variant: str):
        if level < 0 or level > max_level:
            raise HTTPException(
                status_code=400,
                detail=f"level must lie in 0..{max_level}",
            )
        if scheme.strip().lower() not in SCHEME_ALIASES:
            raise HTTPException(status_code=400,
                                detail=f"unknown scheme {scheme!r}")
        if variant not in ("linear", "pn", "modified", "pn-modified"):
            raise HTTPException(status_code=400,
                                detail=f"unknown variant {variant!r}")

    @app.post("/sessions")
    def create_session(body: CreateBody):
        try:
            raw = base64.b64decode(body.obj, validate=True)
        except (binascii.Error, ValueError) as exc:
            raise HTTPException(status_code=400,
                                detail=f"bad base64: {exc}") from exc
        try:
            mesh = load_obj(io.BytesIO(raw))
        except InputError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        session_id = uuid.uuid4().hex
        with registry_lock:
            sessions[session_id] = Session(mesh)
        return {"session_id": session_id,
                "report": validate(mesh).as_dict()}

    @app.get("/sessions/{session_id}/mesh")
    def get_mesh(session_id: str, level: int = 0,
                 variant: str = "pn", scheme: str = "cc",
                 curvature: int = 0):
        session = get_session(session_id)
        check_request(level, scheme, variant)
        with session.lock:
            try:
                mesh = session.level(level, scheme, variant)
            except PNSubdError as exc:
                raise HTTPException(status_code=422,
                                    detail=str(exc)) from exc
            payload = {
                "positions": _json_vectors(mesh.positions),
                "normals": _json_vectors(mesh.normals),
                "faces": mesh.faces.to_lists(),
                "warnings": sorted(
                    {note for k in range(1, level + 1)
                     for note in session.notes.get(k, [])}
                ),
            }
            if curvature:
                field = discrete_curvature(mesh)
                payload["curvature"] = {
                    "gaussian": [
                        float(g) if np.isfinite(g) else None
                        for g in field.gaussian
                    ],
                    "mean": [
                        float(h) if np.isfinite(h) else None
                        for h in field.mean
                    ],
                }
            return payload

    @app.patch("/sessions/{session_id}/normals")
    def patch_normals(session_id: str, body: PatchBody):
        session = get_session(session_id)
        with session.lock:
            normals = session.mesh.normals.copy()
            for edit in body.edits:
                if not (0 <= edit.vertex < session.mesh.vertex_count):
                    raise HTTPException(
                        status_code=400,
                        detail=f"vertex {edit.vertex} out of range",
                    )
                n = np.asarray(edit.normal, dtype=float)
                if not np.all(np.isfinite(n)):
                    raise HTTPException(status_code=400,
                                        detail="normal must be finite")
                length = float(np.linalg.norm(n))
                normals[edit.vertex] = n / length if length > 0.0 else 0.0
            session.mesh = PNMesh(session.mesh.positions, normals,
                                  session.mesh.faces)
            return {"invalidated_levels": session.invalidate()}

    @app.get("/sessions/{session_id}/analysis")
    def get_analysis(session_id: str, kind: str = Query(...),
                     level: int = 0, variant: str = "pn", scheme: str = "cc",
                     primitive: str | None = None,
                     center: str | None = None, axis: str | None = None,
                     radius: float | None = None,
                     major_radius: float | None = None,
                     minor_radius: float | None = None):
        session = get_session(session_id)
        check_request(level, scheme, variant)
        with session.lock:
            try:
                mesh = session.level(level, scheme, variant)
                if kind == "fit":
                    if primitive is None:
                        raise HTTPException(status_code=400,
                                            detail="primitive required")
                    params = {}
                    if center:
                        params["center"] = [float(x)
                                            for x in center.split(",")]
                    if axis:
                        params["axis"] = [float(x) for x in axis.split(",")]
                    if radius is not None:
                        params["radius"] = radius
                    if major_radius is not None:
                        params["major_radius"] = major_radius
                    if minor_radius is not None:
                        params["minor_radius"] = minor_radius
                    fit = primitive_residual(mesh.positions, primitive,
                                             params or None)
                    return fit.as_dict()
                if kind == "curvature":
                    field = discrete_curvature(mesh)
                    K = field.finite_gaussian()
                    H = field.mean[field.interior]
                    return {
                        "interior_vertices": int(field.interior.sum()),
                        "gaussian_min": float(K.min()) if K.size else None,
                        "gaussian_max": float(K.max()) if K.size else None,
                        "gaussian_mean": float(K.mean()) if K.size else None,
                        "mean_min": float(H.min()) if H.size else None,
                        "mean_max": float(H.max()) if H.size else None,
                    }
            except HTTPException:
                raise
            except PNSubdError as exc:
                raise HTTPException(status_code=422,
                                    detail=str(exc)) from exc
        raise HTTPException(status_code=400, detail=f"unknown kind {kind!r}")

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str):
        with registry_lock:
            if session_id not in sessions:
                raise HTTPException(status_code=404,
                                    detail="unknown session")
            del sessions[session_id]
        return {}

    @app.get("/sessions/{session_id}/export")
    def export_obj(session_id: str, level: int = 0, variant: str = "pn",
                   scheme: str = "cc"):
        from .meshes import obj_dumps

        session = get_session(session_id)
        check_request(level, scheme, variant)
        with session.lock:
            try:
                mesh = session.level(level, scheme, variant)
            except PNSubdError as exc:
                raise HTTPException(status_code=422,
                                    detail=str(exc)) from exc
            return {"obj": base64.b64encode(
                obj_dumps(mesh).encode()).decode()}

    return app
