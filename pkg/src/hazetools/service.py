"""Interactive refinement service.

Sessions hold an uploaded image plus an accumulating list of transmission
messages. Each stroke batch turns into one message (the union of its
constraint strokes, with the target taken from the picker stroke or from the
lower bound), triggers a re-solve, and pushes a new revision. Undo pops a
revision and serves the previously encoded previews byte for byte.

State lives in process memory; an optional persist directory lets sessions
survive restarts by replaying their message lists. Expiry is lazy: stale
sessions are dropped on the next store access, after `ttl` seconds without
activity on the injected clock.
"""

from __future__ import annotations

import argparse
import base64
import dataclasses
import json
import logging
import os
import threading
import time
import uuid
from typing import Callable, Literal, Optional

import numpy as np
from fastapi import FastAPI, File, Form, HTTPException, Response, UploadFile
from pydantic import BaseModel, Field

from .errors import AirlightError, ConfigError, ImageFormatError, MessageError, SolverError
from .image import ImageRgb, decode_image, encode_png
from .pipeline import (
    TARGET_FEASIBILITY_TOL,
    DehazeConfig,
    DehazeResult,
    EwdcMessage,
    apply_messages,
    config_from_dict,
    config_to_dict,
)
from .report import pseudocolor, weight_preview

__all__ = ["create_app", "main", "MAX_UPLOAD_BYTES", "DEFAULT_TTL_SECONDS", "PREVIEW_NAMES"]

logger = logging.getLogger(__name__)

MAX_UPLOAD_BYTES = 25 * 1024 * 1024
DEFAULT_TTL_SECONDS = 1800.0
PREVIEW_NAMES = ("input", "j", "t", "b", "weights")


class StrokeModel(BaseModel):
    kind: Literal["constraint", "picker"]
    pixels: list[tuple[int, int]] = Field(min_length=1)


class StrokesRequest(BaseModel):
    strokes: list[StrokeModel] = Field(min_length=1)


@dataclasses.dataclass
class _Revision:
    previews: dict  # name -> encoded PNG bytes
    transmission: np.ndarray
    t_s: Optional[float]


@dataclasses.dataclass
class _Session:
    id: str
    upload: bytes
    image: ImageRgb
    config: DehazeConfig
    airlight: tuple
    width: int
    height: int
    bound: np.ndarray
    messages: list
    revisions: list
    last_access: float
    lock: threading.Lock


def _run_pipeline(image: ImageRgb, config: DehazeConfig, messages: list) -> DehazeResult:
    """Run the pipeline, mapping domain failures onto HTTP status codes."""
    try:
        return apply_messages(image, config, messages)
    except AirlightError as err:
        raise HTTPException(status_code=422, detail=str(err)) from err
    except SolverError as err:
        raise HTTPException(status_code=500, detail=f"solver failed: {err}") from err


def _render_previews(result: DehazeResult) -> dict:
    gray = weight_preview(result.weights).data
    return {
        "input": encode_png(result.image),
        "j": encode_png(result.radiance),
        "t": encode_png(pseudocolor(result.transmission)),
        "b": encode_png(pseudocolor(result.bound)),
        "weights": encode_png(ImageRgb(np.repeat(gray[:, :, None], 3, axis=2))),
    }


def _preview_urls(session_id: str, revision: int) -> dict:
    return {
        name: f"/sessions/{session_id}/preview/{name}.png?rev={revision}"
        for name in PREVIEW_NAMES
    }


class _Store:
    """Session registry with lazy TTL expiry and optional disk persistence."""

    def __init__(self, ttl: float, clock: Callable[[], float], persist_dir: Optional[str]):
        self.ttl = ttl
        self.clock = clock
        self.persist_dir = persist_dir
        self.sessions: dict[str, _Session] = {}
        self.lock = threading.Lock()
        if persist_dir:
            os.makedirs(persist_dir, exist_ok=True)
            self._restore_all()

    def _evict_stale(self) -> None:
        now = self.clock()
        for sid in [s for s, sess in self.sessions.items()
                    if now - sess.last_access > self.ttl]:
            logger.info("session %s expired", sid)
            del self.sessions[sid]
            self._drop_persisted(sid)

    def add(self, session: _Session) -> None:
        with self.lock:
            self._evict_stale()
            self.sessions[session.id] = session
        self._persist(session)

    def get(self, session_id: str) -> _Session:
        with self.lock:
            self._evict_stale()
            session = self.sessions.get(session_id)
            if session is None:
                raise HTTPException(status_code=404, detail="unknown or expired session")
            session.last_access = self.clock()
            return session

    def _session_path(self, session_id: str) -> str:
        return os.path.join(self.persist_dir, f"{session_id}.json")

    def _persist(self, session: _Session) -> None:
        if not self.persist_dir:
            return
        doc = {
            "id": session.id,
            "upload": base64.b64encode(session.upload).decode("ascii"),
            "config": config_to_dict(session.config),
            "messages": [m.to_dict() for m in session.messages],
        }
        path = self._session_path(session.id)
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(doc, fh)
        os.replace(tmp, path)

    def _drop_persisted(self, session_id: str) -> None:
        if not self.persist_dir:
            return
        try:
            os.unlink(self._session_path(session_id))
        except FileNotFoundError:
            pass

    def _restore_all(self) -> None:
        for entry in sorted(os.listdir(self.persist_dir)):
            if not entry.endswith(".json"):
                continue
            path = os.path.join(self.persist_dir, entry)
            try:
                with open(path) as fh:
                    doc = json.load(fh)
                session = _rebuild_session(doc, self.clock())
            except Exception:
                logger.exception("could not restore session from %s", path)
                continue
            self.sessions[session.id] = session
            logger.info("restored session %s (%d messages)", session.id,
                        len(session.messages))


def _build_session(session_id: str, upload: bytes, image: ImageRgb,
                   config: DehazeConfig, now: float) -> _Session:
    result = _run_pipeline(image, config, [])
    revision = _Revision(previews=_render_previews(result),
                         transmission=result.transmission.data, t_s=None)
    return _Session(
        id=session_id,
        upload=upload,
        image=image,
        config=config,
        airlight=tuple(float(v) for v in result.airlight.rgb),
        width=result.image.width,
        height=result.image.height,
        bound=result.bound.data,
        messages=[],
        revisions=[revision],
        last_access=now,
        lock=threading.Lock(),
    )


def _rebuild_session(doc: dict, now: float) -> _Session:
    upload = base64.b64decode(doc["upload"])
    image = decode_image(upload, label="persisted upload")
    config = config_from_dict(doc.get("config", {}))
    session = _build_session(doc["id"], upload, image, config, now)
    for entry in doc.get("messages", []):
        message = EwdcMessage.from_dict(entry)
        session.messages.append(message)
        result = apply_messages(image, config, session.messages)
        session.revisions.append(_Revision(
            previews=_render_previews(result),
            transmission=result.transmission.data,
            t_s=message.target,
        ))
    return session


def create_app(
    ttl: float = DEFAULT_TTL_SECONDS,
    clock: Callable[[], float] = time.monotonic,
    persist_dir: Optional[str] = None,
    static_dir: Optional[str] = None,
) -> FastAPI:
    app = FastAPI(title="hazetools refinement service")
    store = _Store(ttl=ttl, clock=clock, persist_dir=persist_dir)
    app.state.store = store

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(
        image: UploadFile = File(...),
        config: Optional[str] = Form(None),
    ) -> dict:
        data = image.file.read(MAX_UPLOAD_BYTES + 1)
        if len(data) > MAX_UPLOAD_BYTES:
            raise HTTPException(status_code=413, detail="upload exceeds 25 MiB")
        try:
            decoded = decode_image(data, label=image.filename or "upload")
        except ImageFormatError as err:
            raise HTTPException(status_code=400, detail=str(err)) from err
        if config:
            try:
                cfg = config_from_dict(json.loads(config))
            except json.JSONDecodeError as err:
                raise HTTPException(status_code=422, detail=f"config is not valid JSON: {err}") from err
            except ConfigError as err:
                raise HTTPException(status_code=422, detail=str(err)) from err
        else:
            cfg = DehazeConfig()
        session = _build_session(uuid.uuid4().hex, data, decoded, cfg, store.clock())
        store.add(session)
        return {
            "id": session.id,
            "width": session.width,
            "height": session.height,
            "revision": 0,
            "airlight": list(session.airlight),
            "config": config_to_dict(session.config),
            "previews": _preview_urls(session.id, 0),
        }

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        session = store.get(session_id)
        with session.lock:
            revision = len(session.revisions) - 1
            return {
                "id": session.id,
                "width": session.width,
                "height": session.height,
                "revision": revision,
                "airlight": list(session.airlight),
                "config": config_to_dict(session.config),
                "messages": [m.to_dict() for m in session.messages],
                "previews": _preview_urls(session.id, revision),
            }

    @app.post("/sessions/{session_id}/strokes")
    def post_strokes(session_id: str, body: StrokesRequest) -> dict:
        session = store.get(session_id)
        with session.lock:
            constraints = [s for s in body.strokes if s.kind == "constraint"]
            pickers = [s for s in body.strokes if s.kind == "picker"]
            if not constraints:
                raise HTTPException(status_code=422,
                                    detail="at least one constraint stroke is required")
            if len(pickers) > 1:
                raise HTTPException(status_code=422,
                                    detail="at most one picker stroke is allowed")

            pixels = np.unique(np.concatenate(
                [np.asarray(s.pixels, dtype=np.int64) for s in constraints]), axis=0)
            xs, ys = pixels[:, 0], pixels[:, 1]
            if (xs.min() < 0 or ys.min() < 0
                    or xs.max() >= session.width or ys.max() >= session.height):
                raise HTTPException(
                    status_code=422,
                    detail=f"stroke pixel out of bounds for "
                           f"{session.width}x{session.height} working frame")
            bound_max = float(session.bound[ys, xs].max())

            if pickers:
                pk = np.asarray(pickers[0].pixels, dtype=np.int64)
                pxs, pys = pk[:, 0], pk[:, 1]
                if (pxs.min() < 0 or pys.min() < 0
                        or pxs.max() >= session.width or pys.max() >= session.height):
                    raise HTTPException(
                        status_code=422,
                        detail=f"picker pixel out of bounds for "
                               f"{session.width}x{session.height} working frame")
                current_t = session.revisions[-1].transmission
                t_s = float(current_t[pys, pxs].mean())
            else:
                t_s = bound_max

            if t_s < bound_max - TARGET_FEASIBILITY_TOL:
                raise HTTPException(status_code=422, detail={
                    "message": "target below the transmission lower bound on the stroke",
                    "t_s": t_s,
                    "min_allowed": bound_max,
                })

            message = EwdcMessage(pixels=pixels, target=min(t_s, 1.0))
            try:
                result = _run_pipeline(session.image, session.config,
                                       session.messages + [message])
            except MessageError as err:
                raise HTTPException(status_code=422, detail=str(err)) from err
            session.messages.append(message)
            session.revisions.append(_Revision(
                previews=_render_previews(result),
                transmission=result.transmission.data,
                t_s=message.target,
            ))
            revision = len(session.revisions) - 1
        store._persist(session)
        return {
            "revision": revision,
            "t_s": message.target,
            "previews": _preview_urls(session.id, revision),
        }

    @app.post("/sessions/{session_id}/undo")
    def post_undo(session_id: str) -> dict:
        session = store.get(session_id)
        with session.lock:
            if len(session.revisions) <= 1:
                raise HTTPException(status_code=409, detail="nothing to undo")
            session.revisions.pop()
            session.messages.pop()
            revision = len(session.revisions) - 1
            t_s = session.revisions[-1].t_s
        store._persist(session)
        return {
            "revision": revision,
            "t_s": t_s,
            "previews": _preview_urls(session.id, revision),
        }

    @app.get("/sessions/{session_id}/preview/{name}.png")
    def get_preview(session_id: str, name: str) -> Response:
        if name not in PREVIEW_NAMES:
            raise HTTPException(status_code=404, detail=f"no preview named {name!r}")
        session = store.get(session_id)
        with session.lock:
            data = session.revisions[-1].previews[name]
        return Response(content=data, media_type="image/png")

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hazetools-serve",
                                     description="interactive refinement HTTP service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8765)
    parser.add_argument("--ttl", type=float, default=DEFAULT_TTL_SECONDS,
                        help="idle seconds before a session expires")
    parser.add_argument("--persist-dir", default=None,
                        help="directory for session state that survives restarts")
    parser.add_argument("--static-dir", default=None,
                        help="serve a built frontend from this directory at /")
    args = parser.parse_args(argv)

    import uvicorn

    logging.basicConfig(level=logging.INFO)
    app = create_app(ttl=args.ttl, persist_dir=args.persist_dir, static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
