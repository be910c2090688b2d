"""HTTP face of the backend: thin delegation with bearer-token auth.

Every endpoint authorizes first, then hands off to a manager, so any
property proven for the managers holds over the wire. Error bodies are
always {"code", "detail"}; the code vocabulary is the managers' own.
"""

from __future__ import annotations

import json
from contextlib import asynccontextmanager
from dataclasses import dataclass
from typing import Mapping

from fastapi import Depends, FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .backend import Backend
from .errors import (
    ConflictError,
    ForbiddenError,
    LectureKitError,
    NotFoundError,
    StorageError,
    ValidationError,
)
from .model import preview_descriptor
from .sessions import SubmissionParts
from .store import MIME_TYPES, BlobRef

# Per-part upload caps, sized for the 600 s limit ceiling.
PART_CAPS = {
    "ink": 5 * 1024 * 1024,
    "audio": 50 * 1024 * 1024,
    "video": 200 * 1024 * 1024,
    "poster": 2 * 1024 * 1024,
}

STATUS_BY_TYPE = {
    ValidationError: 422,
    NotFoundError: 404,
    ConflictError: 409,
    ForbiddenError: 403,
    StorageError: 500,
}

# Codes whose natural transport status differs from their exception class.
STATUS_BY_CODE = {
    "unauthorized": 401,
    "payload-too-large": 413,
    "unpublished": 409,
    "lesson-unpublished": 409,
    "lesson-published": 409,
    "not-yet-processed": 409,
}


class PayloadTooLarge(LectureKitError):
    def __init__(self, part: str, cap: int):
        super().__init__("payload-too-large", f"{part} part exceeds {cap} bytes")


@dataclass(frozen=True)
class Principal:
    user_id: str
    role: str  # teacher | student
    display_name: str


def _status_for(exc: LectureKitError) -> int:
    if exc.code in STATUS_BY_CODE:
        return STATUS_BY_CODE[exc.code]
    for klass, status in STATUS_BY_TYPE.items():
        if isinstance(exc, klass):
            return status
    return 500


def create_app(backend: Backend, tokens: Mapping[str, Principal]) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        backend.close()

    app = FastAPI(title="lecturekit", docs_url=None, redoc_url=None, lifespan=lifespan)

    # Provision display names up front so reads stay pure and gallery cards
    # can resolve student names.
    for p in tokens.values():
        backend.register_user(p.user_id, p.display_name, p.role)

    @app.exception_handler(LectureKitError)
    async def _lecturekit_error(request: Request, exc: LectureKitError):
        return JSONResponse(
            status_code=_status_for(exc), content={"code": exc.code, "detail": exc.detail}
        )

    def principal(request: Request) -> Principal:
        header = request.headers.get("authorization", "")
        if not header.lower().startswith("bearer "):
            raise LectureKitError("unauthorized", "missing bearer token")
        p = tokens.get(header[7:].strip())
        if p is None:
            raise LectureKitError("unauthorized", "unknown token")
        return p

    def require_teacher(p: Principal) -> None:
        if p.role != "teacher":
            raise ForbiddenError(f"{p.user_id} is not a teacher")

    def own_lesson(p: Principal, lesson_id: str):
        lesson = backend.lessons.get(lesson_id)
        if lesson.owner != p.user_id:
            raise ForbiddenError(f"{lesson_id} is owned by someone else")
        return lesson

    def gallery_access(p: Principal, exercise_id: str) -> None:
        _, lesson_id, student_access = backend.lessons.exercise_context(exercise_id)
        lesson = backend.lessons.get(lesson_id)
        if p.role == "teacher":
            if lesson.owner != p.user_id:
                raise ForbiddenError(f"{exercise_id} belongs to another teacher's lesson")
            return
        if not (lesson.published and student_access):
            raise ForbiddenError(f"gallery for {exercise_id} is not open to students")

    # -- lessons -----------------------------------------------------------------

    @app.post("/lessons", status_code=201)
    async def create_lesson(payload: dict, p: Principal = Depends(principal)):
        require_teacher(p)
        title = payload.get("title", "")
        if not isinstance(title, str):
            raise ValidationError("invalid-spec", "title must be a string")
        lesson = backend.lessons.create(title, p.user_id)
        return lesson.to_json()

    @app.get("/lessons")
    async def list_lessons(p: Principal = Depends(principal)):
        lessons = backend.lessons.list_lessons()
        if p.role == "teacher":
            visible = [l for l in lessons if l.owner == p.user_id]
        else:
            visible = [l for l in lessons if l.published]
        return {"lessons": [l.to_json() for l in visible]}

    @app.post("/lessons/{lesson_id}/segments", status_code=201)
    async def add_segment(lesson_id: str, payload: dict, p: Principal = Depends(principal)):
        require_teacher(p)
        own_lesson(p, lesson_id)
        kind = payload.get("type")
        if kind == "video":
            ref = payload.get("blob")
            if not isinstance(ref, dict) or "$blob" not in ref:
                raise ValidationError("invalid-spec", "video segments need {'blob': {'$blob':..}}")
            lesson = backend.lessons.add_video_segment(
                lesson_id, BlobRef.from_json(ref), payload.get("duration_ms")
            )
            return {"lesson": lesson.to_json(), "exercise_id": None}
        if kind == "exercise":
            lesson, exercise_id = backend.lessons.add_exercise_segment(lesson_id, payload)
            return {"lesson": lesson.to_json(), "exercise_id": exercise_id}
        raise ValidationError("invalid-spec", "segment type must be 'video' or 'exercise'")

    @app.post("/lessons/{lesson_id}/publish")
    async def publish_lesson(lesson_id: str, p: Principal = Depends(principal)):
        require_teacher(p)
        own_lesson(p, lesson_id)
        return backend.lessons.publish(lesson_id).to_json()

    @app.get("/lessons/{lesson_id}/timeline")
    async def get_timeline(lesson_id: str, p: Principal = Depends(principal)):
        lesson = backend.lessons.get(lesson_id)
        if not lesson.published:
            if p.role != "teacher" or lesson.owner != p.user_id:
                raise ConflictError("unpublished", f"{lesson_id} is not published")
        plan, previews = backend.lessons.timeline(lesson_id)
        return {
            "lesson_id": lesson_id,
            "title": lesson.title,
            "plan": plan.to_json(),
            "previews": [d.to_json() for d in previews],
        }

    # -- sessions & submission ------------------------------------------------------

    @app.post("/exercises/{exercise_id}/sessions", status_code=201)
    async def start_session(exercise_id: str, payload: dict, p: Principal = Depends(principal)):
        replaces = payload.get("replaces")
        if replaces is None:
            session, descriptor = backend.sessions.start(exercise_id, p.user_id)
        else:
            old = backend.sessions.get(replaces)
            if old.student_id != p.user_id:
                raise ForbiddenError("cannot discard another student's session")
            if old.exercise_id != exercise_id:
                raise NotFoundError("unknown-session", f"{replaces} is for another exercise")
            session = backend.sessions.discard_and_rerecord(replaces)
            spec, _, _ = backend.lessons.exercise_context(exercise_id)
            descriptor = preview_descriptor(spec)
        return {"session": session_json(session), "preview": descriptor.to_json()}

    async def _read_part(form, name: str) -> bytes | None:
        part = form.get(name)
        if part is None:
            return None
        if isinstance(part, str):
            data = part.encode()
        else:
            data = await part.read()
        if len(data) > PART_CAPS[name]:
            raise PayloadTooLarge(name, PART_CAPS[name])
        return data

    @app.post("/exercises/{exercise_id}/responses", status_code=201)
    async def submit_response(exercise_id: str, request: Request, p: Principal = Depends(principal)):
        form = await request.form()
        raw_meta = form.get("metadata")
        if raw_meta is None:
            raise ValidationError("malformed-artifact", "missing metadata part")
        if not isinstance(raw_meta, str):
            raw_meta = (await raw_meta.read()).decode()
        try:
            meta = json.loads(raw_meta)
        except ValueError as exc:
            raise ValidationError("malformed-artifact", f"metadata is not JSON: {exc}") from None
        if not isinstance(meta, dict) or not isinstance(meta.get("session"), str):
            raise ValidationError("malformed-artifact", "metadata needs a session token")

        session = backend.sessions.get(meta["session"])
        if session.student_id != p.user_id:
            raise ForbiddenError("session belongs to another student")
        if session.exercise_id != exercise_id:
            raise NotFoundError("unknown-session", "session is for another exercise")

        parts = SubmissionParts(
            ink=await _read_part(form, "ink"),
            audio=await _read_part(form, "audio"),
            video=await _read_part(form, "video"),
            poster=await _read_part(form, "poster"),
        )
        bundle = backend.sessions.submit(
            meta["session"], parts, meta.get("declared_duration_ms"), meta.get("ratings")
        )
        return {
            "response_id": bundle.response_id,
            "duration_ms": bundle.duration_ms,
            "labels": list(bundle.labels),
            "consistency_warnings": list(bundle.consistency_warnings),
        }

    # -- gallery -----------------------------------------------------------------

    @app.get("/exercises/{exercise_id}/gallery")
    async def list_gallery(
        exercise_id: str,
        sort: str = "submitted_at",
        dir: str = "asc",
        mode: str | None = None,
        review: str | None = None,
        p: Principal = Depends(principal),
    ):
        gallery_access(p, exercise_id)
        cards = backend.gallery.list_responses(
            exercise_id,
            sort_key=sort,
            direction=dir,
            mode_present=mode,
            review_status=review,
            viewer_id=p.user_id,
        )
        if p.role != "teacher":
            # Absence labels are teacher-facing quality signals, not for peers.
            return {"cards": [dict(c.to_json(), labels=[]) for c in cards]}
        return {"cards": [c.to_json() for c in cards]}

    @app.get("/responses/{response_id}/manifest")
    async def get_manifest(response_id: str, p: Principal = Depends(principal)):
        bundle = backend.sessions.response(response_id)
        gallery_access(p, bundle.exercise_id)
        return backend.gallery.playback_manifest(response_id, p.user_id).to_json()

    @app.get("/responses/{response_id}/annotations")
    async def list_annotations(response_id: str, p: Principal = Depends(principal)):
        bundle = backend.sessions.response(response_id)
        gallery_access(p, bundle.exercise_id)
        return {
            "annotations": [a.to_json() for a in backend.gallery.list_annotations(response_id)]
        }

    @app.post("/responses/{response_id}/annotations", status_code=201)
    async def add_annotation(response_id: str, payload: dict, p: Principal = Depends(principal)):
        bundle = backend.sessions.response(response_id)
        gallery_access(p, bundle.exercise_id)
        annotation = backend.gallery.add_annotation(
            p.user_id,
            response_id,
            payload.get("kind", ""),
            payload.get("body"),
            payload.get("parent_id"),
        )
        return annotation.to_json()

    # -- blobs -----------------------------------------------------------------

    @app.get("/blobs/{hash_}")
    async def get_blob(hash_: str, p: Principal = Depends(principal)):
        data = backend.store.read_blob(hash_)
        media_type = backend.store.blob_media_type(hash_)
        return Response(content=data, media_type=MIME_TYPES.get(media_type, "application/octet-stream"))

    return app


def session_json(session) -> dict:
    return dict(session.to_json(), session_id=session.session_id)
