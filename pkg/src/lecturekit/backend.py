"""Composition root: one store shared by the lesson, session, and gallery
managers, plus user registration and post-processing sweeps."""

from __future__ import annotations

from pathlib import Path
from typing import Callable

from .analysis import process_response
from .errors import NotFoundError, ValidationError
from .gallery import GalleryManager
from .lessons import LessonManager
from .sessions import SessionManager
from .store import RecordWrite, Store

ROLES = ("teacher", "student")


class Backend:
    def __init__(
        self,
        data_dir: str | Path,
        fetch_url: Callable[[str], bytes] | None = None,
        auto_process: bool = True,
        fsync: bool = True,
    ):
        self.store = Store(data_dir, fsync=fsync)
        self.lessons = LessonManager(self.store, fetch_url)
        self.sessions = SessionManager(self.store, self.lessons, auto_process)
        self.gallery = GalleryManager(self.store, self.lessons)

    def close(self) -> None:
        self.store.close()

    # -- users -----------------------------------------------------------------

    def register_user(self, user_id: str, display_name: str, role: str) -> None:
        if role not in ROLES:
            raise ValidationError("unknown-role", f"{role!r} not in {ROLES}")
        if not user_id or not display_name.strip():
            raise ValidationError("invalid-user", "user_id and display_name are required")
        body = {"display_name": display_name, "role": role}
        record = self.store.get("user", user_id)
        if record is None:
            self.store.commit([RecordWrite("user", user_id, None, body)])
        elif record.body != body:
            self.store.commit([RecordWrite("user", user_id, record.version, body)])

    def user_role(self, user_id: str) -> str:
        record = self.store.get("user", user_id)
        if record is None:
            raise NotFoundError("unknown-user", user_id)
        return record.body["role"]

    # -- maintenance -------------------------------------------------------------

    def process_pending(self) -> int:
        return self.sessions.process_pending()

    def reprocess(self, exercise_id: str | None = None) -> int:
        """Re-run labeling and thumbnails; a fixed point when nothing changed."""
        count = 0
        for record in self.store.list("response"):
            if exercise_id is not None and record.body["exercise_id"] != exercise_id:
                continue
            process_response(self.store, record.record_id)
            count += 1
        return count

    def gc(self, window_s: float | None = None) -> int:
        if window_s is None:
            return self.store.gc_orphans()
        return self.store.gc_orphans(window_s)
