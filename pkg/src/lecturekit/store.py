"""Durable single-node persistence.

Two halves:

* a content-addressed blob store (``blobs/<first-2-hex>/<sha256>``) for media
  artifacts — identical bytes always land at the same path, giving free
  deduplication;
* a versioned metadata-record store (``meta/``) with a write-ahead log.
  A commit appends one fsynced WAL line covering every record write, then
  applies them in memory, so readers only ever see whole transactions and a
  crash at any point leaves either the pre- or post-commit state.

Records returned by :meth:`Store.get` / :meth:`Store.list` are the live
in-memory objects; callers must treat bodies as read-only and write changes
back through :meth:`Store.commit` with the record's version as
``expected_version``.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import ConflictError, NotFoundError, StorageError, ValidationError
from .util import canon_json

MEDIA_TYPES = ("ink-json", "wav", "video", "png", "jpeg")

#: media_type -> MIME type used when serving blob bytes over HTTP
MIME_TYPES = {
    "ink-json": "application/json",
    "wav": "audio/wav",
    "video": "application/octet-stream",
    "png": "image/png",
    "jpeg": "image/jpeg",
}

GC_WINDOW_S = 3600  # blobs younger than this are never collected


@dataclass(frozen=True)
class BlobRef:
    """Content address of a stored blob: sha256 hex digest + declared media type."""

    hash: str
    media_type: str

    def to_json(self) -> dict:
        return {"$blob": self.hash, "media_type": self.media_type}

    @classmethod
    def from_json(cls, obj: dict) -> "BlobRef":
        return cls(hash=obj["$blob"], media_type=obj["media_type"])


@dataclass
class Record:
    """One committed metadata document. ``version`` bumps by exactly 1 per update."""

    kind: str
    record_id: str
    version: int
    body: dict


@dataclass(frozen=True)
class RecordWrite:
    """One write inside a commit; ``expected_version=None`` means create."""

    kind: str
    record_id: str
    expected_version: int | None
    body: dict


def iter_blob_hashes(obj) -> Iterable[str]:
    """Yield every blob hash referenced anywhere inside a JSON-ish body."""
    if isinstance(obj, dict):
        if "$blob" in obj and isinstance(obj["$blob"], str):
            yield obj["$blob"]
        for v in obj.values():
            yield from iter_blob_hashes(v)
    elif isinstance(obj, (list, tuple)):
        for v in obj:
            yield from iter_blob_hashes(v)


class Store:
    """Single-directory persistence with atomic multi-record commits.

    ``op_hook`` is a fault-injection point for crash-consistency tests: when
    set, it is called with a step name at every durable operation and may
    raise to simulate a crash between steps.
    """

    def __init__(self, root: str | Path, fsync: bool = True):
        self.root = Path(root)
        self.fsync = fsync
        self.op_hook: Callable[[str], None] | None = None
        self._blob_dir = self.root / "blobs"
        self._tmp_dir = self._blob_dir / "tmp"
        self._meta_dir = self.root / "meta"
        self._wal_path = self._meta_dir / "wal.log"
        self._snap_path = self._meta_dir / "snapshot.json"
        self._records: dict[tuple[str, str], Record] = {}
        self._lock = threading.RLock()
        for d in (self._blob_dir, self._tmp_dir, self._meta_dir):
            d.mkdir(parents=True, exist_ok=True)
        self._recover()
        self._wal_file = open(self._wal_path, "ab")

    # -- lifecycle -----------------------------------------------------------

    def _recover(self) -> None:
        if self._snap_path.exists():
            snap = json.loads(self._snap_path.read_text("utf-8"))
            for kind, rid, version, body in snap["records"]:
                self._records[(kind, rid)] = Record(kind, rid, version, body)
        if not self._wal_path.exists():
            return
        good = 0
        with open(self._wal_path, "rb") as f:
            data = f.read()
        pos = 0
        while pos < len(data):
            nl = data.find(b"\n", pos)
            if nl < 0:
                break  # torn tail from a crash mid-append
            line = data[pos : nl]
            try:
                txn = json.loads(line)
                writes = txn["w"]
            except (ValueError, KeyError, TypeError):
                break
            for kind, rid, version, body in writes:
                cur = self._records.get((kind, rid))
                if cur is None or version > cur.version:
                    self._records[(kind, rid)] = Record(kind, rid, version, body)
            pos = nl + 1
            good = pos
        if good != len(data):
            with open(self._wal_path, "r+b") as f:
                f.truncate(good)

    def close(self) -> None:
        """Flush everything into a snapshot and release the WAL handle."""
        with self._lock:
            self.compact()
            self._wal_file.close()

    def compact(self) -> None:
        """Fold the WAL into a fresh snapshot and truncate the log."""
        with self._lock:
            records = [
                [r.kind, r.record_id, r.version, r.body]
                for r in sorted(self._records.values(), key=lambda r: (r.kind, r.record_id))
            ]
            tmp = self._snap_path.with_suffix(".tmp")
            with open(tmp, "wb") as f:
                f.write(canon_json({"records": records}))
                f.flush()
                if self.fsync:
                    os.fsync(f.fileno())
            os.replace(tmp, self._snap_path)
            self._wal_file.close()
            self._wal_file = open(self._wal_path, "wb")

    def _hook(self, step: str) -> None:
        if self.op_hook is not None:
            self.op_hook(step)

    # -- blobs ---------------------------------------------------------------

    def blob_path(self, hash_: str) -> Path:
        return self._blob_dir / hash_[:2] / hash_

    def put_blob(self, content: bytes, media_type: str) -> BlobRef:
        """Store bytes durably; identical content returns the identical ref."""
        if not content:
            raise ValidationError("empty-content", "blobs must be non-empty")
        if media_type not in MEDIA_TYPES:
            raise ValueError(f"unknown media type {media_type!r}")
        digest = hashlib.sha256(content).hexdigest()
        path = self.blob_path(digest)
        self._hook("blob-check")
        if path.exists():
            return BlobRef(digest, media_type)
        tmp = self._tmp_dir / uuid.uuid4().hex
        try:
            with open(tmp, "wb") as f:
                self._hook("blob-write")
                f.write(content)
                f.flush()
                if self.fsync:
                    os.fsync(f.fileno())
            path.parent.mkdir(exist_ok=True)
            self._hook("blob-rename")
            os.replace(tmp, path)
        except OSError as exc:
            tmp.unlink(missing_ok=True)
            if exc.errno == 28:  # ENOSPC
                raise StorageError("storage-full", str(exc)) from exc
            raise StorageError("io-error", str(exc)) from exc
        return BlobRef(digest, media_type)

    def has_blob(self, hash_: str) -> bool:
        return self.blob_path(hash_).exists()

    def blob_media_type(self, hash_: str) -> str:
        """Best-effort media type from content magic (refs carry the real one)."""
        head = self.read_blob(hash_)[:16]
        if head.startswith(b"\x89PNG\r\n\x1a\n"):
            return "png"
        if head.startswith(b"\xff\xd8\xff"):
            return "jpeg"
        if head[:4] == b"RIFF" and head[8:12] == b"WAVE":
            return "wav"
        if head[:1] in (b"{", b"["):
            return "ink-json"
        return "video"

    def read_blob(self, hash_: str) -> bytes:
        try:
            return self.blob_path(hash_).read_bytes()
        except FileNotFoundError:
            raise NotFoundError("missing-blob", hash_) from None

    # -- records -------------------------------------------------------------

    def get(self, kind: str, record_id: str) -> Record | None:
        with self._lock:
            return self._records.get((kind, record_id))

    def list(self, kind: str) -> list[Record]:
        with self._lock:
            found = [r for (k, _), r in self._records.items() if k == kind]
        found.sort(key=lambda r: r.record_id)
        return found

    def commit(self, writes: Sequence[RecordWrite], require_blobs: Iterable[str] = ()) -> list[Record]:
        """Apply all writes atomically; raise without side effects otherwise."""
        with self._lock:
            self._hook("commit-begin")
            for h in require_blobs:
                if not self.has_blob(h):
                    raise NotFoundError("missing-blob", h)
            applied: list[Record] = []
            for w in writes:
                cur = self._records.get((w.kind, w.record_id))
                if w.expected_version is None:
                    if cur is not None:
                        raise ConflictError(
                            "version-conflict", f"{w.kind}/{w.record_id} already exists"
                        )
                    version = 1
                else:
                    if cur is None or cur.version != w.expected_version:
                        raise ConflictError(
                            "version-conflict",
                            f"{w.kind}/{w.record_id} expected v{w.expected_version}",
                        )
                    version = w.expected_version + 1
                applied.append(Record(w.kind, w.record_id, version, w.body))
            line = canon_json({"w": [[r.kind, r.record_id, r.version, r.body] for r in applied]})
            self._hook("wal-write-pre")
            try:
                self._wal_file.write(line + b"\n")
                self._wal_file.flush()
                if self.fsync:
                    os.fsync(self._wal_file.fileno())
            except OSError as exc:
                if exc.errno == 28:
                    raise StorageError("storage-full", str(exc)) from exc
                raise StorageError("io-error", str(exc)) from exc
            self._hook("wal-fsync-post")
            for r in applied:
                self._records[(r.kind, r.record_id)] = r
            self._hook("commit-applied")
            return applied

    def allocate_id(self, prefix: str) -> str:
        """Durable monotonic id of the form ``<prefix>-00000001``.

        Ids burned by a crash after allocation are acceptable: the sequence
        stays monotonic, not dense.
        """
        with self._lock:
            cur = self._records.get(("seq", prefix))
            n = (cur.body["n"] if cur else 0) + 1
            self.commit(
                [RecordWrite("seq", prefix, cur.version if cur else None, {"n": n})]
            )
            return f"{prefix}-{n:08d}"

    # -- garbage collection ----------------------------------------------------

    def gc_orphans(self, window_s: float = GC_WINDOW_S, now: float | None = None) -> int:
        """Delete blobs referenced by no committed record and older than the window."""
        now = time.time() if now is None else now
        removed = 0
        with self._lock:  # excludes concurrent commits from racing the scan
            referenced: set[str] = set()
            for record in self._records.values():
                referenced.update(iter_blob_hashes(record.body))
            for sub in self._blob_dir.iterdir():
                if sub.name == "tmp" or not sub.is_dir():
                    continue
                for path in sub.iterdir():
                    if path.name in referenced:
                        continue
                    try:
                        if path.stat().st_mtime <= now - window_s:
                            path.unlink()
                            removed += 1
                    except FileNotFoundError:
                        continue
        return removed
