"""Operator CLI: serve the HTTP service, import lessons, simulate student
populations, export galleries, reprocess labels, collect orphan blobs.

Exit codes: 0 success; 3 validation; 4 not found; 5 conflict; 6 storage/IO;
7 forbidden; 1 anything else. Failures print one JSON object
{"code", "detail"} to stderr so scripts can parse them.
"""

from __future__ import annotations

import json
import socket
import sys
from pathlib import Path

import click
import yaml

from .backend import Backend
from .errors import (
    ConflictError,
    ForbiddenError,
    LectureKitError,
    NotFoundError,
    StorageError,
    ValidationError,
)
from .lessons import sniff_image_type
from .simulate import SimProfile, run_simulation

EXIT_CODES = (
    (ValidationError, 3),
    (NotFoundError, 4),
    (ConflictError, 5),
    (StorageError, 6),
    (ForbiddenError, 7),
)


def _fail(exc: LectureKitError) -> None:
    sys.stderr.write(json.dumps({"code": exc.code, "detail": exc.detail}) + "\n")
    for klass, code in EXIT_CODES:
        if isinstance(exc, klass):
            sys.exit(code)
    sys.exit(1)


def run_guarded(fn):
    try:
        fn()
    except LectureKitError as exc:
        _fail(exc)


data_dir_option = click.option(
    "--data-dir",
    required=True,
    type=click.Path(file_okay=False),
    help="Store root directory (created if absent).",
)


@click.group()
def main() -> None:
    """Interactive multimedia lecture exercises: author, record, review."""


# -- serve ------------------------------------------------------------------


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            config = yaml.safe_load(f)
    except FileNotFoundError:
        raise ValidationError("bad-config", f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ValidationError("bad-config", f"config is not valid YAML: {exc}") from None
    if not isinstance(config, dict) or "data_dir" not in config:
        raise ValidationError("bad-config", "config must be a mapping with a data_dir key")
    return config


def _load_tokens(config: dict, config_path: str):
    from .service import Principal

    raw = config.get("tokens")
    if raw is None and "tokens_file" in config:
        tokens_path = Path(config_path).parent / config["tokens_file"]
        try:
            raw = yaml.safe_load(tokens_path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ValidationError("bad-config", f"tokens file not found: {tokens_path}") from None
        except yaml.YAMLError as exc:
            raise ValidationError("bad-config", f"tokens file is not valid YAML: {exc}") from None
    if not isinstance(raw, dict) or not raw:
        raise ValidationError("bad-config", "no auth tokens configured (tokens or tokens_file)")
    tokens = {}
    for token, p in raw.items():
        try:
            tokens[str(token)] = Principal(p["user_id"], p["role"], p["display_name"])
        except (TypeError, KeyError):
            raise ValidationError(
                "bad-config", f"token {token!r} needs user_id, role, display_name"
            ) from None
        if tokens[str(token)].role not in ("teacher", "student"):
            raise ValidationError("bad-config", f"token {token!r}: bad role {p['role']!r}")
    return tokens


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="YAML config file.")
def serve(config_path: str) -> None:
    """Run the HTTP service until signaled; shutdown flushes the store."""

    def go():
        import uvicorn

        from .service import create_app

        config = _load_config(config_path)
        host = str(config.get("host", "127.0.0.1"))
        port = int(config.get("port", 8080))
        data_dir = Path(config["data_dir"])
        if not data_dir.parent.exists():
            raise ValidationError("bad-config", f"data_dir parent missing: {data_dir.parent}")
        tokens = _load_tokens(config, config_path)

        probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            probe.bind((host, port))
        except OSError as exc:
            raise ValidationError("port-in-use", f"{host}:{port}: {exc}") from None
        finally:
            probe.close()

        backend = Backend(data_dir)
        app = create_app(backend, tokens)
        uvicorn.run(app, host=host, port=port, log_level="warning")

    run_guarded(go)


# -- import-lesson ------------------------------------------------------------


def import_manifest(backend: Backend, manifest: dict, base_dir: Path, owner: str) -> str:
    """Build an unpublished lesson from a manifest document; blobs dedup."""
    if not isinstance(manifest, dict) or not isinstance(manifest.get("title"), str):
        raise ValidationError("bad-manifest", "manifest needs a title string")
    segments = manifest.get("segments")
    if not isinstance(segments, list) or not segments:
        raise ValidationError("bad-manifest", "manifest needs a non-empty segments list")

    def read_file(name) -> bytes:
        if not isinstance(name, str):
            raise ValidationError("bad-manifest", f"file must be a path string, got {name!r}")
        path = base_dir / name
        try:
            return path.read_bytes()
        except FileNotFoundError:
            raise NotFoundError("missing-file", str(path)) from None

    lesson = backend.lessons.create(manifest["title"], owner)
    for i, seg in enumerate(segments):
        if not isinstance(seg, dict):
            raise ValidationError("bad-manifest", f"segment {i} is not an object")
        kind = seg.get("type")
        if kind == "video":
            ref = backend.store.put_blob(read_file(seg.get("file")), "video")
            backend.lessons.add_video_segment(lesson.lesson_id, ref, seg.get("duration_ms"))
        elif kind == "exercise":
            payload = dict(seg)
            background = payload.get("background")
            if isinstance(background, str):
                payload["background"] = {"url": background}
            elif isinstance(background, dict) and "file" in background:
                data = read_file(background["file"])
                media_type = sniff_image_type(data)
                if media_type is None:
                    raise ValidationError(
                        "bad-manifest", f"segment {i}: background file is not PNG or JPEG"
                    )
                payload["background"] = backend.store.put_blob(data, media_type).to_json()
            backend.lessons.add_exercise_segment(lesson.lesson_id, payload)
        else:
            raise ValidationError("bad-manifest", f"segment {i}: unknown type {kind!r}")
    return lesson.lesson_id


@main.command("import-lesson")
@click.argument("manifest_path", type=click.Path())
@data_dir_option
@click.option("--owner", default="cli", show_default=True, help="Teacher user id to own the lesson.")
@click.option("--publish", is_flag=True, help="Publish immediately after import.")
def import_lesson(manifest_path: str, data_dir: str, owner: str, publish: bool) -> None:
    """Create an unpublished lesson from a JSON manifest; print its id."""

    def go():
        try:
            text = Path(manifest_path).read_text(encoding="utf-8")
        except FileNotFoundError:
            raise NotFoundError("missing-file", manifest_path) from None
        try:
            manifest = json.loads(text)
        except ValueError as exc:
            raise ValidationError("bad-manifest", f"not JSON: {exc}") from None
        backend = Backend(data_dir)
        try:
            lesson_id = import_manifest(backend, manifest, Path(manifest_path).parent, owner)
            if publish:
                backend.lessons.publish(lesson_id)
        finally:
            backend.close()
        click.echo(lesson_id)

    run_guarded(go)


# -- simulate ------------------------------------------------------------------


@main.command()
@click.option("--exercise", "exercise_id", required=True, help="Published exercise id.")
@data_dir_option
@click.option("--students", default=30, show_default=True, help="Population size.")
@click.option("--ink-prob", default=0.8, show_default=True)
@click.option("--silence-prob", default=0.2, show_default=True)
@click.option("--duration-min-ms", default=5000, show_default=True)
@click.option("--duration-max-ms", default=30000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--parallel", default=8, show_default=True, help="Concurrent submitters.")
def simulate(
    exercise_id: str,
    data_dir: str,
    students: int,
    ink_prob: float,
    silence_prob: float,
    duration_min_ms: int,
    duration_max_ms: int,
    seed: int,
    parallel: int,
) -> None:
    """Submit a seeded synthetic population; print one response id per line."""

    def go():
        profile = SimProfile(
            n_students=students,
            ink_prob=ink_prob,
            silence_prob=silence_prob,
            duration_range_ms=(duration_min_ms, duration_max_ms),
            seed=seed,
        )
        backend = Backend(data_dir)
        try:
            for response_id in run_simulation(backend, exercise_id, profile, parallel):
                click.echo(response_id)
        finally:
            backend.close()

    run_guarded(go)


# -- export / reprocess / gc ------------------------------------------------------


@main.command("export-gallery")
@click.option("--exercise", "exercise_id", required=True)
@data_dir_option
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--out", default="-", show_default=True, help="Output path, or - for stdout.")
def export_gallery(exercise_id: str, data_dir: str, fmt: str, out: str) -> None:
    """Export the gallery records for one exercise."""

    def go():
        backend = Backend(data_dir)
        try:
            if fmt == "csv":
                payload = backend.gallery.export_csv(exercise_id)
            else:
                payload = json.dumps(backend.gallery.export_rows(exercise_id), indent=2) + "\n"
        finally:
            backend.close()
        if out == "-":
            click.echo(payload, nl=False)
            return
        try:
            Path(out).write_text(payload, encoding="utf-8")
        except OSError as exc:
            raise StorageError("io-error", f"{out}: {exc}") from None

    run_guarded(go)


@main.command()
@data_dir_option
@click.option("--exercise", "exercise_id", default=None, help="Limit to one exercise.")
def reprocess(data_dir: str, exercise_id: str | None) -> None:
    """Re-run labeling and thumbnails; idempotent on already-labeled bundles."""

    def go():
        backend = Backend(data_dir)
        try:
            count = backend.reprocess(exercise_id)
        finally:
            backend.close()
        click.echo(str(count))

    run_guarded(go)


@main.command()
@data_dir_option
@click.option("--window-s", default=3600.0, show_default=True, help="Keep blobs younger than this.")
def gc(data_dir: str, window_s: float) -> None:
    """Delete blobs no committed record references; print how many."""

    def go():
        backend = Backend(data_dir)
        try:
            count = backend.gc(window_s)
        finally:
            backend.close()
        click.echo(str(count))

    run_guarded(go)


if __name__ == "__main__":
    main()
