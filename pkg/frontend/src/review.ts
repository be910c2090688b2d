// Review view: the response gallery plus the playback overlay.
//
// Ordering, filtering, duration math, and labeling all happen server-side;
// this view renders cards in exactly the order the service returns them and
// re-queries when a control changes.

import { ApiClient } from "./api.js";
import { parseInk } from "./ink.js";
import { ReplayPlayer } from "./replay.js";
import type {
  AnnotationJson,
  GalleryCardJson,
  GalleryQuery,
  PlaybackManifestJson,
  SortDirection,
  SortKey,
} from "./wire.js";

export const formatDuration = (ms: number): string => {
  const totalSeconds = Math.round(ms / 1000);
  const minutes = Math.floor(totalSeconds / 60);
  const seconds = totalSeconds % 60;
  return `${minutes}:${seconds.toString().padStart(2, "0")}`;
};

const SORT_OPTIONS: Array<[SortKey, string]> = [
  ["submitted_at", "Submission time"],
  ["duration", "Duration"],
  ["student_name", "Student name"],
  ["confidence", "Confidence"],
  ["helpfulness", "Helpfulness"],
];

export interface ReviewOptions {
  /** Canvas size for ink replay. */
  playerWidth?: number;
  playerHeight?: number;
}

export class ReviewView {
  readonly root: HTMLElement;
  private query: GalleryQuery = { sort: "submitted_at", dir: "asc" };
  private cards: GalleryCardJson[] = [];
  private player: ReplayPlayer | null = null;

  constructor(
    private readonly doc: Document,
    private readonly api: ApiClient,
    private readonly exerciseId: string,
    private readonly options: ReviewOptions = {},
  ) {
    this.root = doc.createElement("section");
    this.root.className = "review-view";
    this.root.innerHTML = `
      <header class="gallery-controls">
        <label>Sort
          <select data-role="sort">
            ${SORT_OPTIONS.map(([key, label]) => `<option value="${key}">${label}</option>`).join("")}
          </select>
        </label>
        <label>Direction
          <select data-role="dir">
            <option value="asc">Ascending</option>
            <option value="desc">Descending</option>
          </select>
        </label>
        <label>Has
          <select data-role="mode">
            <option value="">Any mode</option>
            <option value="ink">Ink</option>
            <option value="audio">Audio</option>
            <option value="video">Video</option>
          </select>
        </label>
        <label>Review
          <select data-role="review">
            <option value="">All</option>
            <option value="reviewed">Reviewed</option>
            <option value="not-reviewed">Not reviewed</option>
          </select>
        </label>
      </header>
      <p class="gallery-error" data-role="error" hidden></p>
      <div class="gallery-grid" data-role="grid"></div>
      <div class="player-overlay" data-role="player" hidden></div>
    `;
    for (const role of ["sort", "dir", "mode", "review"]) {
      this.select(role).addEventListener("change", () => {
        void this.readControlsAndRefresh();
      });
    }
  }

  private select(role: string): HTMLSelectElement {
    return this.root.querySelector(`select[data-role="${role}"]`) as HTMLSelectElement;
  }

  private part(role: string): HTMLElement {
    return this.root.querySelector(`[data-role="${role}"]`) as HTMLElement;
  }

  currentQuery(): GalleryQuery {
    return { ...this.query };
  }

  visibleResponseIds(): string[] {
    const grid = this.part("grid");
    return Array.from(grid.querySelectorAll("[data-response-id]")).map(
      (el) => (el as HTMLElement).dataset.responseId as string,
    );
  }

  async setQuery(query: GalleryQuery): Promise<void> {
    this.query = { ...this.query, ...query };
    if (query.sort) this.select("sort").value = query.sort;
    if (query.dir) this.select("dir").value = query.dir;
    this.select("mode").value = this.query.mode ?? "";
    this.select("review").value = this.query.review ?? "";
    await this.refresh();
  }

  private async readControlsAndRefresh(): Promise<void> {
    this.query = {
      sort: this.select("sort").value as SortKey,
      dir: this.select("dir").value as SortDirection,
      mode: (this.select("mode").value || undefined) as GalleryQuery["mode"],
      review: (this.select("review").value || undefined) as GalleryQuery["review"],
    };
    await this.refresh();
  }

  async refresh(): Promise<void> {
    const error = this.part("error");
    try {
      this.cards = await this.api.gallery(this.exerciseId, this.query);
      error.hidden = true;
    } catch (exc) {
      error.hidden = false;
      error.textContent = String(exc);
      return;
    }
    const grid = this.part("grid");
    grid.innerHTML = this.cards.map((card) => this.cardHtml(card)).join("");
    for (const el of Array.from(grid.querySelectorAll("[data-response-id]"))) {
      el.addEventListener("click", () => {
        void this.openPlayer((el as HTMLElement).dataset.responseId as string);
      });
    }
  }

  private cardHtml(card: GalleryCardJson): string {
    const thumb = card.thumbnail_ref
      ? `<img class="thumb" alt="response thumbnail" data-thumb-hash="${card.thumbnail_ref.$blob}">`
      : `<div class="thumb placeholder">no preview</div>`;
    const modes = card.captured_modes.map((m) => `<span class="chip mode">${m}</span>`).join("");
    const labels = card.labels.map((l) => `<span class="chip label">${l}</span>`).join("");
    const badge = card.reviewed_by_viewer ? `<span class="chip reviewed">reviewed</span>` : "";
    return `
      <article class="card" data-response-id="${card.response_id}">
        ${thumb}
        <h3>${escapeHtml(card.student_name)}</h3>
        <p class="meta">${formatDuration(card.duration_ms)} · confidence ${card.confidence}/5 · helpful ${card.helpfulness}/5</p>
        <p class="chips">${modes}${labels}${badge}</p>
      </article>
    `;
  }

  /**
   * Open the playback overlay. Fetching the manifest is what marks the
   * response reviewed for this viewer, so the act of watching flips the
   * reviewed state — no separate bookkeeping call.
   */
  async openPlayer(responseId: string): Promise<PlaybackManifestJson> {
    const manifest = await this.api.manifest(responseId);
    const overlay = this.part("player");
    overlay.hidden = false;
    overlay.innerHTML = `
      <div class="player-frame" data-response-id="${responseId}">
        <canvas data-role="ink-canvas"></canvas>
        <div data-role="media-tracks"></div>
        <button data-role="close">Close</button>
        <section class="annotations">
          <button data-role="like">Like</button>
          <form data-role="comment-form">
            <input name="comment" placeholder="Add a comment">
            <button type="submit">Post</button>
          </form>
          <ul data-role="annotation-list"></ul>
        </section>
      </div>
    `;
    const width = this.options.playerWidth ?? 480;
    const height = this.options.playerHeight ?? 360;

    const ink = manifest.tracks.find((t) => t.kind === "ink");
    if (ink !== undefined) {
      const bytes = await this.api.fetchBlob(ink.artifact_ref);
      const stream = parseInk(new TextDecoder().decode(bytes));
      const canvas = overlay.querySelector("canvas") as HTMLCanvasElement;
      canvas.width = width;
      canvas.height = height;
      this.player = new ReplayPlayer(stream, width, height, canvas);
      this.player.seek(0);
    } else {
      this.player = null;
    }
    const mediaBox = overlay.querySelector('[data-role="media-tracks"]') as HTMLElement;
    for (const track of manifest.tracks) {
      if (track.kind === "audio") {
        mediaBox.innerHTML += `<audio controls data-blob-hash="${track.artifact_ref.$blob}"></audio>`;
      } else if (track.kind === "video") {
        mediaBox.innerHTML += `<video controls data-blob-hash="${track.artifact_ref.$blob}"></video>`;
      }
    }

    (overlay.querySelector('[data-role="close"]') as HTMLElement).addEventListener("click", () => {
      this.closePlayer();
      void this.refresh(); // the reviewed badge may have just appeared
    });
    (overlay.querySelector('[data-role="like"]') as HTMLElement).addEventListener("click", () => {
      void this.api.addAnnotation(responseId, "like").then(() => this.renderAnnotations(responseId));
    });
    const form = overlay.querySelector('[data-role="comment-form"]') as HTMLFormElement;
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const input = form.querySelector("input") as HTMLInputElement;
      if (!input.value.trim()) return;
      void this.api
        .addAnnotation(responseId, "comment", input.value)
        .then(() => {
          input.value = "";
          return this.renderAnnotations(responseId);
        });
    });
    await this.renderAnnotations(responseId);
    return manifest;
  }

  inkPlayer(): ReplayPlayer | null {
    return this.player;
  }

  closePlayer(): void {
    this.player?.pause();
    this.player = null;
    const overlay = this.part("player");
    overlay.hidden = true;
    overlay.innerHTML = "";
  }

  private async renderAnnotations(responseId: string): Promise<AnnotationJson[]> {
    const annotations = await this.api.listAnnotations(responseId);
    const list = this.root.querySelector('[data-role="annotation-list"]') as HTMLElement | null;
    if (list !== null) {
      list.innerHTML = annotations
        .map((a) =>
          a.kind === "like"
            ? `<li class="like" data-annotation-id="${a.annotation_id}">♥ ${escapeHtml(a.author_id)}</li>`
            : `<li class="comment" data-annotation-id="${a.annotation_id}">${escapeHtml(a.author_id)}: ${escapeHtml(a.body ?? "")}</li>`,
        )
        .join("");
    }
    return annotations;
  }
}

function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}
