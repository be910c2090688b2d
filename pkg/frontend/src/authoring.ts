// Authoring view: build a lesson out of video and exercise segments, preview
// what students will see, and publish.
//
// Background images are attached as data: URLs (the server snapshots them to
// blobs at publish time), so authoring needs no separate upload endpoint.

import { ApiClient, ApiError } from "./api.js";
import type { InputMode, LessonJson, PreviewJson } from "./wire.js";

export interface ExerciseDraft {
  instructions: string;
  time_limit_s: number;
  input_mode: InputMode;
  student_gallery_access: boolean;
  background_url: string | null;
}

export class AuthoringView {
  readonly root: HTMLElement;
  lesson: LessonJson | null = null;
  private previewing = false;

  constructor(
    private readonly doc: Document,
    private readonly api: ApiClient,
  ) {
    this.root = doc.createElement("section");
    this.root.className = "authoring-view";
    this.root.innerHTML = `
      <form data-role="lesson-form">
        <input name="title" placeholder="Lesson title">
        <button data-role="create" type="button">Create lesson</button>
      </form>
      <div data-role="editor" hidden>
        <div data-role="edit-pane">
          <form data-role="exercise-form">
            <textarea name="instructions" placeholder="Instructions"></textarea>
            <input name="time_limit_s" type="number" value="45">
            <select name="input_mode">
              <option value="ink">Ink</option>
              <option value="audio">Audio</option>
              <option value="video">Video</option>
              <option value="ink+audio">Ink + audio</option>
              <option value="ink+video">Ink + video</option>
            </select>
            <label><input name="student_gallery_access" type="checkbox"> Students may browse the gallery</label>
            <input name="background_url" placeholder="Background image (data: or https: URL)">
            <button data-role="add-exercise" type="button">Add exercise</button>
          </form>
          <form data-role="video-form">
            <input name="blob_hash" placeholder="Video blob hash">
            <input name="media_type" value="video" hidden>
            <input name="duration_ms" type="number" placeholder="Duration (ms)">
            <button data-role="add-video" type="button">Add video segment</button>
          </form>
          <ol data-role="segments"></ol>
          <button data-role="publish" type="button">Publish</button>
          <button data-role="toggle-preview" type="button">Preview</button>
        </div>
        <div data-role="preview-pane" hidden></div>
        <p data-role="error" class="inline-error" hidden></p>
      </div>
    `;
    this.wire();
  }

  private part(role: string): HTMLElement {
    return this.root.querySelector(`[data-role="${role}"]`) as HTMLElement;
  }

  private field(form: string, name: string): HTMLInputElement {
    return this.part(form).querySelector(`[name="${name}"]`) as HTMLInputElement;
  }

  private wire(): void {
    this.part("create").addEventListener("click", () => void this.createLesson());
    this.part("add-exercise").addEventListener("click", () => void this.addExercise());
    this.part("add-video").addEventListener("click", () => void this.addVideo());
    this.part("publish").addEventListener("click", () => void this.publish());
    this.part("toggle-preview").addEventListener("click", () => void this.togglePreview());
  }

  async createLesson(): Promise<LessonJson> {
    const title = this.field("lesson-form", "title").value;
    this.lesson = await this.guard(() => this.api.createLesson(title));
    this.part("editor").hidden = false;
    this.renderSegments();
    return this.lesson;
  }

  /** Read the exercise form into a draft without mutating anything. */
  draft(): ExerciseDraft {
    return {
      instructions: this.field("exercise-form", "instructions").value,
      time_limit_s: Number(this.field("exercise-form", "time_limit_s").value),
      input_mode: this.field("exercise-form", "input_mode").value as InputMode,
      student_gallery_access: this.field("exercise-form", "student_gallery_access").checked,
      background_url: this.field("exercise-form", "background_url").value || null,
    };
  }

  async addExercise(): Promise<string | null> {
    if (this.lesson === null) return null;
    const draft = this.draft();
    const result = await this.guard(() =>
      this.api.addExerciseSegment(this.lesson!.lesson_id, {
        instructions: draft.instructions,
        time_limit_s: draft.time_limit_s,
        input_mode: draft.input_mode,
        student_gallery_access: draft.student_gallery_access,
        background: draft.background_url ? { url: draft.background_url } : null,
      }),
    );
    this.lesson = result.lesson;
    this.renderSegments();
    return result.exercise_id;
  }

  async addVideo(): Promise<void> {
    if (this.lesson === null) return;
    const hash = this.field("video-form", "blob_hash").value.trim();
    const duration = Number(this.field("video-form", "duration_ms").value);
    this.lesson = await this.guard(() =>
      this.api.addVideoSegment(this.lesson!.lesson_id, { $blob: hash, media_type: "video" }, duration),
    );
    this.renderSegments();
  }

  async publish(): Promise<LessonJson | null> {
    if (this.lesson === null) return null;
    this.lesson = await this.guard(() => this.api.publishLesson(this.lesson!.lesson_id));
    this.renderSegments();
    return this.lesson;
  }

  /** Flip between editing and the student-facing preview. Pure toggle: the
   * form and the lesson are left exactly as they were. */
  async togglePreview(): Promise<PreviewJson[] | null> {
    const pane = this.part("preview-pane");
    const editPane = this.part("edit-pane");
    if (this.previewing) {
      this.previewing = false;
      pane.hidden = true;
      editPane.hidden = false;
      return null;
    }
    if (this.lesson === null) return null;
    const timeline = await this.guard(() => this.api.timeline(this.lesson!.lesson_id));
    const previews = timeline.previews;
    pane.innerHTML = previews
      .map(
        (p) => `
          <article class="exercise-preview" data-exercise-id="${p.exercise_id}">
            <p class="instructions">${escapeHtml(p.instructions)}</p>
            <p class="limit">Time limit: ${p.time_limit_s} s</p>
            <p class="surfaces">${p.canvas ? "✏ canvas " : ""}${p.microphone ? "🎙 microphone " : ""}${p.camera ? "📷 camera" : ""}</p>
            ${backgroundHtml(p)}
          </article>`,
      )
      .join("");
    this.previewing = true;
    pane.hidden = false;
    editPane.hidden = true;
    return previews;
  }

  isPreviewing(): boolean {
    return this.previewing;
  }

  lastError(): string | null {
    const box = this.part("error");
    return box.hidden ? null : box.textContent;
  }

  private renderSegments(): void {
    if (this.lesson === null) return;
    const list = this.part("segments");
    list.innerHTML = this.lesson.segments
      .map((seg, i) =>
        seg.type === "video"
          ? `<li data-index="${i}">video · ${seg.duration_ms ?? "?"} ms</li>`
          : `<li data-index="${i}">exercise · ${seg.spec.input_mode} · ${escapeHtml(seg.spec.instructions)}</li>`,
      )
      .join("");
  }

  private async guard<T>(fn: () => Promise<T>): Promise<T> {
    const box = this.part("error");
    try {
      const result = await fn();
      box.hidden = true;
      box.textContent = "";
      return result;
    } catch (exc) {
      box.hidden = false;
      box.textContent = exc instanceof ApiError ? `${exc.code}: ${exc.detail}` : String(exc);
      throw exc;
    }
  }
}

function backgroundHtml(p: PreviewJson): string {
  if (p.background === null) return "";
  if ("url" in p.background) return `<img class="background" src="${p.background.url}">`;
  return `<img class="background" data-blob-hash="${p.background.$blob}">`;
}

function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}
