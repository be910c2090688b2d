// Thin typed client for the service wire protocol. Every view talks to the
// server through this class and nothing else.

import type {
  AnnotationJson,
  BlobRefJson,
  GalleryCardJson,
  GalleryQuery,
  LessonJson,
  PlaybackManifestJson,
  StartSessionJson,
  SubmitResultJson,
  TimelineJson,
} from "./wire.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    public readonly detail: string,
  ) {
    super(`${code} (${status}): ${detail}`);
  }
}

export interface SubmissionUpload {
  session: string;
  ink?: string;
  audio?: Uint8Array;
  video?: Uint8Array;
  poster?: Uint8Array;
  declared_duration_ms?: number;
  ratings: { confidence: number; helpfulness: number };
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    const init: RequestInit = {
      method,
      headers: { authorization: `Bearer ${this.token}` },
    };
    if (body !== undefined) {
      init.headers = { ...init.headers, "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) throw await this.toError(response);
    return response.json();
  }

  private async toError(response: Response): Promise<ApiError> {
    let code = "http-error";
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { code?: string; detail?: string };
      if (body.code) code = body.code;
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body; keep the transport-level description
    }
    return new ApiError(response.status, code, detail);
  }

  // -- lessons --------------------------------------------------------------

  async createLesson(title: string): Promise<LessonJson> {
    return (await this.request("POST", "/lessons", { title })) as LessonJson;
  }

  async listLessons(): Promise<LessonJson[]> {
    const body = (await this.request("GET", "/lessons")) as { lessons: LessonJson[] };
    return body.lessons;
  }

  async addExerciseSegment(
    lessonId: string,
    spec: {
      instructions: string;
      time_limit_s: number;
      input_mode: string;
      student_gallery_access?: boolean;
      background?: { url: string } | BlobRefJson | null;
    },
  ): Promise<{ lesson: LessonJson; exercise_id: string }> {
    return (await this.request("POST", `/lessons/${lessonId}/segments`, {
      type: "exercise",
      ...spec,
    })) as { lesson: LessonJson; exercise_id: string };
  }

  async addVideoSegment(
    lessonId: string,
    blob: BlobRefJson,
    durationMs: number,
  ): Promise<LessonJson> {
    const body = (await this.request("POST", `/lessons/${lessonId}/segments`, {
      type: "video",
      blob,
      duration_ms: durationMs,
    })) as { lesson: LessonJson };
    return body.lesson;
  }

  async publishLesson(lessonId: string): Promise<LessonJson> {
    return (await this.request("POST", `/lessons/${lessonId}/publish`)) as LessonJson;
  }

  async timeline(lessonId: string): Promise<TimelineJson> {
    return (await this.request("GET", `/lessons/${lessonId}/timeline`)) as TimelineJson;
  }

  // -- recording ------------------------------------------------------------

  async startSession(exerciseId: string, replaces?: string): Promise<StartSessionJson> {
    return (await this.request("POST", `/exercises/${exerciseId}/sessions`, {
      replaces: replaces ?? null,
    })) as StartSessionJson;
  }

  async submitResponse(exerciseId: string, upload: SubmissionUpload): Promise<SubmitResultJson> {
    const form = new FormData();
    const metadata: Record<string, unknown> = {
      session: upload.session,
      ratings: upload.ratings,
    };
    if (upload.declared_duration_ms !== undefined) {
      metadata.declared_duration_ms = upload.declared_duration_ms;
    }
    form.set("metadata", JSON.stringify(metadata));
    if (upload.ink !== undefined) {
      form.set("ink", new Blob([upload.ink], { type: "application/json" }), "ink.json");
    }
    const binary: Array<["audio" | "video" | "poster", Uint8Array | undefined]> = [
      ["audio", upload.audio],
      ["video", upload.video],
      ["poster", upload.poster],
    ];
    for (const [name, data] of binary) {
      if (data !== undefined) {
        form.set(name, new Blob([data as BlobPart]), name);
      }
    }
    const response = await this.fetchFn(`${this.baseUrl}/exercises/${exerciseId}/responses`, {
      method: "POST",
      headers: { authorization: `Bearer ${this.token}` },
      body: form,
    });
    if (!response.ok) throw await this.toError(response);
    return (await response.json()) as SubmitResultJson;
  }

  // -- gallery --------------------------------------------------------------

  async gallery(exerciseId: string, query: GalleryQuery = {}): Promise<GalleryCardJson[]> {
    const params = new URLSearchParams();
    if (query.sort) params.set("sort", query.sort);
    if (query.dir) params.set("dir", query.dir);
    if (query.mode) params.set("mode", query.mode);
    if (query.review) params.set("review", query.review);
    const suffix = params.size > 0 ? `?${params}` : "";
    const body = (await this.request("GET", `/exercises/${exerciseId}/gallery${suffix}`)) as {
      cards: GalleryCardJson[];
    };
    return body.cards;
  }

  async manifest(responseId: string): Promise<PlaybackManifestJson> {
    return (await this.request("GET", `/responses/${responseId}/manifest`)) as PlaybackManifestJson;
  }

  async listAnnotations(responseId: string): Promise<AnnotationJson[]> {
    const body = (await this.request("GET", `/responses/${responseId}/annotations`)) as {
      annotations: AnnotationJson[];
    };
    return body.annotations;
  }

  async addAnnotation(
    responseId: string,
    kind: "like" | "comment",
    body?: string,
    parentId?: string,
  ): Promise<AnnotationJson> {
    return (await this.request("POST", `/responses/${responseId}/annotations`, {
      kind,
      body: body ?? null,
      parent_id: parentId ?? null,
    })) as AnnotationJson;
  }

  // -- blobs ----------------------------------------------------------------

  blobUrl(ref: BlobRefJson): string {
    return `${this.baseUrl}/blobs/${ref.$blob}`;
  }

  async fetchBlob(ref: BlobRefJson): Promise<Uint8Array> {
    const response = await this.fetchFn(this.blobUrl(ref), {
      headers: { authorization: `Bearer ${this.token}` },
    });
    if (!response.ok) throw await this.toError(response);
    return new Uint8Array(await response.arrayBuffer());
  }
}
