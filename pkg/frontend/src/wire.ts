// Wire types for the lecture-exercise service. These mirror the JSON the
// server actually sends; nothing here is computed client-side.

export interface BlobRefJson {
  $blob: string;
  media_type: string;
}

export type InputMode = "ink" | "audio" | "video" | "ink+audio" | "ink+video";

export interface ExerciseSpecJson {
  exercise_id: string;
  instructions: string;
  time_limit_s: number;
  input_mode: InputMode;
  background: BlobRefJson | { url: string } | null;
  created_at: string;
}

export type SegmentJson =
  | { type: "video"; blob: BlobRefJson; duration_ms: number | null }
  | { type: "exercise"; spec: ExerciseSpecJson };

export interface LessonJson {
  lesson_id: string;
  title: string;
  segments: SegmentJson[];
  published: boolean;
  owner: string;
}

export type PlanEntryJson =
  | { kind: "play"; start_offset_ms: number; duration_ms: number; blob: BlobRefJson }
  | { kind: "pause"; exercise_id: string; offset_ms: number };

export interface PreviewJson {
  exercise_id: string;
  instructions: string;
  time_limit_s: number;
  canvas: boolean;
  microphone: boolean;
  camera: boolean;
  background: BlobRefJson | { url: string } | null;
}

export interface TimelineJson {
  lesson_id: string;
  title: string;
  plan: { entries: PlanEntryJson[] };
  previews: PreviewJson[];
}

export interface SessionJson {
  session_id: string;
  exercise_id: string;
  student_id: string;
  started_at: string;
  state: "open" | "submitted" | "discarded";
}

export interface StartSessionJson {
  session: SessionJson;
  preview: PreviewJson;
}

export interface RatingsJson {
  confidence: number;
  helpfulness: number;
}

export interface SubmitResultJson {
  response_id: string;
  duration_ms: number;
  labels: string[];
  consistency_warnings: string[];
}

export interface GalleryCardJson {
  response_id: string;
  student_name: string;
  thumbnail_ref: BlobRefJson | null;
  duration_ms: number;
  confidence: number;
  helpfulness: number;
  captured_modes: string[];
  labels: string[];
  submitted_at: string;
  reviewed_by_viewer: boolean;
}

export interface PlaybackTrackJson {
  kind: "ink" | "audio" | "video";
  artifact_ref: BlobRefJson;
  clock_origin_ms: number;
}

export interface PlaybackManifestJson {
  response_id: string;
  duration_ms: number;
  tracks: PlaybackTrackJson[];
}

export interface AnnotationJson {
  annotation_id: string;
  response_id: string;
  author_id: string;
  kind: "like" | "comment";
  body: string | null;
  parent_id: string | null;
  created_at: string;
}

export type SortKey = "submitted_at" | "duration" | "student_name" | "confidence" | "helpfulness";
export type SortDirection = "asc" | "desc";
export type ModeFilter = "ink" | "audio" | "video";
export type ReviewFilter = "reviewed" | "not-reviewed";

export interface GalleryQuery {
  sort?: SortKey;
  dir?: SortDirection;
  mode?: ModeFilter;
  review?: ReviewFilter;
}
