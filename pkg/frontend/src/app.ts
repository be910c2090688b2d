// Composition root: one router owning the three views. The view-state
// invariant lives here — switching routes tears down the recording view,
// which abandons any open capture session.

import { ApiClient } from "./api.js";
import { AuthoringView } from "./authoring.js";
import { RecordingView } from "./recording.js";
import { ReviewView } from "./review.js";

export type Route = "author" | "record" | "review";

export interface AppConfig {
  baseUrl: string;
  token: string;
}

export class App {
  readonly api: ApiClient;
  route: Route | null = null;
  private view: AuthoringView | RecordingView | ReviewView | null = null;

  constructor(
    private readonly doc: Document,
    private readonly container: HTMLElement,
    config: AppConfig,
  ) {
    this.api = new ApiClient(config.baseUrl, config.token);
  }

  currentView(): AuthoringView | RecordingView | ReviewView | null {
    return this.view;
  }

  async navigate(route: Route, params: { lessonId?: string; exerciseId?: string } = {}): Promise<void> {
    if (this.view instanceof RecordingView) {
      this.view.teardown();
    }
    this.container.innerHTML = "";
    this.route = route;
    if (route === "author") {
      this.view = new AuthoringView(this.doc, this.api);
    } else if (route === "record") {
      if (!params.lessonId) throw new Error("record route needs lessonId");
      const view = new RecordingView(this.doc, this.api, params.lessonId);
      await view.load();
      this.view = view;
    } else {
      if (!params.exerciseId) throw new Error("review route needs exerciseId");
      const view = new ReviewView(this.doc, this.api, params.exerciseId);
      await view.refresh();
      this.view = view;
    }
    this.container.appendChild(this.view.root);
  }
}

/**
 * Map a location hash to a route: #/author, #/record/<lesson-id>,
 * #/review/<exercise-id>. Anything else lands on the authoring view.
 */
export function parseRoute(hash: string): { route: Route; params: { lessonId?: string; exerciseId?: string } } {
  const parts = hash.replace(/^#\/?/, "").split("/").filter((p) => p.length > 0);
  if (parts[0] === "record" && parts[1]) return { route: "record", params: { lessonId: parts[1] } };
  if (parts[0] === "review" && parts[1]) return { route: "review", params: { exerciseId: parts[1] } };
  return { route: "author", params: {} };
}

/** Browser entry point: config from localStorage, route from the hash. */
export function boot(doc: Document): App | null {
  const container = doc.getElementById("app");
  if (container === null) return null;
  const win = doc.defaultView;
  const storage = win?.localStorage ?? globalThis.localStorage;
  const stored = storage?.getItem("lecturekit-config");
  const config: AppConfig = stored
    ? (JSON.parse(stored) as AppConfig)
    : { baseUrl: "http://127.0.0.1:8080", token: "" };
  const app = new App(doc, container, config);
  if (win !== null) {
    const follow = () => {
      const { route, params } = parseRoute(win.location.hash);
      void app.navigate(route, params);
    };
    win.addEventListener("hashchange", follow);
    follow();
  }
  return app;
}
