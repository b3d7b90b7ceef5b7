/**
 * Scene state and its URL encoding.
 *
 * The whole interactive state lives in the query string, so reloading an
 * encoded URL reproduces the scene, the browser's back/forward buttons
 * navigate scene history, and a copied URL shares the exact view.
 * decode(encode(s)) === s for every valid state; unknown parameters are
 * ignored, malformed numbers fall back to the default scene with a
 * warning.
 */

export type ViewKind = "overview" | "component" | "task";

export interface SceneState {
  kind: ViewKind;
  /** component under inspection (component/task views) */
  component?: string;
  /** current task in the task view; set by clicking a bar */
  taskId?: string;
  /** shared time window; undefined = full trace extent */
  t0?: number;
  t1?: number;
  metric: string;
  metric2?: string;
  bins: number;
  filter: string;
  page: number;
  pageSize: number;
  /** hovered legend key / hovered bar, mirrored across views */
  hoverKey?: string;
  hoverTask?: string;
}

export const DEFAULT_SCENE: SceneState = {
  kind: "overview",
  metric: "ConcurrentTasks",
  bins: 48,
  filter: "",
  page: 0,
  pageSize: 16,
};

const KINDS: ViewKind[] = ["overview", "component", "task"];

/** numbers survive String()/Number() exactly (shortest round-trip form) */
function putNumber(params: URLSearchParams, key: string, value: number | undefined, dflt?: number) {
  if (value !== undefined && value !== dflt) params.set(key, String(value));
}

function putText(params: URLSearchParams, key: string, value: string | undefined, dflt?: string) {
  if (value !== undefined && value !== dflt) params.set(key, value);
}

export function encodeScene(s: SceneState): string {
  const p = new URLSearchParams();
  putText(p, "kind", s.kind, DEFAULT_SCENE.kind);
  putText(p, "component", s.component);
  putText(p, "task", s.taskId);
  putNumber(p, "start", s.t0);
  putNumber(p, "end", s.t1);
  putText(p, "metric", s.metric, DEFAULT_SCENE.metric);
  putText(p, "metric2", s.metric2);
  putNumber(p, "bins", s.bins, DEFAULT_SCENE.bins);
  putText(p, "filter", s.filter, DEFAULT_SCENE.filter);
  putNumber(p, "page", s.page, DEFAULT_SCENE.page);
  putNumber(p, "page_size", s.pageSize, DEFAULT_SCENE.pageSize);
  putText(p, "hoverkey", s.hoverKey);
  putText(p, "hovertask", s.hoverTask);
  const q = p.toString();
  return q ? `?${q}` : "";
}

export interface DecodeResult {
  scene: SceneState;
  warnings: string[];
}

export function decodeScene(query: string): DecodeResult {
  const warnings: string[] = [];
  const scene: SceneState = { ...DEFAULT_SCENE };
  let params: URLSearchParams;
  try {
    params = new URLSearchParams(query.startsWith("?") ? query.slice(1) : query);
  } catch {
    return { scene, warnings: ["unreadable query string; showing the default scene"] };
  }

  const num = (key: string): number | undefined => {
    const raw = params.get(key);
    if (raw === null) return undefined;
    const v = Number(raw);
    if (raw.trim() === "" || Number.isNaN(v)) {
      warnings.push(`ignoring malformed number ${key}=${raw}`);
      return undefined;
    }
    return v;
  };
  const text = (key: string): string | undefined => {
    const raw = params.get(key);
    return raw === null || raw === "" ? undefined : raw;
  };

  const kind = text("kind");
  if (kind !== undefined) {
    if ((KINDS as string[]).includes(kind)) scene.kind = kind as ViewKind;
    else warnings.push(`unknown view kind ${kind}`);
  }
  scene.component = text("component");
  scene.taskId = text("task");
  scene.t0 = num("start");
  scene.t1 = num("end");
  if (scene.t0 !== undefined && scene.t1 !== undefined && !(scene.t0 < scene.t1)) {
    warnings.push(`empty window [${scene.t0}, ${scene.t1}); showing the full extent`);
    scene.t0 = scene.t1 = undefined;
  }
  scene.metric = text("metric") ?? DEFAULT_SCENE.metric;
  scene.metric2 = text("metric2");
  scene.bins = intOr(num("bins"), DEFAULT_SCENE.bins, 1, warnings, "bins");
  scene.filter = params.get("filter") ?? DEFAULT_SCENE.filter;
  scene.page = intOr(num("page"), DEFAULT_SCENE.page, 0, warnings, "page");
  scene.pageSize = intOr(num("page_size"), DEFAULT_SCENE.pageSize, 1, warnings, "page_size");
  scene.hoverKey = text("hoverkey");
  scene.hoverTask = text("hovertask");

  if (scene.kind === "component" && scene.component === undefined) {
    warnings.push("component view without a component; showing the overview");
    scene.kind = "overview";
  }
  if (scene.kind === "task" && scene.taskId === undefined) {
    warnings.push("task view without a task; showing the overview");
    scene.kind = "overview";
  }
  return { scene, warnings };
}

function intOr(
  value: number | undefined,
  dflt: number,
  min: number,
  warnings: string[],
  key: string,
): number {
  if (value === undefined) return dflt;
  if (!Number.isInteger(value) || value < min) {
    warnings.push(`ignoring out-of-range ${key}=${value}`);
    return dflt;
  }
  return value;
}

export function sceneEquals(a: SceneState, b: SceneState): boolean {
  return encodeScene(a) === encodeScene(b);
}
