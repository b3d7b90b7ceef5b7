/**
 * Typed client for the trace server's JSON API, plus the stale-response
 * gate used by asynchronous refresh: every request carries a generation
 * token, and a response is applied only when its token is still the
 * newest one issued, so slow responses for an old window can never
 * overwrite a newer scene's data.
 */

export interface TaskRecord {
  id: string;
  parent_id: string | null;
  category: string;
  action: string;
  location: string;
  start: number;
  end: number | null;
  details: Record<string, string>;
}

export interface TraceMeta {
  task_count: number;
  time_min: number;
  time_max: number;
  component_count: number;
  format_version: string;
}

export interface ComponentInfo {
  name: string;
  task_count: number;
  first_start: number;
  last_end: number;
}

export interface MetricSeries {
  component: string;
  metric: string;
  t0: number;
  t1: number;
  bins: number;
  values: (number | null)[];
}

export interface LayoutBar {
  task_id: string;
  level: number;
  row: number;
  x0: number;
  x1: number;
  y: number;
  h: number;
  color_key: string;
}

export interface ColorKey {
  mode: "CategoryAction" | "CategoryOnly";
  keys: Record<string, number>;
  palette: string[];
}

export interface ComponentLayout {
  bars: LayoutBar[];
  color_key: ColorKey;
  min_row_height: number;
  window: [number, number];
}

export interface TaskViewLayout {
  groups: { parent: LayoutBar[]; current: LayoutBar[]; children: LayoutBar[] };
  color_key: ColorKey;
}

export interface ApiClient {
  meta(): Promise<TraceMeta>;
  components(filter: string, page: number, pageSize: number, gen?: string):
    Promise<{ total: number; items: ComponentInfo[] }>;
  metrics(component: string, metric: string, metric2: string | undefined,
          t0: number, t1: number, bins: number, gen?: string): Promise<{ series: MetricSeries[] }>;
  componentLayout(component: string, t0: number, t1: number, minPx: number,
                  pxPerS: number, gen?: string): Promise<ComponentLayout>;
  taskLayout(taskId: string, t0: number, t1: number, gen?: string): Promise<TaskViewLayout>;
  task(id: string): Promise<TaskRecord>;
  children(id: string): Promise<TaskRecord[]>;
  parents(id: string): Promise<TaskRecord[]>;
}

export class ApiError extends Error {
  constructor(public code: string, message: string, public status: number) {
    super(message);
  }
}

async function getJson(url: string): Promise<unknown> {
  const resp = await fetch(url);
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    const err = body as { code?: string; message?: string };
    throw new ApiError(err.code ?? "E_HTTP", err.message ?? resp.statusText, resp.status);
  }
  return body;
}

function qs(params: Record<string, string | number | undefined>): string {
  const p = new URLSearchParams();
  for (const [k, v] of Object.entries(params)) {
    if (v !== undefined) p.set(k, String(v));
  }
  return p.toString();
}

export function httpClient(base = ""): ApiClient {
  const get = (path: string, params: Record<string, string | number | undefined>) =>
    getJson(`${base}${path}?${qs(params)}`);
  return {
    meta: () => get("/api/meta", {}) as Promise<TraceMeta>,
    components: (filter, page, page_size, gen) =>
      get("/api/components", { filter, page, page_size, gen }) as
        Promise<{ total: number; items: ComponentInfo[] }>,
    metrics: (component, metric, metric2, start, end, bins, gen) =>
      get("/api/metrics", { component, metric, metric2, start, end, bins, gen }) as
        Promise<{ series: MetricSeries[] }>,
    componentLayout: (component, start, end, min_px, px_per_s, gen) =>
      get("/api/tasks-layout", { component, start, end, min_px, px_per_s, gen }) as
        Promise<ComponentLayout>,
    taskLayout: (task, start, end, gen) =>
      get("/api/tasks-layout", { task, start, end, gen }) as Promise<TaskViewLayout>,
    task: (id) => get(`/api/task/${encodeURIComponent(id)}`, {}) as Promise<TaskRecord>,
    children: (id) =>
      get(`/api/task/${encodeURIComponent(id)}/children`, {}) as Promise<TaskRecord[]>,
    parents: (id) =>
      get(`/api/task/${encodeURIComponent(id)}/parents`, {}) as Promise<TaskRecord[]>,
  };
}

/** Issues generation tokens and accepts only the newest one. */
export class RequestGate {
  private counter = 0;
  private latest = "";

  next(): string {
    this.latest = `g${++this.counter}`;
    return this.latest;
  }

  /** true iff this response belongs to the newest request */
  accept(gen: string): boolean {
    return gen === this.latest;
  }
}
