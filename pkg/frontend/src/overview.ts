/**
 * Overview panel: one small-multiple chart per component on the current
 * page, a regex filter box, paging, and two metric dropdowns (primary and
 * secondary y-axis). Zooming or dragging any chart moves the shared
 * window, so every chart always shows the same time period; stale
 * responses are dropped via the request gate. Clicking a component title
 * opens the Component View at the current window.
 */

import { ApiClient, ComponentInfo, MetricSeries, RequestGate } from "./api.js";
import { finiteMax, linearScale, niceTicks, seriesRuns, timeLabel } from "./chart.js";
import { SceneState } from "./scene.js";
import { SceneStore, zoomWindow, panWindow } from "./state.js";
import { el, svgEl, clear } from "./render.js";

const CHART_W = 420;
const CHART_H = 140;
const PLOT = { left: 44, right: 44, top: 18, bottom: 22 };

export class OverviewPanel {
  private gate = new RequestGate();
  charts = 0;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private store: SceneStore,
    private extent: [number, number],
  ) {}

  window(scene: SceneState): [number, number] {
    return [scene.t0 ?? this.extent[0], scene.t1 ?? this.extent[1]];
  }

  async render(scene: SceneState): Promise<void> {
    const gen = this.gate.next();
    const [t0, t1] = this.window(scene);
    let total = 0;
    let items: ComponentInfo[] = [];
    try {
      const page = await this.api.components(scene.filter, scene.page, scene.pageSize, gen);
      if (!this.gate.accept(gen)) return; // a newer scene took over
      total = page.total;
      items = page.items;
    } catch (err) {
      this.renderError(`component list failed: ${(err as Error).message}`);
      return;
    }

    clear(this.root);
    this.charts = 0;
    this.root.appendChild(this.toolbar(scene, total));
    const grid = el("div", { class: "overview-grid" });
    this.root.appendChild(grid);
    await Promise.all(
      items.map(async (comp) => {
        const holder = el("div", { class: "chart" });
        grid.appendChild(holder);
        try {
          const body = await this.api.metrics(
            comp.name, scene.metric, scene.metric2, t0, t1, scene.bins, gen,
          );
          if (!this.gate.accept(gen)) return;
          this.drawChart(holder, comp, body.series, t0, t1);
          this.charts += 1;
        } catch (err) {
          holder.appendChild(el("div", { class: "chart-error" },
            `metrics failed: ${(err as Error).message}`));
        }
      }),
    );
  }

  private toolbar(scene: SceneState, total: number): HTMLElement {
    const pages = Math.max(1, Math.ceil(total / scene.pageSize));
    const bar = el("div", { class: "toolbar" });
    const filter = el("input", {
      class: "filter-box",
      placeholder: "filter components, e.g. (CU|L1|L2)",
      value: scene.filter,
    }) as HTMLInputElement;
    filter.addEventListener("change", () => {
      this.store.update({ filter: filter.value, page: 0 });
    });
    bar.appendChild(filter);
    bar.appendChild(this.metricSelect(scene.metric, (m) => this.store.update({ metric: m })));
    bar.appendChild(
      this.metricSelect(scene.metric2 ?? "", (m) => this.store.update({ metric2: m || undefined }), true),
    );
    const prev = el("button", {}, "<") as HTMLButtonElement;
    const next = el("button", {}, ">") as HTMLButtonElement;
    prev.disabled = scene.page <= 0;
    next.disabled = scene.page >= pages - 1;
    prev.addEventListener("click", () => this.store.update({ page: scene.page - 1 }));
    next.addEventListener("click", () => this.store.update({ page: scene.page + 1 }));
    bar.appendChild(prev);
    bar.appendChild(el("span", { class: "page-label" }, `page ${scene.page + 1}/${pages}`));
    bar.appendChild(next);
    return bar;
  }

  private metricSelect(current: string, onPick: (m: string) => void, optional = false) {
    const metrics = [
      "ReqInRate", "ReqCompleteRate", "AvgReqLatency",
      "ConcurrentTasks", "BufferPressure", "PendingReqOut",
    ];
    const select = el("select", {}) as HTMLSelectElement;
    if (optional) select.appendChild(el("option", { value: "" }, "secondary: none"));
    for (const m of metrics) {
      const opt = el("option", { value: m }, m) as HTMLOptionElement;
      if (m === current) opt.selected = true;
      select.appendChild(opt);
    }
    select.addEventListener("change", () => onPick(select.value));
    return select;
  }

  private drawChart(
    holder: HTMLElement,
    comp: ComponentInfo,
    series: MetricSeries[],
    t0: number,
    t1: number,
  ): void {
    const title = el("div", { class: "chart-title" }, comp.name);
    title.addEventListener("click", () => this.store.openComponent(comp.name));
    holder.appendChild(title);

    const svg = svgEl("svg", {
      width: String(CHART_W), height: String(CHART_H),
      viewBox: `0 0 ${CHART_W} ${CHART_H}`,
    });
    const px0 = PLOT.left, px1 = CHART_W - PLOT.right;
    const py0 = PLOT.top, py1 = CHART_H - PLOT.bottom;
    const x = linearScale(t0, t1, px0, px1);
    svg.appendChild(svgEl("rect", {
      x: String(px0), y: String(py0), width: String(px1 - px0), height: String(py1 - py0),
      fill: "#fbfbfb",
    }));
    for (const tick of niceTicks(t0, t1)) {
      const tx = x(tick);
      svg.appendChild(svgEl("line", {
        x1: String(tx), y1: String(py1), x2: String(tx), y2: String(py1 + 4), stroke: "#333",
      }));
      const label = svgEl("text", { x: String(tx - 16), y: String(py1 + 14), class: "tick" });
      label.textContent = timeLabel(tick, t1 - t0);
      svg.appendChild(label);
    }
    series.forEach((s, idx) => {
      const vmax = finiteMax(s.values);
      const y = linearScale(0, vmax, py1, py0);
      const stroke = idx === 0 ? "#336688" : "#886633";
      for (const run of seriesRuns(s.values, s.t0, s.t1, x, y)) {
        svg.appendChild(svgEl("polyline", {
          fill: "none",
          stroke,
          "stroke-dasharray": idx === 0 ? "" : "5,2",
          points: run.points.map(([a, b]) => `${a.toFixed(1)},${b.toFixed(1)}`).join(" "),
        }));
      }
      const axisX = idx === 0 ? 2 : px1 + 4;
      const lab = svgEl("text", { x: String(axisX), y: String(py0 + 8), class: "tick" });
      lab.textContent = vmax.toPrecision(3);
      svg.appendChild(lab);
    });
    this.bindZoom(svg, () => this.window(this.store.get()));
    holder.appendChild(svg);
  }

  /** wheel = zoom about the cursor, drag = pan; both refresh every view */
  private bindZoom(svg: SVGElement, window: () => [number, number]): void {
    svg.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const [t0, t1] = window();
      const rect = (svg as SVGGraphicsElement).getBoundingClientRect();
      const rel = (ev.clientX - rect.left - PLOT.left) / (rect.width - PLOT.left - PLOT.right);
      const focus = t0 + Math.min(1, Math.max(0, rel)) * (t1 - t0);
      const factor = (ev as WheelEvent).deltaY > 0 ? 1.25 : 0.8;
      const [n0, n1] = zoomWindow(t0, t1, focus, factor);
      this.store.zoomTo(n0, n1);
    }, { passive: false });
    let dragX: number | null = null;
    svg.addEventListener("mousedown", (ev) => { dragX = ev.clientX; });
    svg.addEventListener("mouseup", (ev) => {
      if (dragX === null) return;
      const rect = (svg as SVGGraphicsElement).getBoundingClientRect();
      const frac = (dragX - ev.clientX) / Math.max(1, rect.width - PLOT.left - PLOT.right);
      dragX = null;
      if (Math.abs(frac) < 0.01) return;
      const [t0, t1] = window();
      const [n0, n1] = panWindow(t0, t1, frac);
      this.store.zoomTo(n0, n1);
    });
  }

  private renderError(message: string): void {
    clear(this.root);
    this.root.appendChild(el("div", { class: "chart-error" }, message));
  }
}
