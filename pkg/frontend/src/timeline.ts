/**
 * The stacked timeline area: Task View above, Component View below, one
 * shared time axis. Bars come positioned from /api/tasks-layout (the
 * client never recomputes layout). Hovering a bar or a legend key applies
 * the shared highlight rules to both views; clicking a bar makes it the
 * current task; clicking the parent/a child in the Task View walks the
 * tree. Dragging or zooming either view moves the shared window, which
 * refreshes both.
 */

import { ApiClient, ColorKey, LayoutBar, RequestGate, TaskRecord } from "./api.js";
import { linearScale, niceTicks, timeLabel } from "./chart.js";
import { barEmphasis, EMPHASIS_CLASS, HighlightState, legendEmphasis } from "./highlight.js";
import { loadTaskContext, parentTarget, TaskContext } from "./navigation.js";
import { SceneState } from "./scene.js";
import { SceneStore, zoomWindow, panWindow } from "./state.js";
import { clear, el, svgEl } from "./render.js";

const VIEW_W = 980;
const COMPONENT_H = 340;
const TASK_H = 220;
const MARGIN = { left: 10, right: 10, top: 8, bottom: 26 };
const MIN_ROW_PX = 6; // below this the component view scrolls instead of shrinking

export class TimelinePanel {
  private gate = new RequestGate();
  private bars: Map<string, SVGElement[]> = new Map();
  private keyed: Map<string, SVGElement[]> = new Map();
  private legend: Map<string, HTMLElement> = new Map();

  constructor(
    private componentRoot: HTMLElement,
    private taskRoot: HTMLElement,
    private sidebar: HTMLElement,
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
    this.bars.clear();
    this.keyed.clear();

    if (!scene.component) {
      clear(this.componentRoot);
      clear(this.taskRoot);
      return;
    }
    try {
      const pxPerS = (VIEW_W - MARGIN.left - MARGIN.right) / (t1 - t0);
      const layout = await this.api.componentLayout(scene.component, t0, t1, 1.0, pxPerS, gen);
      if (!this.gate.accept(gen)) return;
      this.drawComponent(scene, layout.bars, layout.color_key, layout.min_row_height, t0, t1);
      this.drawLegend(layout.color_key);
    } catch (err) {
      clear(this.componentRoot);
      this.componentRoot.appendChild(
        el("div", { class: "chart-error" }, `layout failed: ${(err as Error).message}`),
      );
      return;
    }

    if (scene.kind === "task" && scene.taskId) {
      try {
        const [ctx, layout] = await Promise.all([
          loadTaskContext(this.api, scene.taskId),
          this.api.taskLayout(scene.taskId, t0, t1, gen),
        ]);
        if (!this.gate.accept(gen)) return;
        this.drawTaskView(ctx, layout.groups, layout.color_key, t0, t1);
      } catch (err) {
        clear(this.taskRoot);
        this.taskRoot.appendChild(
          el("div", { class: "chart-error" }, `task view failed: ${(err as Error).message}`),
        );
      }
    } else {
      clear(this.taskRoot);
      this.taskRoot.appendChild(
        el("div", { class: "hint" }, "click a task in the Component View to enable the Task View"),
      );
    }
    this.applyHighlight(scene);
  }

  // --- drawing ---------------------------------------------------------------

  private timeAxis(svg: SVGElement, t0: number, t1: number, y: number): void {
    const x = linearScale(t0, t1, MARGIN.left, VIEW_W - MARGIN.right);
    svg.appendChild(svgEl("line", {
      x1: String(MARGIN.left), y1: String(y), x2: String(VIEW_W - MARGIN.right), y2: String(y),
      stroke: "#333",
    }));
    for (const tick of niceTicks(t0, t1)) {
      const tx = x(tick);
      svg.appendChild(svgEl("line", {
        x1: String(tx), y1: String(y), x2: String(tx), y2: String(y + 4), stroke: "#333",
      }));
      const label = svgEl("text", { x: String(tx - 18), y: String(y + 15), class: "tick" });
      label.textContent = timeLabel(tick, t1 - t0);
      svg.appendChild(label);
    }
  }

  private barRect(
    bar: LayoutBar,
    cmap: ColorKey,
    x: (v: number) => number,
    regionY: number,
    regionH: number,
  ): SVGElement {
    const idx = cmap.keys[bar.color_key];
    const fill = idx !== undefined ? cmap.palette[idx] : "#888888";
    const rect = svgEl("rect", {
      x: x(bar.x0).toFixed(1),
      y: (regionY + bar.y * regionH).toFixed(1),
      width: Math.max(0.75, x(bar.x1) - x(bar.x0)).toFixed(1),
      height: Math.max(0.75, bar.h * regionH).toFixed(1),
      fill,
      "data-task": bar.task_id,
      "data-key": bar.color_key,
    });
    rect.addEventListener("mouseenter", () => {
      this.store.hover({ hoverTask: bar.task_id, hoverKey: undefined });
      void this.showDetails(bar.task_id);
    });
    rect.addEventListener("mouseleave", () => this.store.hover({ hoverTask: undefined }));
    this.track(this.bars, bar.task_id, rect);
    this.track(this.keyed, bar.color_key, rect);
    return rect;
  }

  private track(map: Map<string, SVGElement[]>, key: string, node: SVGElement): void {
    const list = map.get(key);
    if (list) list.push(node);
    else map.set(key, [node]);
  }

  private drawComponent(
    scene: SceneState,
    bars: LayoutBar[],
    cmap: ColorKey,
    minRowH: number,
    t0: number,
    t1: number,
  ): void {
    clear(this.componentRoot);
    // when uniform rows would drop under 6px the canvas grows and scrolls
    const neededH = minRowH > 0 ? MIN_ROW_PX / minRowH : COMPONENT_H;
    const plotH = Math.max(COMPONENT_H, Math.min(20000, neededH)) - MARGIN.bottom - MARGIN.top;
    const svg = svgEl("svg", {
      width: String(VIEW_W),
      height: String(plotH + MARGIN.top + MARGIN.bottom),
      class: "component-view",
    });
    const x = linearScale(t0, t1, MARGIN.left, VIEW_W - MARGIN.right);
    const watermark = svgEl("text", {
      x: String(MARGIN.left + 6), y: String(MARGIN.top + 18), class: "watermark",
    });
    watermark.textContent = scene.component ?? "";
    svg.appendChild(watermark);
    for (const bar of bars) {
      const rect = this.barRect(bar, cmap, x, MARGIN.top, plotH);
      rect.addEventListener("click", () => this.store.selectTask(bar.task_id));
      svg.appendChild(rect);
    }
    this.timeAxis(svg, t0, t1, MARGIN.top + plotH);
    this.bindGestures(svg);
    this.componentRoot.appendChild(svg);
  }

  private drawTaskView(
    ctx: TaskContext,
    groups: { parent: LayoutBar[]; current: LayoutBar[]; children: LayoutBar[] },
    cmap: ColorKey,
    t0: number,
    t1: number,
  ): void {
    clear(this.taskRoot);
    const svg = svgEl("svg", { width: String(VIEW_W), height: String(TASK_H), class: "task-view" });
    const x = linearScale(t0, t1, MARGIN.left, VIEW_W - MARGIN.right);
    const plotH = TASK_H - MARGIN.top - MARGIN.bottom;
    const regions: [string, LayoutBar[], number, number, (bar: LayoutBar) => void][] = [
      ["parent", groups.parent, 0.0, 0.18, () => {
        const target = parentTarget(ctx);
        if (target) this.store.selectTask(target);
      }],
      ["current", groups.current, 0.22, 0.18, () => undefined],
      ["subtasks", groups.children, 0.44, 0.56, (bar) => this.store.selectTask(bar.task_id)],
    ];
    for (const [label, bars, relY, relH, onClick] of regions) {
      const ry = MARGIN.top + relY * plotH;
      const rh = relH * plotH;
      svg.appendChild(svgEl("rect", {
        x: String(MARGIN.left), y: String(ry),
        width: String(VIEW_W - MARGIN.left - MARGIN.right), height: String(rh),
        fill: "#f7f7f7",
      }));
      const tag = svgEl("text", { x: String(MARGIN.left + 2), y: String(ry + 10), class: "tick" });
      tag.textContent = label;
      svg.appendChild(tag);
      for (const bar of bars) {
        const rect = this.barRect(bar, cmap, x, ry, rh);
        rect.addEventListener("click", () => onClick(bar));
        svg.appendChild(rect);
      }
    }
    this.timeAxis(svg, t0, t1, MARGIN.top + plotH);
    this.bindGestures(svg);
    this.taskRoot.appendChild(svg);
  }

  private drawLegend(cmap: ColorKey): void {
    clear(this.sidebar);
    this.legend.clear();
    this.sidebar.appendChild(el("div", { class: "sidebar-title" }, "Legend"));
    const detail = el("div", { class: "task-details", id: "task-details" });
    this.sidebar.appendChild(detail);
    const list = el("div", { class: "legend" });
    const keys = Object.keys(cmap.keys).sort((a, b) => cmap.keys[a] - cmap.keys[b]);
    for (const key of keys) {
      const row = el("div", { class: "legend-row" });
      const swatch = el("span", { class: "swatch" });
      swatch.style.background = cmap.palette[cmap.keys[key]];
      row.appendChild(swatch);
      row.appendChild(el("span", {}, key));
      row.addEventListener("mouseenter", () =>
        this.store.hover({ hoverKey: key, hoverTask: undefined }));
      row.addEventListener("mouseleave", () => this.store.hover({ hoverKey: undefined }));
      list.appendChild(row);
      this.legend.set(key, row);
    }
    this.sidebar.appendChild(list);
  }

  private async showDetails(taskId: string): Promise<void> {
    const detail = this.sidebar.querySelector("#task-details");
    if (!detail) return;
    let task: TaskRecord;
    try {
      task = await this.api.task(taskId);
    } catch (err) {
      detail.textContent = `task lookup failed: ${(err as Error).message}`;
      return;
    }
    clear(detail);
    const rows: [string, string][] = [
      ["id", task.id],
      ["parent", task.parent_id ?? "(root)"],
      ["category", task.category],
      ["action", task.action],
      ["location", task.location],
      ["start", `${task.start}s`],
      ["end", task.end === null ? "open" : `${task.end}s`],
    ];
    for (const [k, v] of Object.entries(task.details)) rows.push([k, v]);
    for (const [k, v] of rows) {
      const line = el("div", { class: "detail-row" });
      line.appendChild(el("b", {}, `${k}: `));
      line.appendChild(el("span", {}, v));
      detail.appendChild(line);
    }
  }

  /** shared highlight: legend hover and bar hover mark both views */
  applyHighlight(scene: SceneState): void {
    const hl: HighlightState = { hoverKey: scene.hoverKey, hoverTask: scene.hoverTask };
    for (const [key, nodes] of this.keyed) {
      for (const node of nodes) {
        const cls = EMPHASIS_CLASS[barEmphasis(
          { task_id: node.getAttribute("data-task") ?? "", color_key: key }, hl,
        )];
        node.setAttribute("class", cls);
      }
    }
    for (const [key, row] of this.legend) {
      row.setAttribute("class", `legend-row ${EMPHASIS_CLASS[legendEmphasis(key, hl)]}`);
    }
  }

  private bindGestures(svg: SVGElement): void {
    svg.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const scene = this.store.get();
      const [t0, t1] = this.window(scene);
      const rect = (svg as SVGGraphicsElement).getBoundingClientRect();
      const rel = (ev.clientX - rect.left - MARGIN.left) / (rect.width - MARGIN.left - MARGIN.right);
      const focus = t0 + Math.min(1, Math.max(0, rel)) * (t1 - t0);
      const factor = (ev as WheelEvent).deltaY > 0 ? 1.25 : 0.8;
      const [n0, n1] = zoomWindow(t0, t1, focus, factor);
      this.store.zoomTo(n0, n1); // refreshes the component AND task views
    }, { passive: false });
    let dragX: number | null = null;
    svg.addEventListener("mousedown", (ev) => { dragX = ev.clientX; });
    svg.addEventListener("mouseup", (ev) => {
      if (dragX === null) return;
      const rect = (svg as SVGGraphicsElement).getBoundingClientRect();
      const frac = (dragX - ev.clientX) / Math.max(1, rect.width);
      dragX = null;
      if (Math.abs(frac) < 0.01) return;
      const scene = this.store.get();
      const [t0, t1] = this.window(scene);
      const [n0, n1] = panWindow(t0, t1, frac);
      this.store.zoomTo(n0, n1);
    });
  }
}
