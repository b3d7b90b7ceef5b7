/**
 * App bootstrap: decode the scene from the URL, wire the store to the
 * browser history (back/forward replays scenes), and route between the
 * overview page and the stacked component + task page.
 */

import { httpClient } from "./api.js";
import { OverviewPanel } from "./overview.js";
import { decodeScene, encodeScene, SceneState } from "./scene.js";
import { SceneStore } from "./state.js";
import { TimelinePanel } from "./timeline.js";
import { clear, el } from "./render.js";

async function boot(): Promise<void> {
  const api = httpClient("");
  const app = document.getElementById("app");
  if (!app) throw new Error("missing #app container");

  const { scene: initial, warnings } = decodeScene(window.location.search);
  const store = new SceneStore(initial, {
    push: (query) => window.history.pushState(null, "", query || window.location.pathname),
    replace: (query) => window.history.replaceState(null, "", query || window.location.pathname),
  });
  window.addEventListener("popstate", () => {
    store.restore(window.location.search);
  });

  const meta = await api.meta();
  const span = Math.max(meta.time_max - meta.time_min, 0);
  const extent: [number, number] = [
    meta.time_min,
    meta.time_max + Math.max(span * 1e-6, 1e-12),
  ];

  const banner = el("div", { class: "banner" });
  const overviewRoot = el("div", { id: "overview" });
  const timelineWrap = el("div", { id: "timeline" });
  const taskRoot = el("div", { id: "task-view" });
  const componentRoot = el("div", { id: "component-view" });
  const sidebar = el("div", { id: "sidebar" });
  timelineWrap.appendChild(taskRoot);
  timelineWrap.appendChild(componentRoot);
  const split = el("div", { class: "split" });
  split.appendChild(timelineWrap);
  split.appendChild(sidebar);
  app.appendChild(banner);
  app.appendChild(overviewRoot);
  app.appendChild(split);

  for (const w of warnings) {
    banner.appendChild(el("div", { class: "warning" }, w));
  }

  const overview = new OverviewPanel(overviewRoot, api, store, extent);
  const timeline = new TimelinePanel(componentRoot, taskRoot, sidebar, api, store, extent);

  let lastEncoded = "";
  const route = async (scene: SceneState, previous?: SceneState) => {
    const hoverOnly =
      previous !== undefined &&
      encodeScene({ ...scene, hoverKey: undefined, hoverTask: undefined }) ===
        encodeScene({ ...previous, hoverKey: undefined, hoverTask: undefined });
    if (hoverOnly) {
      timeline.applyHighlight(scene);
      return;
    }
    const encoded = encodeScene(scene);
    if (encoded === lastEncoded) return;
    lastEncoded = encoded;
    const onOverview = scene.kind === "overview";
    overviewRoot.style.display = onOverview ? "" : "none";
    split.style.display = onOverview ? "none" : "";
    if (onOverview) await overview.render(scene);
    else await timeline.render(scene);
  };
  store.subscribe((scene, previous) => void route(scene, previous));
  await route(store.get());
}

window.addEventListener("DOMContentLoaded", () => {
  void boot().catch((err) => {
    const app = document.getElementById("app");
    if (app) {
      clear(app);
      app.appendChild(el("div", { class: "chart-error" }, `fatal: ${err.message}`));
    }
  });
});
