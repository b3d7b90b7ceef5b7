/**
 * The single scene store. Every view derives from one SceneState, so a
 * zoom or drag anywhere updates the shared time window and every chart
 * refreshes to the same period; committed changes are pushed into the
 * browser history as encoded URLs.
 */

import { DEFAULT_SCENE, SceneState, decodeScene, encodeScene, sceneEquals } from "./scene.js";

export type Listener = (scene: SceneState, previous: SceneState) => void;

export interface HistorySink {
  push(query: string): void;
  replace(query: string): void;
}

export class SceneStore {
  private scene: SceneState;
  private listeners: Listener[] = [];

  constructor(initial?: SceneState, private history?: HistorySink) {
    this.scene = initial ? { ...initial } : { ...DEFAULT_SCENE };
  }

  get(): SceneState {
    return this.scene;
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  /** Apply a patch; history entry unless transient (hover) or unchanged. */
  update(patch: Partial<SceneState>, opts: { transient?: boolean } = {}): SceneState {
    const previous = this.scene;
    const next = { ...previous, ...patch };
    if (sceneEquals(previous, next)) return previous;
    this.scene = next;
    if (this.history) {
      const query = encodeScene(next);
      if (opts.transient) this.history.replace(query);
      else this.history.push(query);
    }
    for (const fn of [...this.listeners]) fn(next, previous);
    return next;
  }

  /** Zoom/drag from any chart: one shared window for every view. */
  zoomTo(t0: number, t1: number): SceneState {
    if (!(t0 < t1)) return this.scene;
    return this.update({ t0, t1 });
  }

  /** Restore a state decoded from the URL (back/forward navigation). */
  restore(query: string): SceneState {
    const { scene } = decodeScene(query);
    const previous = this.scene;
    this.scene = scene;
    for (const fn of [...this.listeners]) fn(scene, previous);
    return scene;
  }

  openComponent(name: string): SceneState {
    return this.update({ kind: "component", component: name, taskId: undefined });
  }

  /** Clicking a bar selects the current task and enables the Task View. */
  selectTask(taskId: string): SceneState {
    return this.update({ kind: "task", taskId });
  }

  hover(patch: { hoverKey?: string; hoverTask?: string }): SceneState {
    return this.update(patch, { transient: true });
  }
}

/** Zoom about a cursor position: wheel gesture mapping. */
export function zoomWindow(
  t0: number,
  t1: number,
  focus: number,
  factor: number,
): [number, number] {
  const span = (t1 - t0) * factor;
  const rel = (focus - t0) / (t1 - t0);
  const n0 = focus - rel * span;
  return [n0, n0 + span];
}

/** Pan by a fraction of the current window: drag gesture mapping. */
export function panWindow(t0: number, t1: number, fraction: number): [number, number] {
  const delta = (t1 - t0) * fraction;
  return [t0 + delta, t1 + delta];
}
