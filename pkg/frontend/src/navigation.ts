/**
 * Task-tree navigation for the Task View: clicking the parent bar walks
 * one step toward the root, clicking a child bar drills down. The walk is
 * exactly the server's parent chain; no hierarchy is recomputed here.
 */

import { ApiClient, TaskRecord } from "./api.js";

export interface TaskContext {
  current: TaskRecord;
  parent: TaskRecord | null;
  children: TaskRecord[];
}

export async function loadTaskContext(api: ApiClient, taskId: string): Promise<TaskContext> {
  const chain = await api.parents(taskId);
  const current = chain[0];
  const parent = chain.length > 1 ? chain[1] : null;
  const children = await api.children(taskId);
  return { current, parent, children };
}

/** id to select when the parent bar is clicked (root stays put) */
export function parentTarget(ctx: TaskContext): string | null {
  return ctx.parent ? ctx.parent.id : null;
}

/** id to select when a child bar is clicked */
export function childTarget(ctx: TaskContext, childId: string): string | null {
  return ctx.children.some((c) => c.id === childId) ? childId : null;
}

/**
 * Walk from a task to the root by repeatedly "clicking the parent";
 * returns every visited id, starting task included.
 */
export async function walkToRoot(api: ApiClient, taskId: string, limit = 1000): Promise<string[]> {
  const visited: string[] = [];
  let cursor: string | null = taskId;
  while (cursor !== null && visited.length < limit) {
    visited.push(cursor);
    const ctx = await loadTaskContext(api, cursor);
    cursor = parentTarget(ctx);
  }
  return visited;
}
