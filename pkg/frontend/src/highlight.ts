/**
 * Hover highlighting rules, shared by the Component View and the Task
 * View so a hover in either view marks the counterpart on both sides:
 *
 *  - hovering a legend key bolds every bar of that key and grays out the
 *    rest, in both views;
 *  - hovering a bar bolds that task's bars everywhere (and its details
 *    appear in the sidebar).
 */

export interface HighlightState {
  hoverKey?: string;
  hoverTask?: string;
}

export type BarEmphasis = "bold" | "grayed" | "normal";

export function barEmphasis(
  bar: { task_id: string; color_key: string },
  hl: HighlightState,
): BarEmphasis {
  if (hl.hoverTask !== undefined) {
    return bar.task_id === hl.hoverTask ? "bold" : "normal";
  }
  if (hl.hoverKey !== undefined) {
    return bar.color_key === hl.hoverKey ? "bold" : "grayed";
  }
  return "normal";
}

export function legendEmphasis(key: string, hl: HighlightState): BarEmphasis {
  if (hl.hoverKey === undefined) return "normal";
  return key === hl.hoverKey ? "bold" : "grayed";
}

/** CSS class names per emphasis; the stylesheet draws bolder outlines. */
export const EMPHASIS_CLASS: Record<BarEmphasis, string> = {
  bold: "bar-bold",
  grayed: "bar-grayed",
  normal: "",
};
