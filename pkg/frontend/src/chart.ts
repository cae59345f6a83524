/** Sorted root-action win-probability chart (bar specs + DOM rendering). */

import { agentValue, describeAction, percent } from "./format.js";
import type { RootTableEntry } from "./types.js";

export interface BarSpec {
  /** index in the API table (already sorted by the server) */
  rank: number;
  label: string;
  /** bar value, exactly the API agent value — never recomputed */
  value: number;
  heightPct: number;
}

/** Bars in the exact order and with the exact values the API returned. */
export function chartBars(table: RootTableEntry[]): BarSpec[] {
  return table.map((entry, rank) => {
    const value = agentValue(entry.value);
    return {
      rank,
      label: describeAction(entry.action),
      value,
      heightPct: 100 * value,
    };
  });
}

export function renderChart(container: HTMLElement, table: RootTableEntry[]): void {
  container.textContent = "";
  const chart = document.createElement("div");
  chart.className = "root-chart";
  for (const bar of chartBars(table)) {
    const column = document.createElement("div");
    column.className = "root-chart-bar";
    column.title = `${bar.label} — ${percent(bar.value)}`;
    const fill = document.createElement("div");
    fill.className = "root-chart-fill";
    fill.style.height = `${bar.heightPct}%`;
    const tag = document.createElement("span");
    tag.className = "root-chart-value";
    tag.textContent = percent(bar.value);
    column.append(fill, tag);
    chart.append(column);
  }
  container.append(chart);
}
