/** State-node rendering: health bars, unit grid, counts, flaw badges. */

import { healthBarSplit, percent } from "./format.js";
import type { FlawReportDoc, StateDoc } from "./types.js";

export interface HealthBarSpec {
  label: string;
  greenPct: number;
  redPct: number;
}

const BASE_LABELS = ["friendly top", "friendly bottom", "enemy top", "enemy bottom"];

export function healthBars(state: StateDoc): HealthBarSpec[] {
  return state.base_health.map((h, i) => ({
    label: BASE_LABELS[i],
    ...healthBarSplit(h),
  }));
}

export interface BadgeSpec {
  detector: string;
  severe: boolean;
  title: string;
}

/** Severe above the 10% rise bar used by the health detector. */
const SEVERE_RISE = 0.1;

export function flawBadges(reports: FlawReportDoc[]): BadgeSpec[] {
  return reports.map((report) => ({
    detector: report.detector,
    severe: report.detector === "health_increase" && report.severity > SEVERE_RISE,
    title: report.message,
  }));
}

const DETECTOR_COLORS: Record<string, string> = {
  health_increase: "#c0392b",
  lane_independence: "#8e44ad",
  infeasible_units: "#d35400",
  missing_terminal: "#2c3e50",
  building_decrease: "#16a085",
  eval_inconsistency: "#7f8c8d",
};

export function renderStateNode(
  container: HTMLElement,
  state: StateDoc,
  flaws: FlawReportDoc[] = [],
): void {
  const node = document.createElement("div");
  node.className = "state-node";

  const header = document.createElement("div");
  header.className = "state-header";
  header.textContent = `wave ${state.wave} · ${state.own_currency} minerals · pylons ${state.pylons[0]}/${state.pylons[1]}`;
  node.append(header);

  for (const bar of healthBars(state)) {
    const row = document.createElement("div");
    row.className = "health-row";
    const label = document.createElement("span");
    label.textContent = bar.label;
    const track = document.createElement("div");
    track.className = "health-track";
    const green = document.createElement("div");
    green.className = "health-green";
    green.style.width = `${bar.greenPct}%`;
    const red = document.createElement("div");
    red.className = "health-red";
    red.style.width = `${bar.redPct}%`;
    track.append(green, red);
    row.append(label, track);
    node.append(row);
  }

  for (const lane of [0, 1]) {
    const row = document.createElement("div");
    row.className = "grid-row";
    const cells = lane === 0 ? [0, 1, 2, 3] : [4, 5, 6, 7];
    for (const cell of cells) {
      const box = document.createElement("div");
      box.className = "grid-cell";
      const lines: string[] = [];
      for (let owner = 0; owner < 2; owner++) {
        for (let kind = 0; kind < 3; kind++) {
          const n = state.unit_grid[owner][kind][cell];
          if (n > 0) lines.push(`${owner === 0 ? "F" : "E"}${"MBI"[kind]}×${n}`);
        }
      }
      box.textContent = lines.join(" ");
      row.append(box);
    }
    node.append(row);
  }

  if (flaws.length > 0) {
    const badges = document.createElement("div");
    badges.className = "flaw-badges";
    for (const badge of flawBadges(flaws)) {
      const chip = document.createElement("span");
      chip.className = badge.severe ? "flaw-badge severe" : "flaw-badge";
      chip.style.background = DETECTOR_COLORS[badge.detector] ?? "#555";
      chip.title = badge.title;
      chip.textContent = badge.detector.replace(/_/g, " ");
      badges.append(chip);
    }
    node.append(badges);
    node.classList.add("flawed");
  }

  container.append(node);
}
