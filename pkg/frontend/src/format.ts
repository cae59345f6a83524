/** Pure formatting helpers; every number shown is traceable to an API field. */

import type { ActionDoc, OutcomeVector } from "./types.js";

export const OUTCOME_LABELS = [
  "destroy enemy top",
  "destroy enemy bottom",
  "win on timeout",
  "enemy destroys top",
  "enemy destroys bottom",
  "enemy wins timeout",
] as const;

/** Scalar action quality: the agent's total win probability. */
export function agentValue(value: OutcomeVector): number {
  return value[0] + value[1] + value[2];
}

export function percent(x: number): string {
  return `${(100 * x).toFixed(1)}%`;
}

/**
 * Red/green split of a base-health bar: green is the remaining fraction of
 * the starting health, red the damage already inflicted.
 */
export function healthBarSplit(normalizedHealth: number): { greenPct: number; redPct: number } {
  const clamped = Math.max(0, Math.min(1, normalizedHealth));
  const greenPct = 100 * clamped;
  return { greenPct, redPct: 100 - greenPct };
}

const UNIT_NAMES = ["marine", "baneling", "immortal"] as const;

/** Compact "+2 marine, +1 pylon" style text for one lane row of an action box. */
export function laneSummary(counts: [number, number, number]): string {
  const parts = counts
    .map((n, i) => (n > 0 ? `+${n} ${UNIT_NAMES[i]}` : null))
    .filter((p): p is string => p !== null);
  return parts.join(", ");
}

/** Human-readable action description (both lanes plus pylons). */
export function describeAction(action: ActionDoc): string {
  const parts: string[] = [];
  const top = laneSummary(action.top);
  const bottom = laneSummary(action.bottom);
  if (top) parts.push(`top: ${top}`);
  if (bottom) parts.push(`bottom: ${bottom}`);
  if (action.pylons > 0) parts.push(`+${action.pylons} pylon${action.pylons > 1 ? "s" : ""}`);
  return parts.length ? parts.join(" · ") : "save";
}

/** The dominant expected outcome for an expanded action. */
export function dominantOutcome(value: OutcomeVector): { label: string; probability: number } {
  let best = 0;
  for (let i = 1; i < value.length; i++) {
    if (value[i] > value[best]) best = i;
  }
  return { label: OUTCOME_LABELS[best], probability: value[best] };
}
