/** Schema-conformant documents for tests (shapes per the backend docs). */

import type {
  ActionDoc,
  FlawReportDoc,
  OutcomeVector,
  RootTableEntry,
  StateDoc,
  TreeDoc,
} from "../src/types.js";

export function action(top = 0, bottom = 0, pylons = 0): ActionDoc {
  return { top: [top, 0, 0], bottom: [bottom, 0, 0], pylons };
}

export function vec(win: number, index = 0): OutcomeVector {
  const v: OutcomeVector = [0, 0, 0, 0, 0, 0];
  v[index] = win;
  return v;
}

export function state(overrides: Partial<StateDoc> = {}): StateDoc {
  return {
    perspective: 0,
    wave: 12,
    base_health: [0.9, 0.75, 0.6, 1.0],
    own_currency: 250,
    buildings: [
      [[2, 0, 0], [1, 0, 0]],
      [[1, 1, 0], [0, 0, 1]],
    ],
    pylons: [1, 0],
    unit_grid: [
      [[1, 0, 0, 0, 0, 0, 0, 0], [0, 0, 0, 0, 0, 0, 0, 0], [0, 0, 0, 0, 0, 0, 0, 0]],
      [[0, 0, 0, 2, 0, 0, 0, 0], [0, 0, 0, 0, 0, 0, 0, 0], [0, 0, 0, 0, 0, 0, 0, 0]],
    ],
    ...overrides,
  };
}

/**
 * Depth-2 tree, ids:
 *   0 root
 *   1 = PV child (f0,e0), 2 = (f0,e1), 3 = (f1,e0), 4 = (f1,e1)
 *   5 = PV leaf under 1 (f0,e0), 6 = (f0,e1)
 */
export function tree(): TreeDoc {
  const mk = (id: number, depth: number, value: OutcomeVector | null, pv = false) => ({
    id,
    depth,
    terminal: false,
    pv,
    value,
    enemy_currency: 100,
    state: state({ wave: 12 + depth }),
  });
  return {
    format: "tow-tree",
    version: 1,
    params: { depth: 2, friendly: [2, 1], enemy: [2, 1] },
    guard_terminals: true,
    root: 0,
    nodes: [
      mk(0, 0, vec(0.7), true),
      mk(1, 1, vec(0.7), true),
      mk(2, 1, vec(0.8)),
      mk(3, 1, vec(0.5)),
      mk(4, 1, vec(0.4)),
      mk(5, 2, vec(0.7), true),
      mk(6, 2, vec(0.75)),
    ],
    edges: [
      { parent: 0, child: 1, friendly_rank: 0, enemy_rank: 0, pv: true, value: vec(0.7), friendly: action(2), enemy: action(1) },
      { parent: 0, child: 2, friendly_rank: 0, enemy_rank: 1, pv: false, value: vec(0.8), friendly: action(2), enemy: action(0, 1) },
      { parent: 0, child: 3, friendly_rank: 1, enemy_rank: 0, pv: false, value: vec(0.5), friendly: action(0, 2), enemy: action(1) },
      { parent: 0, child: 4, friendly_rank: 1, enemy_rank: 1, pv: false, value: vec(0.4), friendly: action(0, 2), enemy: action(0, 1) },
      { parent: 1, child: 5, friendly_rank: 0, enemy_rank: 0, pv: true, value: vec(0.7), friendly: action(1), enemy: action(1) },
      { parent: 1, child: 6, friendly_rank: 0, enemy_rank: 1, pv: false, value: vec(0.75), friendly: action(1), enemy: action(0, 1) },
    ],
  };
}

/** Root table sorted descending by agent value, matching the tree above. */
export function rootTable(): RootTableEntry[] {
  return [
    { action: action(2), value: vec(0.7) },
    { action: action(0, 2), value: vec(0.4) },
  ];
}

export function flaw(nodeIds: number[], detector = "health_increase", severity = 0.12): FlawReportDoc {
  return {
    detector,
    node_ids: nodeIds,
    severity,
    message: `${detector} at nodes ${nodeIds.join(",")}`,
    game_id: "g0",
    decision: 0,
  };
}
