/** API document shapes (mirrors docs/formats.md in the backend repo). */

/** Purchases split by lane; at most one lane is nonzero. */
export interface ActionDoc {
  top: [number, number, number];
  bottom: [number, number, number];
  pylons: number;
}

/** Perspective-relative quantized game state. */
export interface StateDoc {
  perspective: number;
  wave: number;
  /** friendly top, friendly bottom, enemy top, enemy bottom; normalized */
  base_health: [number, number, number, number];
  own_currency: number;
  /** [player][lane][type] building counts */
  buildings: number[][][];
  pylons: [number, number];
  /** [owner][type][cell]; cells 0-3 top lane, 4-7 bottom lane */
  unit_grid: number[][][];
}

/** Six win-condition probabilities; first three belong to the agent. */
export type OutcomeVector = [number, number, number, number, number, number];

export interface TreeNodeDoc {
  id: number;
  depth: number;
  terminal: boolean;
  pv: boolean;
  value: OutcomeVector | null;
  enemy_currency: number;
  state: StateDoc;
}

export interface TreeEdgeDoc {
  parent: number;
  child: number;
  friendly_rank: number;
  enemy_rank: number;
  pv: boolean;
  value: OutcomeVector;
  friendly: ActionDoc;
  enemy: ActionDoc;
}

export interface TreeDoc {
  format: "tow-tree";
  version: number;
  params: { depth: number; friendly: number[]; enemy: number[] };
  guard_terminals: boolean;
  root: number;
  nodes: TreeNodeDoc[];
  edges: TreeEdgeDoc[];
}

export interface RootTableEntry {
  action: ActionDoc;
  value: OutcomeVector;
}

export interface DecisionDoc {
  index: number;
  wave: number;
  state: StateDoc;
  friendly_action: ActionDoc;
  enemy_action: ActionDoc;
  root_table: RootTableEntry[];
  best_value: number;
}

export interface ReplayDoc {
  format: "tow-replay";
  version: number;
  game_id: string;
  config_hash: string;
  seed: number;
  opponent: string;
  outcome: { winner: number; condition: number };
  n_decisions: number;
  decisions: DecisionDoc[];
}

export interface GameEntry {
  game_id: string;
  config_hash: string;
  opponent: string;
  agent_won: boolean;
  n_decisions: number;
}

export interface InterestScoreDoc {
  index: number;
  value_drop: number | null;
  fluctuation: number;
  criticality: number;
}

export interface FlawReportDoc {
  detector: string;
  node_ids: number[];
  severity: number;
  message: string;
  game_id: string;
  decision: number;
}

export interface GameLintDoc {
  game_id: string;
  game: {
    counts: Record<string, number>;
    agent_won?: boolean;
    reports: FlawReportDoc[];
  };
}
