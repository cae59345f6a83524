/**
 * Explorer view model: which game/decision is selected, which tree nodes are
 * visible, path pinning order, and flaw overlays.  Pure logic, no DOM —
 * rendering reads this state, tests drive it directly.
 */

import type { FlawReportDoc, TreeDoc, TreeEdgeDoc } from "./types.js";

export interface TreeIndex {
  doc: TreeDoc;
  childEdges: Map<number, TreeEdgeDoc[]>;
  parentOf: Map<number, number>;
}

export function indexTree(doc: TreeDoc): TreeIndex {
  const childEdges = new Map<number, TreeEdgeDoc[]>();
  const parentOf = new Map<number, number>();
  for (const edge of doc.edges) {
    const list = childEdges.get(edge.parent) ?? [];
    list.push(edge);
    childEdges.set(edge.parent, list);
    parentOf.set(edge.child, edge.parent);
  }
  for (const list of childEdges.values()) {
    list.sort((a, b) => a.friendly_rank - b.friendly_rank || a.enemy_rank - b.enemy_rank);
  }
  return { doc, childEdges, parentOf };
}

/** Node ids along the principal variation, root first. */
export function principalVariation(index: TreeIndex): number[] {
  const path = [index.doc.root];
  let current = index.doc.root;
  for (;;) {
    const pvEdge = (index.childEdges.get(current) ?? []).find((e) => e.pv);
    if (!pvEdge) return path;
    path.push(pvEdge.child);
    current = pvEdge.child;
  }
}

export class TreeViewModel {
  readonly index: TreeIndex;
  /** Nodes whose children are currently shown. */
  private expanded: Set<number>;
  /** Visible leaf-path order chosen by the user (rearrangeable). */
  private pathOrder: number[];
  private overlays: Map<number, FlawReportDoc[]>;

  constructor(doc: TreeDoc, flaws: FlawReportDoc[] = []) {
    this.index = indexTree(doc);
    // initially only the principal variation is open
    const pv = principalVariation(this.index);
    this.expanded = new Set(pv.slice(0, -1));
    this.pathOrder = [];
    this.overlays = new Map();
    for (const report of flaws) {
      for (const nodeId of report.node_ids) {
        const list = this.overlays.get(nodeId) ?? [];
        list.push(report);
        this.overlays.set(nodeId, list);
      }
    }
  }

  isExpanded(nodeId: number): boolean {
    return this.expanded.has(nodeId);
  }

  expandedSnapshot(): Set<number> {
    return new Set(this.expanded);
  }

  /**
   * Edges currently on screen under a node: along the PV only the PV edge
   * plus any explicitly opened siblings; an explicit expand shows them all.
   */
  visibleEdges(nodeId: number): TreeEdgeDoc[] {
    if (!this.expanded.has(nodeId)) return [];
    const edges = this.index.childEdges.get(nodeId) ?? [];
    const explicit = this.explicitlyOpened.get(nodeId);
    if (explicit === undefined) {
      return edges.filter((e) => e.pv);
    }
    return edges.filter((e) => e.pv || explicit >= e.friendly_rank);
  }

  /** friendly_rank threshold opened per node (next-best expansion). */
  private explicitlyOpened = new Map<number, number>();

  /** Reveal the next-best action column under a node. */
  expandNextBest(nodeId: number): void {
    const edges = this.index.childEdges.get(nodeId) ?? [];
    if (edges.length === 0) return;
    this.expanded.add(nodeId);
    const current = this.explicitlyOpened.get(nodeId);
    const shownRanks = new Set(this.visibleEdges(nodeId).map((e) => e.friendly_rank));
    const hidden = edges.map((e) => e.friendly_rank).filter((r) => !shownRanks.has(r));
    if (hidden.length === 0) return;
    const next = Math.min(...hidden);
    this.explicitlyOpened.set(nodeId, Math.max(current ?? -1, next));
  }

  /** Open the minimax-best path from a node down to the maximum depth. */
  expandPrincipalFrom(nodeId: number): void {
    let current = nodeId;
    for (;;) {
      const edges = this.index.childEdges.get(current) ?? [];
      if (edges.length === 0) return;
      this.expanded.add(current);
      const pvEdge = edges.find((e) => e.pv) ?? edges[0];
      current = pvEdge.child;
    }
  }

  /**
   * Collapse one level: explicit next-best opens fold back to the PV-only
   * view first; collapsing again hides the children entirely.  This makes
   * collapse the exact visual inverse of the expansion that preceded it.
   */
  collapse(nodeId: number): void {
    if (this.explicitlyOpened.has(nodeId)) {
      this.explicitlyOpened.delete(nodeId);
      return;
    }
    this.expanded.delete(nodeId);
  }

  /** Pin a leaf path to the top of the layout for side-by-side comparison. */
  rearrange(leafId: number, position: number): void {
    this.pathOrder = this.pathOrder.filter((id) => id !== leafId);
    this.pathOrder.splice(position, 0, leafId);
  }

  pathOrderSnapshot(): number[] {
    return [...this.pathOrder];
  }

  flawsAt(nodeId: number): FlawReportDoc[] {
    return this.overlays.get(nodeId) ?? [];
  }

  /** All node ids currently on screen, root included, in draw order. */
  visibleNodes(): number[] {
    const seen: number[] = [];
    const walk = (nodeId: number) => {
      seen.push(nodeId);
      for (const edge of this.visibleEdges(nodeId)) walk(edge.child);
    };
    walk(this.index.doc.root);
    return seen;
  }
}

/** Selected game/decision plus the open tree; deep-linkable via the URL. */
export interface ExplorerSelection {
  gameId: string | null;
  decision: number;
  showTree: boolean;
}

export function selectionToQuery(sel: ExplorerSelection): string {
  const params = new URLSearchParams();
  if (sel.gameId) params.set("game", sel.gameId);
  if (sel.decision > 0) params.set("decision", String(sel.decision));
  if (sel.showTree) params.set("tree", "1");
  const text = params.toString();
  return text ? `?${text}` : "";
}

export function selectionFromQuery(query: string): ExplorerSelection {
  const params = new URLSearchParams(query.startsWith("?") ? query.slice(1) : query);
  const decision = Number(params.get("decision") ?? "0");
  return {
    gameId: params.get("game"),
    decision: Number.isFinite(decision) && decision >= 0 ? Math.floor(decision) : 0,
    showTree: params.get("tree") === "1",
  };
}
