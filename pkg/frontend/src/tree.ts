/** Tree explorer: left-to-right state -> action -> state columns. */

import { agentValue, describeAction, dominantOutcome, laneSummary, percent } from "./format.js";
import { renderStateNode } from "./staterender.js";
import type { TreeEdgeDoc } from "./types.js";
import type { TreeViewModel } from "./viewmodel.js";

/** The house-shaped action box, divided horizontally into top/bottom lanes. */
function renderActionBox(edge: TreeEdgeDoc): HTMLElement {
  const box = document.createElement("div");
  box.className = edge.pv ? "action-box pv" : "action-box";
  for (const side of ["friendly", "enemy"] as const) {
    const action = edge[side];
    const row = document.createElement("div");
    row.className = `action-${side}`;
    const topLane = document.createElement("div");
    topLane.className = "action-lane action-lane-top";
    topLane.textContent = laneSummary(action.top) || "—";
    const bottomLane = document.createElement("div");
    bottomLane.className = "action-lane"; // the faint divider sits between lanes
    bottomLane.textContent = laneSummary(action.bottom) || "—";
    const who = document.createElement("span");
    who.className = "action-owner";
    who.textContent = side === "friendly" ? "you" : "opp";
    row.append(who, topLane, bottomLane);
    if (action.pylons > 0) {
      const pylons = document.createElement("span");
      pylons.className = "action-pylons";
      pylons.textContent = `+${action.pylons}⚡`;
      row.append(pylons);
    }
    box.append(row);
  }
  const outcome = dominantOutcome(edge.value);
  const tag = document.createElement("div");
  tag.className = "action-outcome";
  tag.textContent = `${percent(outcome.probability)} ${outcome.label}`;
  tag.title = `win probability ${percent(agentValue(edge.value))} — ${describeAction(edge.friendly)}`;
  box.append(tag);
  return box;
}

export function renderTree(container: HTMLElement, vm: TreeViewModel): void {
  container.textContent = "";
  const walk = (nodeId: number, target: HTMLElement): void => {
    const nodeDoc = vm.index.doc.nodes[nodeId];
    const row = document.createElement("div");
    row.className = nodeDoc.pv ? "tree-path pv" : "tree-path";

    const cell = document.createElement("div");
    cell.className = "tree-node-cell";
    renderStateNode(cell, nodeDoc.state, vm.flawsAt(nodeId));
    const controls = document.createElement("div");
    controls.className = "tree-controls";
    const edges = vm.index.childEdges.get(nodeId) ?? [];
    if (edges.length > 0 && !nodeDoc.terminal) {
      const more = document.createElement("button");
      more.textContent = "next best";
      more.onclick = () => {
        vm.expandNextBest(nodeId);
        renderTree(container, vm);
      };
      const principal = document.createElement("button");
      principal.textContent = "best path";
      principal.onclick = () => {
        vm.expandPrincipalFrom(nodeId);
        renderTree(container, vm);
      };
      const less = document.createElement("button");
      less.textContent = "collapse";
      less.onclick = () => {
        vm.collapse(nodeId);
        renderTree(container, vm);
      };
      controls.append(more, principal, less);
    }
    cell.append(controls);
    row.append(cell);

    const childColumn = document.createElement("div");
    childColumn.className = "tree-children";
    for (const edge of vm.visibleEdges(nodeId)) {
      const branch = document.createElement("div");
      branch.className = "tree-branch";
      branch.append(renderActionBox(edge));
      const childBox = document.createElement("div");
      walk(edge.child, childBox);
      branch.append(childBox);
      childColumn.append(branch);
    }
    row.append(childColumn);
    target.append(row);
  };
  walk(vm.index.doc.root, container);
}
