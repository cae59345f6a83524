/** Explorer bootstrap: game list, timeline, chart, tree view, URL state. */

import { ApiClient } from "./api.js";
import { renderChart } from "./chart.js";
import { percent } from "./format.js";
import type { FlawReportDoc, ReplayDoc } from "./types.js";
import {
  ExplorerSelection,
  TreeViewModel,
  selectionFromQuery,
  selectionToQuery,
} from "./viewmodel.js";

const api = new ApiClient(new URLSearchParams(location.search).get("api") ?? "");

const state: {
  selection: ExplorerSelection;
  replay: ReplayDoc | null;
  flaws: FlawReportDoc[];
} = {
  selection: selectionFromQuery(location.search),
  replay: null,
  flaws: [],
};

function el(id: string): HTMLElement {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing #${id}`);
  return found;
}

function pushUrl(): void {
  history.replaceState(null, "", selectionToQuery(state.selection) || location.pathname);
}

async function showGameList(): Promise<void> {
  const { games } = await api.listGames();
  const list = el("games");
  list.textContent = "";
  for (const game of games) {
    const item = document.createElement("button");
    item.className = "game-item";
    item.textContent = `${game.game_id} · vs ${game.opponent} · ${game.agent_won ? "won" : "lost"} · ${game.n_decisions} decisions`;
    item.onclick = () => selectGame(game.game_id);
    list.append(item);
  }
}

async function selectGame(gameId: string): Promise<void> {
  state.selection = { gameId, decision: 0, showTree: false };
  state.replay = await api.getGame(gameId);
  const lint = await api.getFlaws(gameId);
  state.flaws = lint?.game.reports ?? [];
  pushUrl();
  renderTimeline();
  renderDecision();
}

function renderTimeline(): void {
  const replay = state.replay;
  if (!replay) return;
  const timeline = el("timeline");
  timeline.textContent = "";
  replay.decisions.forEach((decision) => {
    const tick = document.createElement("button");
    tick.className =
      decision.index === state.selection.decision ? "timeline-tick active" : "timeline-tick";
    tick.textContent = `D${decision.index}`;
    tick.title = `wave ${decision.wave}, best ${percent(decision.best_value)}`;
    tick.onclick = () => {
      state.selection.decision = decision.index;
      state.selection.showTree = false;
      pushUrl();
      renderTimeline();
      renderDecision();
    };
    timeline.append(tick);
  });
}

function renderDecision(): void {
  const replay = state.replay;
  if (!replay) return;
  const decision = replay.decisions[state.selection.decision];
  if (!decision) return;

  const panel = el("decision-panel");
  panel.textContent = "";
  const heading = document.createElement("h3");
  heading.textContent = `decision ${decision.index} — wave ${decision.wave}`;
  panel.append(heading);

  renderChart(el("chart"), decision.root_table);

  const show = document.createElement("button");
  show.id = "show-explanation";
  show.textContent = "Show Explanation";
  show.onclick = () => {
    state.selection.showTree = true;
    pushUrl();
    void renderTreePanel();
  };
  panel.append(show);

  el("tree-panel").textContent = "";
  if (state.selection.showTree) void renderTreePanel();
}

async function renderTreePanel(): Promise<void> {
  const { gameId, decision } = state.selection;
  if (!gameId) return;
  const doc = await api.getDecisionTree(gameId, decision);
  const flaws = state.flaws.filter((r) => r.decision === decision);
  const vm = new TreeViewModel(doc, flaws);
  const { renderTree } = await import("./tree.js");
  renderTree(el("tree-panel"), vm);
}

async function boot(): Promise<void> {
  await showGameList();
  const wanted = state.selection;
  const gameId = wanted.gameId;
  if (gameId !== null) {
    await selectGame(gameId);
    state.selection = { ...wanted };
    renderTimeline();
    renderDecision();
  }
}

void boot();
