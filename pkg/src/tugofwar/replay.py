"""Replay recording: one explanation tree per decision, plus interest heuristics.

A replay stores, for every decision point, the true abstract state the
agent saw, both chosen actions, the full search tree document and the
sorted root-action table.  Trees are precomputed at play time so the
explorer and the lint detectors see exactly what the agent computed.

Interest scores rank decision points for investigation: the drop in best
value since the previous decision, the spread across the root actions, and
criticality (best minus mean of the root actions).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .abstraction import AbstractState, abstract, estimate_enemy_currency, state_from_doc, state_to_doc
from .config import GameConfig, PlayerId, config_hash
from .game import GameOutcome, PlayerAction, Win, new_game, resolve_wave
from .models import QFunction, TransitionModel, agent_value
from .search import (
    SearchParams,
    _action_from_doc,
    _action_to_doc,
    best_action,
    build_tree,
    root_action_table,
    serialize_tree,
)

REPLAY_FORMAT = "tow-replay"
REPLAY_VERSION = 1


@dataclass
class DecisionRecord:
    index: int
    wave: int
    state: AbstractState                     # agent's (P1) view before acting
    friendly_action: PlayerAction
    enemy_action: PlayerAction
    root_table: list[tuple[PlayerAction, np.ndarray]]
    tree_doc: dict | None = None             # may be stored separately on disk

    @property
    def best_value(self) -> float:
        return agent_value(self.root_table[0][1])


@dataclass
class Replay:
    game_id: str
    config_hash: str
    seed: int
    opponent: str
    outcome: GameOutcome
    decisions: list[DecisionRecord]

    @property
    def agent_won(self) -> bool:
        return self.outcome.winner == PlayerId.P1


@dataclass
class InterestScore:
    index: int
    value_drop: float | None     # undefined at the first decision
    fluctuation: float
    criticality: float


def interest_scores(replay: Replay) -> list[InterestScore]:
    """Pure function of the root tables; one score per decision."""
    scores = []
    prev_best = None
    for decision in replay.decisions:
        values = [agent_value(v) for _, v in decision.root_table]
        best = values[0]
        scores.append(
            InterestScore(
                index=decision.index,
                value_drop=None if prev_best is None else prev_best - best,
                fluctuation=max(values) - min(values),
                criticality=best - float(np.mean(values)),
            )
        )
        prev_best = best
    return scores


def generate_replay(
    q: QFunction,
    t: TransitionModel,
    opponent_policy,
    params: SearchParams,
    config: GameConfig,
    seed: int,
    game_id: str,
    opponent_name: str = "random",
    guard_terminals: bool = True,
) -> Replay:
    """Play one game with the search agent as Player 1, recording a tree at
    every decision point."""
    state = new_game(config, seed)
    history: list[tuple[AbstractState, PlayerAction]] = []
    decisions: list[DecisionRecord] = []
    outcome = None
    index = 0
    while outcome is None:
        view = abstract(state, PlayerId.P1)
        enemy_cur = estimate_enemy_currency(history, config)
        tree = build_tree(
            view, q, t, params, config,
            enemy_currency=enemy_cur, guard_terminals=guard_terminals,
        )
        a1, _ = best_action(tree)
        a2 = opponent_policy(state, PlayerId.P2)
        nxt, outcome = resolve_wave(state, a1, a2)
        decisions.append(
            DecisionRecord(
                index=index,
                wave=state.wave,
                state=view,
                friendly_action=a1,
                enemy_action=a2,
                root_table=root_action_table(tree),
                tree_doc=serialize_tree(tree),
            )
        )
        history.append((view, a2))
        state = nxt
        index += 1
    return Replay(
        game_id=game_id,
        config_hash=config_hash(config),
        seed=seed,
        opponent=opponent_name,
        outcome=outcome,
        decisions=decisions,
    )


# ---------------------------------------------------------------- documents

def _table_to_doc(table: list[tuple[PlayerAction, np.ndarray]]) -> list[dict]:
    return [
        {"action": _action_to_doc(a), "value": [float(x) for x in v]}
        for a, v in table
    ]


def _table_from_doc(doc: list[dict]) -> list[tuple[PlayerAction, np.ndarray]]:
    return [(_action_from_doc(e["action"]), np.asarray(e["value"], dtype=np.float64)) for e in doc]


def replay_to_doc(replay: Replay, include_trees: bool = False) -> dict:
    decisions = []
    for d in replay.decisions:
        ddoc = {
            "index": d.index,
            "wave": d.wave,
            "state": state_to_doc(d.state),
            "friendly_action": _action_to_doc(d.friendly_action),
            "enemy_action": _action_to_doc(d.enemy_action),
            "root_table": _table_to_doc(d.root_table),
            "best_value": d.best_value,
        }
        if include_trees:
            ddoc["tree"] = d.tree_doc
        decisions.append(ddoc)
    return {
        "format": REPLAY_FORMAT,
        "version": REPLAY_VERSION,
        "game_id": replay.game_id,
        "config_hash": replay.config_hash,
        "seed": replay.seed,
        "opponent": replay.opponent,
        "outcome": {"winner": int(replay.outcome.winner), "condition": int(replay.outcome.condition)},
        "n_decisions": len(replay.decisions),
        "decisions": decisions,
    }


def replay_from_doc(doc: dict) -> Replay:
    if doc.get("format") != REPLAY_FORMAT or doc.get("version") != REPLAY_VERSION:
        raise ValueError("not a supported replay document")
    decisions = [
        DecisionRecord(
            index=d["index"],
            wave=d["wave"],
            state=state_from_doc(d["state"]),
            friendly_action=_action_from_doc(d["friendly_action"]),
            enemy_action=_action_from_doc(d["enemy_action"]),
            root_table=_table_from_doc(d["root_table"]),
            tree_doc=d.get("tree"),
        )
        for d in doc["decisions"]
    ]
    return Replay(
        game_id=doc["game_id"],
        config_hash=doc["config_hash"],
        seed=doc["seed"],
        opponent=doc["opponent"],
        outcome=GameOutcome(PlayerId(doc["outcome"]["winner"]), Win(doc["outcome"]["condition"])),
        decisions=decisions,
    )
