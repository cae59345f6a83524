"""Pruned depth-limited minimax over the learned models.

Every decision builds a tree: at depth d the top ``friendly[d]`` ranked own
actions are crossed with the top ``enemy[d]`` ranked opponent actions
(opponent candidates are enumerated against an estimated currency and
ranked through a perspective flip), each pair runs through the transition
model, and depth-D leaves are valued by the Q-function's best action.
Minimax backs the outcome vectors up to the root and marks the principal
variation.

Nodes whose predicted base health falls to ~zero are marked terminal and
not expanded (``guard_terminals=False`` restores the unguarded behaviour of
a purely learned pipeline for flaw studies).  There is no randomness
anywhere in the search.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .abstraction import AbstractState, flip_perspective, state_from_doc, state_to_doc
from .config import GameConfig, Lane
from .game import PlayerAction, action_cost, affordable_actions
from .models import (
    OUTCOME_DIM,
    QFunction,
    TransitionModel,
    agent_value,
    flip_outcome,
    outcome_one_hot,
    predict_transition_batch,
    rank_actions,
)

TREE_FORMAT = "tow-tree"
TREE_VERSION = 1

# normalized base health at or below which a predicted state counts as ended
TERMINAL_HEALTH = 0.01

DEFAULT_DEPTH = 2
DEFAULT_FRIENDLY = (20, 5)
DEFAULT_ENEMY = (10, 3)


class TreeFormatError(ValueError):
    pass


@dataclass(frozen=True)
class SearchParams:
    depth: int = DEFAULT_DEPTH
    friendly: tuple[int, ...] = DEFAULT_FRIENDLY
    enemy: tuple[int, ...] = DEFAULT_ENEMY

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if len(self.friendly) != self.depth or len(self.enemy) != self.depth:
            raise ValueError("branch counts must list one entry per depth")
        if any(n < 1 for n in self.friendly + self.enemy):
            raise ValueError("branch counts must be >= 1")


@dataclass
class TreeEdge:
    friendly_action: PlayerAction
    enemy_action: PlayerAction
    friendly_rank: int
    enemy_rank: int
    child: "TreeNode"
    pv: bool = False

    @property
    def value(self) -> np.ndarray | None:
        return self.child.value


@dataclass
class TreeNode:
    node_id: int
    depth: int
    state: AbstractState
    enemy_currency: int
    terminal: bool = False
    value: np.ndarray | None = None
    edges: list[TreeEdge] = field(default_factory=list)
    pv: bool = False

    @property
    def is_leaf(self) -> bool:
        return not self.edges


@dataclass
class SearchTree:
    root: TreeNode
    params: SearchParams
    guard_terminals: bool
    nodes: list[TreeNode]

    def node(self, node_id: int) -> TreeNode:
        return self.nodes[node_id]


def _terminal_value(state: AbstractState) -> np.ndarray | None:
    """One-hot outcome for a predicted state with a dead base, else None.

    The decided base is the lowest-health one at or below the threshold;
    exact ties mirror the engine priority (agent's kill first, top before
    bottom; healths are ordered friendly top/bottom, enemy top/bottom)."""
    h = state.base_health
    outcomes = {2: 0, 3: 1, 0: 3, 1: 4}
    dead = [idx for idx in (2, 3, 0, 1) if h[idx] <= TERMINAL_HEALTH]
    if not dead:
        return None
    lowest = min(dead, key=lambda idx: h[idx])  # ties keep priority order
    return outcome_one_hot(outcomes[lowest])


def build_tree(
    root_state: AbstractState,
    q: QFunction,
    t: TransitionModel,
    params: SearchParams,
    config: GameConfig,
    enemy_currency: int,
    guard_terminals: bool = True,
    legal_source=None,
) -> SearchTree:
    """Construct and back up the full decision tree for one decision point.

    `enemy_currency` is the estimate used to enumerate opponent candidates
    at the root; deeper levels track it by purchase accounting.
    `legal_source(state) -> [PlayerAction]` may override candidate
    enumeration (defaults to budget enumeration from the state)."""
    if _terminal_value(root_state) is not None:
        raise ValueError("cannot search from a terminal state")
    if legal_source is None:
        legal_source = lambda s: affordable_actions(s.own_currency, int(s.pylons[0]), config)  # noqa: E731

    nodes: list[TreeNode] = []

    def new_node(depth: int, state: AbstractState, enemy_cur: int) -> TreeNode:
        node = TreeNode(node_id=len(nodes), depth=depth, state=state, enemy_currency=enemy_cur)
        nodes.append(node)
        return node

    root = new_node(0, root_state, enemy_currency)
    frontier = [root]
    for depth in range(params.depth):
        next_frontier: list[TreeNode] = []
        for node in frontier:
            if node.terminal:
                continue
            friendly = rank_actions(q, node.state, legal_source(node.state), params.friendly[depth])
            enemy_view = flip_perspective(node.state, node.enemy_currency)
            enemy = rank_actions(q, enemy_view, legal_source(enemy_view), params.enemy[depth])
            pairs = [(fa, ea) for fa, _ in friendly for ea, _ in enemy]
            predicted = predict_transition_batch(t, node.state, pairs)
            pair_idx = 0
            for f_rank, (fa, _) in enumerate(friendly):
                for e_rank, (ea, _) in enumerate(enemy):
                    child_state, _reward = predicted[pair_idx]
                    pair_idx += 1
                    child_enemy_cur = max(
                        node.enemy_currency
                        - action_cost(ea, config)
                        + config.stipend(int(child_state.pylons[1])),
                        0,
                    )
                    child = new_node(depth + 1, child_state, child_enemy_cur)
                    if guard_terminals:
                        terminal_vec = _terminal_value(child_state)
                        if terminal_vec is not None:
                            child.terminal = True
                            child.value = terminal_vec
                    node.edges.append(TreeEdge(fa, ea, f_rank, e_rank, child))
                    if not child.terminal:
                        next_frontier.append(child)
        frontier = next_frontier

    # value the depth-D leaves with the evaluator
    for node in frontier:
        ranked = rank_actions(q, node.state, legal_source(node.state), 1)
        node.value = ranked[0][1]

    tree = SearchTree(root=root, params=params, guard_terminals=guard_terminals, nodes=nodes)
    minimax_backup(tree)
    return tree


def _reduce_node(node: TreeNode) -> list[tuple[PlayerAction, np.ndarray, list[TreeEdge]]]:
    """Per friendly action: the minimizing value over enemy replies.

    Returns (action, value, edges-of-that-action) in friendly-rank order."""
    groups: dict[int, list[TreeEdge]] = {}
    for edge in node.edges:
        groups.setdefault(edge.friendly_rank, []).append(edge)
    reduced = []
    for f_rank in sorted(groups):
        edges = sorted(groups[f_rank], key=lambda e: e.enemy_rank)
        worst = None
        for edge in edges:
            if edge.child.value is None:
                raise ValueError(f"unvalued leaf node {edge.child.node_id}")
            v = agent_value(edge.child.value)
            if worst is None or v < worst[0]:
                worst = (v, edge)
        reduced.append((edges[0].friendly_action, worst[1].child.value, edges))
    return reduced


def minimax_backup(tree: SearchTree) -> SearchTree:
    """Max over friendly actions of min over enemy replies, from the leaves up.

    Outcome vectors propagate from the minimizing child of the maximizing
    action; ties prefer the lower rank index.  Marks the principal variation."""

    def back(node: TreeNode) -> None:
        if node.is_leaf:
            if node.value is None:
                raise ValueError(f"unvalued leaf node {node.node_id}")
            return
        for edge in node.edges:
            back(edge.child)
        best = None
        for _action, vec, _edges in _reduce_node(node):
            v = agent_value(vec)
            if best is None or v > best[0]:
                best = (v, vec)
        node.value = best[1]

    back(tree.root)

    for node in tree.nodes:
        node.pv = False
    for edge_list in ([e for n in tree.nodes for e in n.edges],):
        for edge in edge_list:
            edge.pv = False
    node = tree.root
    node.pv = True
    while not node.is_leaf and not node.terminal:
        reduced = _reduce_node(node)
        best = max(enumerate(reduced), key=lambda item: (agent_value(item[1][1]), -item[0]))[1]
        edges = best[2]
        worst = min(enumerate(edges), key=lambda item: (agent_value(item[1].child.value), item[0]))[1]
        worst.pv = True
        node = worst.child
        node.pv = True
    return tree


def root_action_table(tree: SearchTree) -> list[tuple[PlayerAction, np.ndarray]]:
    """Root actions with their minimax values, sorted descending for the chart."""
    reduced = _reduce_node(tree.root)
    order = sorted(
        range(len(reduced)),
        key=lambda i: (-agent_value(reduced[i][1]), i),
    )
    return [(reduced[i][0], reduced[i][1]) for i in order]


def best_action(tree: SearchTree) -> tuple[PlayerAction, np.ndarray]:
    action, value = root_action_table(tree)[0]
    return action, value


# ---------------------------------------------------------------- serialization

def _action_to_doc(action: PlayerAction) -> dict:
    top = list(action.buildings_added) if action.lane == Lane.TOP else [0, 0, 0]
    bottom = list(action.buildings_added) if action.lane == Lane.BOTTOM else [0, 0, 0]
    return {"top": top, "bottom": bottom, "pylons": action.pylons_added}


def _action_from_doc(doc: dict) -> PlayerAction:
    if any(doc["bottom"]):
        return PlayerAction(Lane.BOTTOM, tuple(doc["bottom"]), doc["pylons"])
    return PlayerAction(Lane.TOP, tuple(doc["top"]), doc["pylons"])


def serialize_tree(tree: SearchTree) -> dict:
    nodes = []
    edges = []
    for node in tree.nodes:
        nodes.append(
            {
                "id": node.node_id,
                "depth": node.depth,
                "terminal": node.terminal,
                "pv": node.pv,
                "value": [float(v) for v in node.value] if node.value is not None else None,
                "enemy_currency": node.enemy_currency,
                "state": state_to_doc(node.state),
            }
        )
        for edge in node.edges:
            edges.append(
                {
                    "parent": node.node_id,
                    "child": edge.child.node_id,
                    "friendly_rank": edge.friendly_rank,
                    "enemy_rank": edge.enemy_rank,
                    "pv": edge.pv,
                    "value": [float(v) for v in edge.child.value],
                    "friendly": _action_to_doc(edge.friendly_action),
                    "enemy": _action_to_doc(edge.enemy_action),
                }
            )
    return {
        "format": TREE_FORMAT,
        "version": TREE_VERSION,
        "params": {
            "depth": tree.params.depth,
            "friendly": list(tree.params.friendly),
            "enemy": list(tree.params.enemy),
        },
        "guard_terminals": tree.guard_terminals,
        "root": tree.root.node_id,
        "nodes": nodes,
        "edges": edges,
    }


def deserialize_tree(doc: dict) -> SearchTree:
    if doc.get("format") != TREE_FORMAT:
        raise TreeFormatError("not an explanation-tree document")
    if doc.get("version") != TREE_VERSION:
        raise TreeFormatError(f"unsupported tree version {doc.get('version')}")
    params = SearchParams(
        depth=doc["params"]["depth"],
        friendly=tuple(doc["params"]["friendly"]),
        enemy=tuple(doc["params"]["enemy"]),
    )
    nodes: list[TreeNode] = []
    for ndoc in sorted(doc["nodes"], key=lambda d: d["id"]):
        if ndoc["id"] != len(nodes):
            raise TreeFormatError("node ids must be dense and ordered")
        nodes.append(
            TreeNode(
                node_id=ndoc["id"],
                depth=ndoc["depth"],
                state=state_from_doc(ndoc["state"]),
                enemy_currency=ndoc["enemy_currency"],
                terminal=ndoc["terminal"],
                value=np.asarray(ndoc["value"], dtype=np.float64) if ndoc["value"] is not None else None,
                pv=ndoc["pv"],
            )
        )
    for edoc in doc["edges"]:
        try:
            parent, child = nodes[edoc["parent"]], nodes[edoc["child"]]
        except IndexError as exc:
            raise TreeFormatError("edge references unknown node") from exc
        parent.edges.append(
            TreeEdge(
                friendly_action=_action_from_doc(edoc["friendly"]),
                enemy_action=_action_from_doc(edoc["enemy"]),
                friendly_rank=edoc["friendly_rank"],
                enemy_rank=edoc["enemy_rank"],
                child=child,
                pv=edoc["pv"],
            )
        )
    return SearchTree(
        root=nodes[doc["root"]],
        params=params,
        guard_terminals=doc["guard_terminals"],
        nodes=nodes,
    )
