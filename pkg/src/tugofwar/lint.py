"""Scripted flaw detectors over explanation trees, and the library scanner.

Five rule-based detectors check predicted states against hard game laws
(health can never rise, buildings never vanish, units need production
buildings, untouched lanes evolve identically, dead states stay dead); a
sixth heuristic detector flags near-identical leaves whose evaluations
disagree.  Rule-based detectors are sound on ground-truth transitions:
trees whose edges come from the simulator produce zero reports.

The scanner aggregates reports across a replay library and reproduces the
health-rise-before-loss tally (including the severe >10% count) used to
judge how widespread that flaw class is.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models import agent_value, encode_state
from .replay import Replay, interest_scores
from .search import SearchTree, TERMINAL_HEALTH, TreeNode, deserialize_tree

LINT_FORMAT = "tow-lint"
LINT_VERSION = 1

_BASE_LABELS = ("friendly top", "friendly bottom", "enemy top", "enemy bottom")
_SEVERITY_BINS = (0.0, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, np.inf)


@dataclass(frozen=True)
class LintThresholds:
    health_tolerance: float = 0.005   # absorbs feature rounding
    severe_rise: float = 0.10         # the "more than 10%" bar
    terminal_threshold: float = TERMINAL_HEALTH
    tau_state: float = 0.05           # mean |Δfeature| for "similar" leaves
    tau_outcome: float = 0.5          # outcome L1 for "different" evaluations


@dataclass(frozen=True)
class FlawReport:
    detector: str
    node_ids: tuple[int, ...]
    severity: float
    message: str
    game_id: str = ""
    decision: int = -1

    def with_context(self, game_id: str, decision: int) -> "FlawReport":
        return FlawReport(self.detector, self.node_ids, self.severity, self.message, game_id, decision)

    def to_doc(self) -> dict:
        return {
            "detector": self.detector,
            "node_ids": list(self.node_ids),
            "severity": self.severity,
            "message": self.message,
            "game_id": self.game_id,
            "decision": self.decision,
        }


def _iter_edges(tree: SearchTree):
    for node in tree.nodes:
        for edge in node.edges:
            yield node, edge


def detect_health_increase(tree: SearchTree, thresholds: LintThresholds = LintThresholds()) -> list[FlawReport]:
    """Base health must never rise across a predicted transition."""
    reports = []
    for parent, edge in _iter_edges(tree):
        rises = edge.child.state.base_health - parent.state.base_health
        worst = int(np.argmax(rises))
        if rises[worst] > thresholds.health_tolerance:
            severity = float(rises[worst])
            severe = " (severe)" if severity > thresholds.severe_rise else ""
            reports.append(
                FlawReport(
                    detector="health_increase",
                    node_ids=(parent.node_id, edge.child.node_id),
                    severity=severity,
                    message=(
                        f"{_BASE_LABELS[worst]} base health rises by {severity:.3f} "
                        f"from node {parent.node_id} to {edge.child.node_id}{severe}"
                    ),
                )
            )
    return reports


def _touches_lane(action, lane: int) -> bool:
    return any(action.buildings_added) and int(action.lane) == lane


def _lane_slice(state, lane: int):
    cells = slice(lane * 4, lane * 4 + 4)
    health_idx = [lane, lane + 2]   # friendly then enemy base of that lane
    return (
        state.buildings[:, lane, :],
        state.unit_grid[:, :, cells],
        state.base_health[health_idx],
    )


def detect_lane_independence(tree: SearchTree, thresholds: LintThresholds = LintThresholds()) -> list[FlawReport]:
    """Siblings whose action pair leaves a lane untouched must agree on it.

    Children whose game ended mid-wave (a dead base) are excluded: an early
    finish truncates the untouched lane's ticks, so divergence there is
    legitimate."""
    reports = []
    lane_names = ("top", "bottom")
    for node in tree.nodes:
        if not node.edges:
            continue
        for lane in (0, 1):
            untouched = 1 - lane
            group = [
                e for e in node.edges
                if not _touches_lane(e.friendly_action, untouched)
                and not _touches_lane(e.enemy_action, untouched)
                and not np.any(e.child.state.base_health <= thresholds.terminal_threshold)
            ]
            for i in range(len(group)):
                for j in range(i + 1, len(group)):
                    a, b = group[i].child.state, group[j].child.state
                    ba, ga, ha = _lane_slice(a, untouched)
                    bb, gb, hb = _lane_slice(b, untouched)
                    if (
                        np.array_equal(ba, bb)
                        and np.array_equal(ga, gb)
                        and np.all(np.abs(ha - hb) <= thresholds.health_tolerance)
                    ):
                        continue
                    diff = float(
                        np.abs(ba - bb).sum() + np.abs(ga - gb).sum() + np.abs(ha - hb).sum()
                    )
                    reports.append(
                        FlawReport(
                            detector="lane_independence",
                            node_ids=(node.node_id, group[i].child.node_id, group[j].child.node_id),
                            severity=diff,
                            message=(
                                f"nodes {group[i].child.node_id} and {group[j].child.node_id} disagree on the "
                                f"untouched {lane_names[untouched]} lane under node {node.node_id}"
                            ),
                        )
                    )
    return reports


def detect_infeasible_units(tree: SearchTree, thresholds: LintThresholds = LintThresholds()) -> list[FlawReport]:
    """Units of a type require at least one production building in that lane."""
    reports = []
    sides = ("friendly", "enemy")
    kinds = ("marine", "baneling", "immortal")
    lanes = ("top", "bottom")
    for node in tree.nodes:
        if node.depth == 0:
            continue  # the root is the true state, not a prediction
        state = node.state
        for player in (0, 1):
            for kind in range(3):
                for lane in (0, 1):
                    cells = slice(lane * 4, lane * 4 + 4)
                    units = int(state.unit_grid[player, kind, cells].sum())
                    if units > 0 and state.buildings[player, lane, kind] == 0:
                        reports.append(
                            FlawReport(
                                detector="infeasible_units",
                                node_ids=(node.node_id,),
                                severity=float(units),
                                message=(
                                    f"node {node.node_id}: {units} {sides[player]} {kinds[kind]} unit(s) "
                                    f"in the {lanes[lane]} lane with no {kinds[kind]} building there"
                                ),
                            )
                        )
    return reports


def _dead_base_winner(state, threshold: float) -> int | None:
    """0 if the agent's kill ended the state, 1 if the opponent's.

    The decided base is the lowest-health one at or below the threshold
    (several may sit under it); exact ties break by the engine's priority,
    agent's kill first."""
    h = state.base_health
    dead = [idx for idx in (2, 3, 0, 1) if h[idx] <= threshold]
    if not dead:
        return None
    lowest = min(dead, key=lambda idx: h[idx])  # ties keep priority order
    return 0 if lowest >= 2 else 1


def detect_missing_terminal(tree: SearchTree, thresholds: LintThresholds = LintThresholds()) -> list[FlawReport]:
    """A state with a dead base ended the game: it may not be expanded, and
    its outcome vector must favour the winning side."""
    reports = []
    for node in tree.nodes:
        h = node.state.base_health
        if not np.any(h <= thresholds.terminal_threshold):
            continue
        dead = int(np.argmin(h))
        if node.edges:
            reports.append(
                FlawReport(
                    detector="missing_terminal",
                    node_ids=(node.node_id,),
                    severity=1.0,
                    message=(
                        f"node {node.node_id} has children although its {_BASE_LABELS[dead]} "
                        "base is destroyed; the game would already be over"
                    ),
                )
            )
        if node.value is not None:
            winner = _dead_base_winner(node.state, thresholds.terminal_threshold)
            my_sum = float(node.value[:3].sum())
            opp_sum = float(node.value[3:].sum())
            winner_sum, loser_sum = (my_sum, opp_sum) if winner == 0 else (opp_sum, my_sum)
            if winner_sum <= loser_sum:
                reports.append(
                    FlawReport(
                        detector="missing_terminal",
                        node_ids=(node.node_id,),
                        severity=float(loser_sum - winner_sum),
                        message=(
                            f"node {node.node_id} is decided ({_BASE_LABELS[dead]} base destroyed) "
                            "but its outcome vector does not favour the winning side"
                        ),
                    )
                )
    return reports


def detect_building_decrease(tree: SearchTree, thresholds: LintThresholds = LintThresholds()) -> list[FlawReport]:
    """Buildings and pylons are never removed."""
    reports = []
    for parent, edge in _iter_edges(tree):
        b_drop = (parent.state.buildings - edge.child.state.buildings).clip(min=0).sum()
        p_drop = (parent.state.pylons - edge.child.state.pylons).clip(min=0).sum()
        total = int(b_drop + p_drop)
        if total > 0:
            reports.append(
                FlawReport(
                    detector="building_decrease",
                    node_ids=(parent.node_id, edge.child.node_id),
                    severity=float(total),
                    message=(
                        f"building/pylon count drops by {total} from node "
                        f"{parent.node_id} to {edge.child.node_id}"
                    ),
                )
            )
    return reports


def detect_eval_inconsistency(tree: SearchTree, thresholds: LintThresholds = LintThresholds()) -> list[FlawReport]:
    """Heuristic (advisory): near-identical sibling-branch leaves whose
    evaluations disagree on the expected win condition."""
    parent_of: dict[int, int] = {}
    for node, edge in _iter_edges(tree):
        parent_of[edge.child.node_id] = node.node_id
    groups: dict[int, list[TreeNode]] = {}
    for node in tree.nodes:
        if node.edges or node.value is None:
            continue
        parent = parent_of.get(node.node_id)
        if parent is None:
            continue
        grandparent = parent_of.get(parent)
        if grandparent is None:
            continue
        groups.setdefault(grandparent, []).append(node)
    reports = []
    for grandparent_id, leaves in groups.items():
        if len(leaves) < 2:
            continue
        feats = np.stack([encode_state(n.state) for n in leaves])
        values = np.stack([n.value for n in leaves])
        argmax = values.argmax(axis=1)
        for i in range(len(leaves)):
            for j in range(i + 1, len(leaves)):
                state_dist = float(np.abs(feats[i] - feats[j]).mean())
                if state_dist > thresholds.tau_state:
                    continue
                outcome_dist = float(np.abs(values[i] - values[j]).sum())
                if argmax[i] == argmax[j] and outcome_dist <= thresholds.tau_outcome:
                    continue
                reports.append(
                    FlawReport(
                        detector="eval_inconsistency",
                        node_ids=(grandparent_id, leaves[i].node_id, leaves[j].node_id),
                        severity=outcome_dist,
                        message=(
                            f"leaves {leaves[i].node_id} and {leaves[j].node_id} are nearly identical "
                            f"(mean feature distance {state_dist:.4f}) yet their evaluations disagree"
                        ),
                    )
                )
    return reports


DETECTORS = {
    "health_increase": detect_health_increase,
    "lane_independence": detect_lane_independence,
    "infeasible_units": detect_infeasible_units,
    "missing_terminal": detect_missing_terminal,
    "building_decrease": detect_building_decrease,
    "eval_inconsistency": detect_eval_inconsistency,
}

# sound on ground-truth transitions; eval_inconsistency is heuristic-only
RULE_BASED_DETECTORS = (
    "health_increase",
    "lane_independence",
    "infeasible_units",
    "missing_terminal",
    "building_decrease",
)


def run_detectors(
    tree: SearchTree,
    detectors: tuple[str, ...] = RULE_BASED_DETECTORS,
    thresholds: LintThresholds = LintThresholds(),
) -> list[FlawReport]:
    reports = []
    for name in detectors:
        if name not in DETECTORS:
            raise KeyError(f"unknown detector {name!r}")
        reports.extend(DETECTORS[name](tree, thresholds))
    return reports


def _severity_histogram(severities: list[float]) -> dict:
    counts, _ = np.histogram(severities, bins=_SEVERITY_BINS)
    return {
        "bin_edges": [float(e) for e in _SEVERITY_BINS[:-1]] + ["inf"],
        "counts": counts.tolist(),
    }


def scan_library(
    replays: list[Replay],
    detectors: tuple[str, ...] = RULE_BASED_DETECTORS,
    thresholds: LintThresholds = LintThresholds(),
    tree_loader=None,
) -> dict:
    """Run detectors over every decision tree of every replay.

    ``tree_loader(replay, decision) -> tree doc`` may supply trees stored
    outside the replay object.  The report is machine-readable and includes
    the per-losing-game health-rise-at-final-decision statistic."""
    if not replays:
        raise ValueError("need at least one replay")
    per_game: dict[str, dict] = {}
    totals = {name: 0 for name in detectors}
    severities: dict[str, list[float]] = {name: [] for name in detectors}
    rise_stats: dict[str, dict] = {}

    for replay in replays:
        game_reports: list[FlawReport] = []
        for decision in replay.decisions:
            doc = decision.tree_doc
            if doc is None and tree_loader is not None:
                doc = tree_loader(replay, decision)
            if doc is None:
                raise ValueError(
                    f"decision {decision.index} of {replay.game_id} has no tree document"
                )
            tree = deserialize_tree(doc)
            found = run_detectors(tree, detectors, thresholds)
            game_reports.extend(r.with_context(replay.game_id, decision.index) for r in found)
            is_final = decision.index == len(replay.decisions) - 1
            if is_final and not replay.agent_won:
                final_rises = [r for r in found if r.detector == "health_increase"]
                rise_stats[replay.game_id] = {
                    "rise": bool(final_rises),
                    "severe": sum(1 for r in final_rises if r.severity > thresholds.severe_rise),
                }
        counts = {name: 0 for name in detectors}
        for r in game_reports:
            counts[r.detector] += 1
            totals[r.detector] += 1
            severities[r.detector].append(r.severity)
        per_game[replay.game_id] = {
            "counts": counts,
            "agent_won": replay.agent_won,
            "reports": [r.to_doc() for r in game_reports],
        }

    return {
        "format": LINT_FORMAT,
        "version": LINT_VERSION,
        "detectors": list(detectors),
        "n_games": len(replays),
        "per_game": per_game,
        "totals": totals,
        "severity_histogram": {name: _severity_histogram(severities[name]) for name in detectors},
        "health_rise_before_loss": {
            "games": rise_stats,
            "n_losing": len(rise_stats),
            "n_with_rise": sum(1 for s in rise_stats.values() if s["rise"]),
            "n_severe": sum(s["severe"] for s in rise_stats.values()),
        },
    }
