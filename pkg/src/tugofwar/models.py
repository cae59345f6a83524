"""Learned components: feature encoders, action-ranking Q-function, transition model.

All vectors are perspective-relative.  The outcome vector has six
components — (friendly destroys enemy top / bottom, friendly timeout win,
then the mirror three for the opponent) — and an action's scalar quality is
the sum of the three friendly components.  The enemy side of the search
re-uses the same Q-function through a perspective flip.

Feature layouts are frozen (docs/formats.md publishes the index table):

    state (68): wave/40 | 4 base healths | own currency/2000 |
                12 building counts/20 (friendly then enemy, top then bottom,
                marine/baneling/immortal) | 2 pylon counts/3 |
                48 grid counts/30 (owner, type, cell)
    action (6): lane one-hot (top, bottom) | 3 building counts/20 | pylons/3
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .abstraction import AbstractState
from .config import MAX_PYLONS, MAX_WAVES, Lane, PlayerId
from .game import GameOutcome, PlayerAction, Win

STATE_DIM = 68
ACTION_DIM = 6
OUTCOME_DIM = 6

BUILDING_SCALE = 20.0
GRID_SCALE = 30.0
CURRENCY_SCALE = 2000.0
PYLON_SCALE = float(MAX_PYLONS)

DEFAULT_HIDDEN = 128


class Outcome(IntEnum):
    """Perspective-relative win conditions; first three belong to the agent."""

    MY_DESTROYS_TOP = 0
    MY_DESTROYS_BOTTOM = 1
    MY_TIMEOUT = 2
    OPP_DESTROYS_TOP = 3
    OPP_DESTROYS_BOTTOM = 4
    OPP_TIMEOUT = 5


_FLIP = np.array([3, 4, 5, 0, 1, 2])


def agent_value(outcome_vector: np.ndarray) -> float:
    """Scalar action quality: total probability of the agent winning."""
    return float(outcome_vector[..., :3].sum(axis=-1))


def flip_outcome(outcome_vector: np.ndarray) -> np.ndarray:
    return outcome_vector[..., _FLIP]


def clamp_outcome(outcome_vector: np.ndarray) -> np.ndarray:
    return np.clip(outcome_vector, 0.0, 1.0)


def renormalize_outcome(outcome_vector: np.ndarray) -> np.ndarray:
    """Display-only simplex normalization."""
    total = outcome_vector.sum()
    if total <= 0:
        return np.full(OUTCOME_DIM, 1.0 / OUTCOME_DIM)
    return outcome_vector / total


def outcome_one_hot(index: int) -> np.ndarray:
    vec = np.zeros(OUTCOME_DIM)
    vec[index] = 1.0
    return vec


def outcome_index_for(outcome: GameOutcome, perspective: PlayerId) -> Outcome:
    """Map an absolute game outcome onto the perspective-relative index."""
    mine = outcome.winner == perspective
    base = 0 if mine else 3
    kind = {
        Win.P1_DESTROYS_TOP: 0, Win.P2_DESTROYS_TOP: 0,
        Win.P1_DESTROYS_BOTTOM: 1, Win.P2_DESTROYS_BOTTOM: 1,
        Win.P1_TIMEOUT: 2, Win.P2_TIMEOUT: 2,
    }[outcome.condition]
    return Outcome(base + kind)


# ---------------------------------------------------------------- encoders

def encode_state(state: AbstractState) -> np.ndarray:
    parts = [
        np.array([state.wave / MAX_WAVES]),
        state.base_health.astype(np.float64),
        np.array([state.own_currency / CURRENCY_SCALE]),
        state.buildings.reshape(-1) / BUILDING_SCALE,
        state.pylons / PYLON_SCALE,
        state.unit_grid.reshape(-1) / GRID_SCALE,
    ]
    features = np.concatenate(parts)
    assert features.shape == (STATE_DIM,)
    return features


def encode_action(action: PlayerAction) -> np.ndarray:
    lane_one_hot = [1.0, 0.0] if action.lane == Lane.TOP else [0.0, 1.0]
    return np.array(
        [
            *lane_one_hot,
            action.buildings_added[0] / BUILDING_SCALE,
            action.buildings_added[1] / BUILDING_SCALE,
            action.buildings_added[2] / BUILDING_SCALE,
            action.pylons_added / PYLON_SCALE,
        ]
    )


def decode_state(features: np.ndarray, wave: int, perspective: PlayerId) -> AbstractState:
    """Invert encode_state: clamp healths, round counts, floor at zero.

    The wave is supplied by the caller (in search it advances
    deterministically rather than being trusted to the model)."""
    f = np.asarray(features, dtype=np.float64)
    counts = lambda x, scale: np.maximum(np.rint(x * scale), 0).astype(np.int64)  # noqa: E731
    return AbstractState(
        perspective=perspective,
        wave=wave,
        base_health=np.clip(f[1:5], 0.0, 1.0),
        own_currency=int(max(round(f[5] * CURRENCY_SCALE), 0)),
        buildings=counts(f[6:18], BUILDING_SCALE).reshape(2, 2, 3),
        pylons=np.minimum(counts(f[18:20], PYLON_SCALE), MAX_PYLONS),
        unit_grid=counts(f[20:68], GRID_SCALE).reshape(2, 3, 8),
    )


def action_sort_key(action: PlayerAction) -> tuple:
    return action.sort_key()


# ---------------------------------------------------------------- Q-function

@dataclass
class QFunction:
    """MLP over state ⊕ action features returning the outcome vector."""

    params: "NetworkParameters"

    @classmethod
    def create(cls, seed: int, hidden: int = DEFAULT_HIDDEN) -> "QFunction":
        from .neural import MLPSpec, mlp_init

        spec = MLPSpec((STATE_DIM + ACTION_DIM, hidden, hidden, OUTCOME_DIM))
        return cls(mlp_init(spec, seed))

    def raw_batch(self, state_features: np.ndarray, action_features: np.ndarray) -> np.ndarray:
        from .neural import forward

        inputs = np.concatenate([state_features, action_features], axis=1)
        return forward(self.params, inputs)


def q_values_batch(q: QFunction, state: AbstractState, actions: list[PlayerAction]) -> np.ndarray:
    state_row = encode_state(state)
    states = np.tile(state_row, (len(actions), 1))
    acts = np.stack([encode_action(a) for a in actions])
    return clamp_outcome(q.raw_batch(states, acts))


def q_value(q: QFunction, state: AbstractState, action: PlayerAction) -> np.ndarray:
    return q_values_batch(q, state, [action])[0]


def rank_actions(
    q: QFunction, state: AbstractState, candidates: list[PlayerAction], k: int
) -> list[tuple[PlayerAction, np.ndarray]]:
    """Top-k candidates by agent value, descending.

    Ties break by the canonical action order (lane, marines, banelings,
    immortals, pylons ascending)."""
    if not candidates:
        raise ValueError("no candidate actions to rank")
    values = q_values_batch(q, state, candidates)
    scores = values[:, :3].sum(axis=1)
    order = sorted(range(len(candidates)), key=lambda i: (-scores[i], candidates[i].sort_key()))
    return [(candidates[i], values[i]) for i in order[: min(k, len(candidates))]]


def evaluate_state(
    q: QFunction, state: AbstractState, candidates: list[PlayerAction]
) -> np.ndarray:
    """State value = outcome vector of the best-ranked action."""
    return rank_actions(q, state, candidates, 1)[0][1]


# ---------------------------------------------------------------- transition model

@dataclass
class TransitionModel:
    """MLP over state ⊕ friendly action ⊕ enemy action predicting the next
    state features and the decomposed reward head."""

    params: "NetworkParameters"

    @classmethod
    def create(cls, seed: int, hidden: int = DEFAULT_HIDDEN) -> "TransitionModel":
        from .neural import MLPSpec, mlp_init

        spec = MLPSpec(
            (STATE_DIM + 2 * ACTION_DIM, hidden, hidden, STATE_DIM + OUTCOME_DIM)
        )
        return cls(mlp_init(spec, seed))

    def raw_batch(self, inputs: np.ndarray) -> np.ndarray:
        from .neural import forward

        return forward(self.params, inputs)


def transition_input(state: AbstractState, a_f: PlayerAction, a_e: PlayerAction) -> np.ndarray:
    return np.concatenate([encode_state(state), encode_action(a_f), encode_action(a_e)])


def predict_transition_batch(
    t: TransitionModel, state: AbstractState, pairs: list[tuple[PlayerAction, PlayerAction]]
) -> list[tuple[AbstractState, np.ndarray]]:
    state_row = encode_state(state)
    inputs = np.empty((len(pairs), STATE_DIM + 2 * ACTION_DIM))
    for i, (a_f, a_e) in enumerate(pairs):
        inputs[i] = np.concatenate([state_row, encode_action(a_f), encode_action(a_e)])
    outputs = t.raw_batch(inputs)
    results = []
    for i in range(len(pairs)):
        nxt = decode_state(outputs[i, :STATE_DIM], wave=state.wave + 1, perspective=state.perspective)
        reward = clamp_outcome(outputs[i, STATE_DIM:])
        results.append((nxt, reward))
    return results


def predict_transition(
    t: TransitionModel, state: AbstractState, a_f: PlayerAction, a_e: PlayerAction
) -> tuple[AbstractState, np.ndarray]:
    return predict_transition_batch(t, state, [(a_f, a_e)])[0]
