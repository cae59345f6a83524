"""The quantized, agent-facing view of the game and perspective utilities.

An AbstractState is always relative to one player: index 0 in every
player-indexed array means "friendly" (the perspective player), whose base
sits at grid cell 0 of each lane.  Unit positions are bucketed into 4 cells
per lane (8 total) and per-unit health disappears.  The opponent's unspent
currency is not part of the abstraction; it can only be estimated from the
observed purchase history.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .config import GameConfig, Lane, PlayerId
from .game import MicroState, PlayerAction, action_cost

logger = logging.getLogger(__name__)

GRID_CELLS_PER_LANE = 4
GRID_CELLS = 2 * GRID_CELLS_PER_LANE

# cell c of a lane maps to cell 3-c when viewed from the other side
_CELL_FLIP = np.array([3, 2, 1, 0, 7, 6, 5, 4])


@dataclass
class AbstractState:
    """Quantized state from one player's perspective (index 0 = friendly)."""

    perspective: PlayerId
    wave: int
    base_health: np.ndarray   # (4,) normalized: friendly top, friendly bottom, enemy top, enemy bottom
    own_currency: int
    buildings: np.ndarray     # (2 players, 2 lanes, 3 types)
    pylons: np.ndarray        # (2,)
    unit_grid: np.ndarray     # (2 owners, 3 types, 8 cells); cells 0-3 top lane, 4-7 bottom

    def __eq__(self, other) -> bool:
        if not isinstance(other, AbstractState):
            return NotImplemented
        return (
            self.perspective == other.perspective
            and self.wave == other.wave
            and self.own_currency == other.own_currency
            and np.array_equal(self.base_health, other.base_health)
            and np.array_equal(self.buildings, other.buildings)
            and np.array_equal(self.pylons, other.pylons)
            and np.array_equal(self.unit_grid, other.unit_grid)
        )

    def copy(self) -> "AbstractState":
        return AbstractState(
            perspective=self.perspective,
            wave=self.wave,
            base_health=self.base_health.copy(),
            own_currency=self.own_currency,
            buildings=self.buildings.copy(),
            pylons=self.pylons.copy(),
            unit_grid=self.unit_grid.copy(),
        )


def abstract(state: MicroState, perspective: PlayerId) -> AbstractState:
    """Quantize a simulator state into the perspective player's abstraction."""
    me = int(perspective)
    them = 1 - me
    cfg = state.config
    grid = np.zeros((2, 3, GRID_CELLS), dtype=np.int64)
    for lane in (0, 1):
        units = state.units[lane]
        if len(units) == 0:
            continue
        pos = units.pos / cfg.lane_length
        if perspective == PlayerId.P2:
            pos = 1.0 - pos
        cells = np.minimum((pos * GRID_CELLS_PER_LANE).astype(np.int64), GRID_CELLS_PER_LANE - 1)
        cells += lane * GRID_CELLS_PER_LANE
        owners = np.where(units.owner == me, 0, 1)
        np.add.at(grid, (owners, units.kind.astype(np.int64), cells), 1)
    return AbstractState(
        perspective=perspective,
        wave=state.wave,
        base_health=np.concatenate([
            state.base_health[me] / cfg.base_health_max,
            state.base_health[them] / cfg.base_health_max,
        ]),
        own_currency=int(state.currency[me]),
        buildings=state.buildings[[me, them]].copy(),
        pylons=state.pylons[[me, them]].copy(),
        unit_grid=grid,
    )


def flip_perspective(state: AbstractState, own_currency: int) -> AbstractState:
    """Re-express the state from the opponent's point of view.

    The opponent's true currency is unknown to the flipping side, so the
    caller supplies it (usually an estimate)."""
    return AbstractState(
        perspective=state.perspective.opponent,
        wave=state.wave,
        base_health=state.base_health[[2, 3, 0, 1]].copy(),
        own_currency=own_currency,
        buildings=state.buildings[[1, 0]].copy(),
        pylons=state.pylons[[1, 0]].copy(),
        unit_grid=state.unit_grid[[1, 0]][:, :, _CELL_FLIP].copy(),
    )


def estimate_enemy_currency(
    history: list[tuple[AbstractState, PlayerAction]],
    config: GameConfig,
) -> int:
    """Infer the opponent's unspent currency from observed purchases.

    `history` holds, in order, the abstraction at each past decision point
    together with the enemy action observed that wave.  The estimate is
    start currency plus every stipend credited since, minus every observed
    purchase; it equals the true value when the history is complete."""
    estimate = config.start_currency
    for state, enemy_action in history:
        pylons_after = int(state.pylons[1]) + enemy_action.pylons_added
        estimate += config.stipend(pylons_after) - action_cost(enemy_action, config)
    if estimate < 0:
        logger.warning("inconsistent enemy purchase history: estimate %d clamped to 0", estimate)
        return 0
    return estimate


def state_to_doc(state: AbstractState) -> dict:
    return {
        "perspective": int(state.perspective),
        "wave": state.wave,
        "base_health": [float(h) for h in state.base_health],
        "own_currency": state.own_currency,
        "buildings": state.buildings.tolist(),
        "pylons": state.pylons.tolist(),
        "unit_grid": state.unit_grid.tolist(),
    }


def state_from_doc(doc: dict) -> AbstractState:
    return AbstractState(
        perspective=PlayerId(doc["perspective"]),
        wave=doc["wave"],
        base_health=np.asarray(doc["base_health"], dtype=np.float64),
        own_currency=doc["own_currency"],
        buildings=np.asarray(doc["buildings"], dtype=np.int64),
        pylons=np.asarray(doc["pylons"], dtype=np.int64),
        unit_grid=np.asarray(doc["unit_grid"], dtype=np.int64),
    )
