import numpy as np
import pytest

from tugofwar.abstraction import (
    abstract,
    estimate_enemy_currency,
    flip_perspective,
    state_from_doc,
    state_to_doc,
)
from tugofwar.config import DEFAULT_CONFIG, Lane, PlayerId
from tugofwar.game import NULL_ACTION, PlayerAction, new_game, random_action, resolve_wave

from conftest import play_random_game


def test_initial_abstraction(config):
    s = new_game(config, 1)
    a = abstract(s, PlayerId.P1)
    assert a.wave == 1
    assert np.all(a.base_health == 1.0)
    assert a.own_currency == config.start_currency
    assert a.unit_grid.sum() == 0
    assert a.unit_grid.shape == (2, 3, 8)


def test_position_bucketing(config):
    s = new_game(config, 1)
    u = s.units[0]
    u.pos = np.array([0.10, 0.26, 0.99, 1.0])
    u.hp = np.full(4, 100.0)
    u.owner = np.array([0, 0, 1, 1], dtype=np.int8)
    u.kind = np.zeros(4, dtype=np.int8)
    a = abstract(s, PlayerId.P1)
    # 0.10 -> cell 0, 0.26 -> cell 1, 0.99 and 1.0 -> cell 3
    assert a.unit_grid[0, 0, 0] == 1 and a.unit_grid[0, 0, 1] == 1
    assert a.unit_grid[1, 0, 3] == 2
    # P2 sees the same units mirrored into its own near cells
    b = abstract(s, PlayerId.P2)
    assert b.unit_grid[0, 0, 0] == 2
    assert b.unit_grid[1, 0, 3] == 1 and b.unit_grid[1, 0, 2] == 1


def test_grid_partition_property(config):
    for seed in range(8):
        steps, _ = play_random_game(config, seed)
        for state, *_ in steps:
            a = abstract(state, PlayerId.P1)
            for lane in (0, 1):
                cells = slice(lane * 4, lane * 4 + 4)
                assert a.unit_grid[:, :, cells].sum() == len(state.units[lane])


def test_quantization_idempotent(config):
    """Re-abstracting units placed at their cell centers changes nothing."""
    steps, _ = play_random_game(config, 3)
    state = steps[-1][0]
    a = abstract(state, PlayerId.P1)
    rebuilt = state.copy()
    for lane in (0, 1):
        u = rebuilt.units[lane]
        cells = np.minimum((u.pos / config.lane_length * 4).astype(int), 3)
        u.pos = (cells + 0.5) * config.lane_length / 4
    again = abstract(rebuilt, PlayerId.P1)
    assert np.array_equal(a.unit_grid, again.unit_grid)


def test_flip_round_trip(config):
    steps, _ = play_random_game(config, 5)
    state = steps[-1][0]
    a = abstract(state, PlayerId.P1)
    b = abstract(state, PlayerId.P2)
    flipped = flip_perspective(a, own_currency=int(state.currency[1]))
    assert flipped == b
    assert flip_perspective(flipped, own_currency=a.own_currency) == a


def test_doc_round_trip(config):
    steps, _ = play_random_game(config, 9)
    a = abstract(steps[-1][0], PlayerId.P1)
    assert state_from_doc(state_to_doc(a)) == a


# ------------------------------------------------------- enemy currency

def test_estimate_empty_history(config):
    assert estimate_enemy_currency([], config) == config.start_currency


def test_estimate_three_idle_waves(config):
    s = new_game(config, 0)
    history = []
    for _ in range(3):
        history.append((abstract(s, PlayerId.P1), NULL_ACTION))
        s, _ = resolve_wave(s, NULL_ACTION, NULL_ACTION)
    assert estimate_enemy_currency(history, config) == config.start_currency + 3 * config.base_stipend


def test_estimate_matches_ground_truth_observed_games(config):
    rng = np.random.default_rng(1234)
    for seed in range(10):
        state = new_game(config, seed)
        history = []
        outcome = None
        while outcome is None:
            a1 = random_action(int(state.currency[0]), int(state.pylons[0]), config, rng)
            a2 = random_action(int(state.currency[1]), int(state.pylons[1]), config, rng)
            view = abstract(state, PlayerId.P1)
            assert estimate_enemy_currency(history, config) == int(state.currency[1])
            history.append((view, a2))
            state, outcome = resolve_wave(state, a1, a2)


def test_estimate_inconsistent_history_clamps(config, caplog):
    big = PlayerAction(Lane.TOP, (0, 0, 40))  # 8000 currency worth
    s = new_game(config, 0)
    history = [(abstract(s, PlayerId.P1), big)]
    with caplog.at_level("WARNING"):
        assert estimate_enemy_currency(history, config) == 0
    assert any("inconsistent" in r.message for r in caplog.records)
