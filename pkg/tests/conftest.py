import numpy as np
import pytest

from tugofwar.config import DEFAULT_CONFIG, GameConfig, PlayerId
from tugofwar.game import new_game, random_action, resolve_wave


@pytest.fixture
def config():
    return DEFAULT_CONFIG


def play_random_game(config: GameConfig, seed: int, max_waves: int | None = None):
    """Run a random-policy game; returns (list of (state, a1, a2, next_state), outcome)."""
    rng = np.random.default_rng(seed)
    state = new_game(config, seed)
    steps = []
    outcome = None
    while outcome is None:
        a1 = random_action(int(state.currency[0]), int(state.pylons[0]), config, rng)
        a2 = random_action(int(state.currency[1]), int(state.pylons[1]), config, rng)
        nxt, outcome = resolve_wave(state, a1, a2)
        steps.append((state, a1, a2, nxt))
        state = nxt
        if max_waves is not None and len(steps) >= max_waves:
            break
    return steps, outcome
