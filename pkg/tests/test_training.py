import numpy as np
import pytest

from tugofwar.abstraction import abstract
from tugofwar.config import DEFAULT_CONFIG, Lane, PlayerId, config_from_mapping
from tugofwar.game import NULL_ACTION, PlayerAction, new_game
from tugofwar.models import OUTCOME_DIM, QFunction, agent_value, outcome_one_hot, q_values_batch
from tugofwar.training import (
    EpsilonGreedyPolicy,
    FitConfig,
    GreedyPolicy,
    PoolMember,
    RandomPolicy,
    ReplayBuffer,
    TournamentPool,
    TrainConfig,
    TransitionRecord,
    collect_transition_dataset,
    dr_dqn_targets,
    fit_transition_model,
    play_game,
    train_agent,
)

from conftest import play_random_game

# Small economy keeps candidate sets tiny so training-path tests stay quick.
DESK = config_from_mapping({"base_health_max": "600"})


def make_record(rng, config, terminal=False, reward_index=0):
    steps, _ = play_random_game(config, int(rng.integers(1 << 16)), max_waves=4)
    state, a1, a2, nxt = steps[int(rng.integers(len(steps)))]
    reward = outcome_one_hot(reward_index) if terminal else np.zeros(OUTCOME_DIM)
    return TransitionRecord(
        state=abstract(state, PlayerId.P1),
        friendly_action=a1,
        enemy_action=a2,
        next_state=abstract(nxt, PlayerId.P1),
        reward=reward,
        terminal=terminal,
    )


# ---------------------------------------------------------------- buffer

def test_buffer_fifo_and_capacity():
    buf = ReplayBuffer(capacity=3)
    rng = np.random.default_rng(0)
    recs = [make_record(rng, DESK) for _ in range(5)]
    for r in recs:
        buf.add(r)
    assert len(buf) == 3
    assert list(buf) == recs[2:]


def test_buffer_uniform_sampling_seeded():
    buf = ReplayBuffer(capacity=10)
    rng = np.random.default_rng(1)
    for _ in range(10):
        buf.add(make_record(rng, DESK))
    a = buf.sample(np.random.default_rng(5), 4)
    b = buf.sample(np.random.default_rng(5), 4)
    assert a == b


# ---------------------------------------------------------------- targets

def test_terminal_target_is_reward():
    rng = np.random.default_rng(2)
    rec = make_record(rng, DESK, terminal=True, reward_index=3)
    q = QFunction.create(seed=0, hidden=16)
    targets = dr_dqn_targets([rec], q, q, gamma=1.0, config=DESK)
    assert np.array_equal(targets[0], rec.reward)


def test_nonterminal_target_bootstraps_target_net():
    rng = np.random.default_rng(3)
    rec = make_record(rng, DESK)
    q_online = QFunction.create(seed=1, hidden=16)
    q_target = QFunction.create(seed=2, hidden=16)
    targets = dr_dqn_targets([rec], q_online, q_target, gamma=1.0, config=DESK)
    # reproduce by hand: argmax over next candidates by online sum, value from target
    from tugofwar.game import affordable_actions

    cands = affordable_actions(rec.next_state.own_currency, int(rec.next_state.pylons[0]), DESK)
    online_vals = q_values_batch(q_online, rec.next_state, cands)
    best = int(np.argmax(online_vals[:, :3].sum(axis=1)))
    expected = q_values_batch(q_target, rec.next_state, cands)[best]
    assert np.allclose(targets[0], expected)


def test_aggregation_identity_random_batches():
    """Summed component targets equal the scalar-DQN target with the shared argmax."""
    rng = np.random.default_rng(4)
    q_online = QFunction.create(seed=5, hidden=16)
    q_target = QFunction.create(seed=6, hidden=16)
    records = [make_record(rng, DESK, terminal=bool(rng.integers(2)), reward_index=int(rng.integers(6)))
               for _ in range(40)]
    gamma = 0.97
    targets = dr_dqn_targets(records, q_online, q_target, gamma, DESK)
    from tugofwar.game import affordable_actions

    for rec, target in zip(records, targets):
        if rec.terminal:
            scalar = rec.reward.sum()
        else:
            cands = affordable_actions(rec.next_state.own_currency, int(rec.next_state.pylons[0]), DESK)
            online_vals = q_values_batch(q_online, rec.next_state, cands)
            best = int(np.argmax(online_vals[:, :3].sum(axis=1)))
            scalar = rec.reward.sum() + gamma * q_values_batch(q_target, rec.next_state, cands)[best].sum()
        assert abs(target.sum() - scalar) < 1e-12


# ---------------------------------------------------------------- policies

def test_epsilon_one_is_exactly_random_policy():
    q = QFunction.create(seed=0, hidden=16)
    state = new_game(DESK, 3)
    state.currency[:] = 400
    for trial in range(20):
        greedy_rng = np.random.default_rng(trial)
        rand_rng = np.random.default_rng(trial)
        a = EpsilonGreedyPolicy(q, greedy_rng, epsilon=1.0)(state, PlayerId.P1)
        b = RandomPolicy(rand_rng)(state, PlayerId.P1)
        assert a == b


def test_epsilon_zero_is_greedy():
    q = QFunction.create(seed=0, hidden=16)
    state = new_game(DESK, 3)
    a = EpsilonGreedyPolicy(q, np.random.default_rng(0), epsilon=0.0)(state, PlayerId.P1)
    assert a == GreedyPolicy(q)(state, PlayerId.P1)


# ---------------------------------------------------------------- training loop

def quick_config(**overrides):
    base = dict(
        max_games=12,
        max_steps=400,
        min_buffer=8,
        batch_size=8,
        hidden=16,
        win_window=10,
        win_threshold=0.99,
        update_every=2,
        target_sync=20,
        log_every=4,
        seed=11,
    )
    base.update(overrides)
    return TrainConfig(**base)


def test_train_agent_runs_and_logs():
    pool = TournamentPool.seeded()
    result = train_agent(pool, quick_config(), DESK)
    assert result.games_played == 12
    assert not result.reached_threshold  # threshold of .99 unreachable here
    assert result.log and all("win_rate" in rec for rec in result.log)
    assert len(result.buffer) > 0


def test_training_log_reproducible():
    a = train_agent(TournamentPool.seeded(), quick_config(), DESK)
    b = train_agent(TournamentPool.seeded(), quick_config(), DESK)
    assert a.log == b.log
    assert a.q.params.allclose(b.q.params)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(gamma=0.0).validate()
    with pytest.raises(ValueError):
        TrainConfig(win_threshold=1.0).validate()


def test_tournament_appends_generations():
    from tugofwar.training import run_tournament

    pool, results = run_tournament(1, quick_config(max_games=6), DESK)
    assert [m.name for m in pool.members] == ["random", "gen1"]
    assert pool.search_agent.kind == "q"
    assert len(results) == 1


# ---------------------------------------------------------------- dataset

def test_collect_dataset_empty():
    pool = TournamentPool.seeded()
    assert collect_transition_dataset(pool, 0, seed=0, game_config=DESK) == []


def test_collect_dataset_obeys_game_invariants():
    pool = TournamentPool.seeded()
    data = collect_transition_dataset(pool, 4, seed=3, game_config=DESK)
    assert data
    terminals = [r for r in data if r.terminal]
    assert len(terminals) == 8  # both perspectives of 4 games
    for rec in data:
        assert np.all(rec.next_state.base_health <= rec.state.base_health + 1e-9)
        assert np.all(rec.next_state.buildings >= rec.state.buildings)
        if rec.terminal:
            assert rec.reward.sum() == 1.0
        else:
            assert rec.reward.sum() == 0.0


def test_collect_dataset_size_is_twice_total_waves():
    """Both perspectives of every wave are recorded: 2 records per wave."""
    pool = TournamentPool.seeded()
    data = collect_transition_dataset(pool, 6, seed=9, game_config=DESK)
    assert sum(r.terminal for r in data) == 12  # 2 per game
    # P1-perspective and P2-perspective blocks alternate per game; every wave
    # appears exactly twice, mirrored
    assert len(data) % 2 == 0
    games = []
    i = 0
    while i < len(data):
        # a game's P1 block runs until its terminal record
        j = i
        while not data[j].terminal:
            j += 1
        p1_block = data[i:j + 1]
        p2_block = data[j + 1:j + 1 + len(p1_block)]
        assert len(p2_block) == len(p1_block)
        assert p2_block[-1].terminal
        for a, b in zip(p1_block, p2_block):
            assert a.state.wave == b.state.wave
            assert np.array_equal(a.state.unit_grid, b.state.unit_grid[[1, 0]][:, :, [3, 2, 1, 0, 7, 6, 5, 4]])
        games.append(len(p1_block))
        i = j + 1 + len(p2_block)
    assert len(games) == 6
    assert len(data) == 2 * sum(games)


def test_dataset_file_round_trip(tmp_path):
    from tugofwar.training import load_dataset, save_dataset

    pool = TournamentPool.seeded()
    data = collect_transition_dataset(pool, 2, seed=4, game_config=DESK)
    path = tmp_path / "transitions.jsonl"
    save_dataset(data, path)
    loaded = load_dataset(path)
    assert len(loaded) == len(data)
    for a, b in zip(data, loaded):
        assert a.state == b.state and a.next_state == b.next_state
        assert a.friendly_action == b.friendly_action and a.enemy_action == b.enemy_action
        assert np.array_equal(a.reward, b.reward) and a.terminal == b.terminal
    path.write_text('{"format": "other"}\n')
    with pytest.raises(ValueError):
        load_dataset(path)


def test_collect_dataset_includes_buffer():
    pool = TournamentPool.seeded()
    buf = ReplayBuffer(capacity=10)
    rng = np.random.default_rng(0)
    for _ in range(5):
        buf.add(make_record(rng, DESK))
    data = collect_transition_dataset(pool, 0, seed=0, game_config=DESK, include_buffer=buf)
    assert len(data) == 5


# ---------------------------------------------------------------- fitting

def test_overfit_small_dataset():
    pool = TournamentPool.seeded()
    data = collect_transition_dataset(pool, 3, seed=1, game_config=DESK)[:50]
    result = fit_transition_model(
        data, FitConfig(lr=5e-3, epochs=600, batch_size=16, holdout_frac=0.0, hidden=64, seed=0)
    )
    from tugofwar.models import STATE_DIM, encode_state, encode_action
    import numpy as np

    X = np.stack(
        [
            np.concatenate(
                [encode_state(r.state), encode_action(r.friendly_action), encode_action(r.enemy_action)]
            )
            for r in data
        ]
    )
    Y = np.stack([np.concatenate([encode_state(r.next_state), r.reward]) for r in data])
    mae = np.abs(result.model.raw_batch(X) - Y).mean()
    assert mae < 0.01


def test_constant_dataset_learns_constant():
    rng = np.random.default_rng(5)
    rec = make_record(rng, DESK)
    data = [rec] * 30
    result = fit_transition_model(
        data, FitConfig(lr=5e-3, epochs=600, batch_size=8, holdout_frac=0.0, hidden=16, seed=1)
    )
    from tugofwar.models import predict_transition

    predicted, _ = predict_transition(result.model, rec.state, rec.friendly_action, rec.enemy_action)
    # integer fields decode exactly; healths converge to the constant
    assert np.array_equal(predicted.buildings, rec.next_state.buildings)
    assert np.array_equal(predicted.unit_grid, rec.next_state.unit_grid)
    assert np.array_equal(predicted.pylons, rec.next_state.pylons)
    assert predicted.own_currency == rec.next_state.own_currency
    assert np.allclose(predicted.base_health, rec.next_state.base_health, atol=1e-3)


def test_fit_reports_holdout_metrics():
    pool = TournamentPool.seeded()
    data = collect_transition_dataset(pool, 6, seed=2, game_config=DESK)
    result = fit_transition_model(data, FitConfig(epochs=3, hidden=32, seed=0))
    assert set(result.holdout_mae) >= {"base_health", "unit_grid", "reward"}
    assert len(result.history) == 3


def test_fit_rejects_empty():
    with pytest.raises(ValueError):
        fit_transition_model([], FitConfig())
