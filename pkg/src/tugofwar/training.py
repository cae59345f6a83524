"""Decomposed-reward DQN self-play and transition-model fitting.

An agent is trained model-free against a pool of frozen earlier agents
(seeded with a uniform-random player).  The Q-head outputs the six-way
outcome vector; targets decompose the usual DQN backup per component with
the argmax action chosen by the summed online components.  Transition data
for the dynamics model comes from tournament games plus the final agent's
replay buffer, recorded from both players' perspectives.

All randomness flows from the config seed, so training logs are
reproducible run to run.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .abstraction import AbstractState, abstract
from .config import GameConfig, PlayerId
from .game import (
    GameOutcome,
    MicroState,
    PlayerAction,
    affordable_actions,
    new_game,
    random_action,
    resolve_wave,
)
from .models import (
    ACTION_DIM,
    OUTCOME_DIM,
    QFunction,
    STATE_DIM,
    TransitionModel,
    clamp_outcome,
    encode_action,
    encode_state,
    outcome_index_for,
    outcome_one_hot,
    rank_actions,
)
from .neural import AdamOptimizer, train_step


@dataclass
class TransitionRecord:
    state: AbstractState
    friendly_action: PlayerAction
    enemy_action: PlayerAction
    next_state: AbstractState
    reward: np.ndarray          # zero vector unless terminal, then one-hot
    terminal: bool


class ReplayBuffer:
    """Bounded FIFO with uniform sampling."""

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: deque[TransitionRecord] = deque(maxlen=capacity)

    def add(self, record: TransitionRecord) -> None:
        self._items.append(record)

    def sample(self, rng: np.random.Generator, n: int) -> list[TransitionRecord]:
        idx = rng.integers(len(self._items), size=n)
        return [self._items[i] for i in idx]

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)


@dataclass
class PoolMember:
    name: str
    kind: str                   # "random" | "q"
    q: QFunction | None = None
    games: int = 0
    wins: int = 0

    def policy(self, rng: np.random.Generator):
        if self.kind == "random":
            return RandomPolicy(rng)
        return GreedyPolicy(self.q)


@dataclass
class TournamentPool:
    members: list[PoolMember] = field(default_factory=list)

    @classmethod
    def seeded(cls) -> "TournamentPool":
        return cls(members=[PoolMember(name="random", kind="random")])

    @property
    def search_agent(self) -> PoolMember:
        return self.members[-1]


@dataclass
class TrainConfig:
    gamma: float = 1.0
    lr: float = 1e-3
    batch_size: int = 64
    buffer_capacity: int = 100_000
    min_buffer: int = 500
    target_sync: int = 1000
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_anneal_frac: float = 0.5     # fraction of the step budget
    win_threshold: float = 0.75
    win_window: int = 200
    max_games: int = 2000
    max_steps: int = 50_000
    update_every: int = 2
    hidden: int = 128
    log_every: int = 25              # games per log record
    seed: int = 0

    def validate(self) -> None:
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        if not 0 < self.win_threshold < 1:
            raise ValueError("win_threshold must be in (0, 1)")


# ---------------------------------------------------------------- policies

class RandomPolicy:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def __call__(self, state: MicroState, player: PlayerId) -> PlayerAction:
        return random_action(
            int(state.currency[player]), int(state.pylons[player]), state.config, self.rng
        )


class GreedyPolicy:
    def __init__(self, q: QFunction):
        self.q = q

    def __call__(self, state: MicroState, player: PlayerId) -> PlayerAction:
        view = abstract(state, player)
        candidates = affordable_actions(view.own_currency, int(view.pylons[0]), state.config)
        return rank_actions(self.q, view, candidates, 1)[0][0]


class EpsilonGreedyPolicy:
    """Draws the exploration coin first, so eps=1 is exactly the random policy."""

    def __init__(self, q: QFunction, rng: np.random.Generator, epsilon: float):
        self.q = q
        self.rng = rng
        self.epsilon = epsilon

    def __call__(self, state: MicroState, player: PlayerId) -> PlayerAction:
        if self.epsilon >= 1.0 or self.rng.random() < self.epsilon:
            return random_action(
                int(state.currency[player]), int(state.pylons[player]), state.config, self.rng
            )
        return GreedyPolicy(self.q)(state, player)


# ---------------------------------------------------------------- drDQN targets

def dr_dqn_targets(
    records: list[TransitionRecord],
    q_online: QFunction,
    q_target: QFunction,
    gamma: float,
    config: GameConfig,
) -> np.ndarray:
    """Per-component Bellman targets with a shared online-argmax action.

    For non-terminal records the next-state action is the argmax of the
    summed online components over the legal next actions; each component
    then bootstraps through the target network."""
    if not records:
        raise ValueError("empty batch")
    targets = np.zeros((len(records), OUTCOME_DIM))
    open_rows: list[int] = []
    candidate_rows: list[np.ndarray] = []
    candidate_slices: list[tuple[int, int]] = []
    for i, rec in enumerate(records):
        if rec.terminal:
            targets[i] = rec.reward
            continue
        cands = affordable_actions(
            rec.next_state.own_currency, int(rec.next_state.pylons[0]), config
        )
        state_row = encode_state(rec.next_state)
        rows = np.empty((len(cands), STATE_DIM + ACTION_DIM))
        for j, action in enumerate(cands):
            rows[j, :STATE_DIM] = state_row
            rows[j, STATE_DIM:] = encode_action(action)
        start = sum(r.shape[0] for r in candidate_rows)
        candidate_rows.append(rows)
        candidate_slices.append((start, start + len(cands)))
        open_rows.append(i)
    if open_rows:
        all_rows = np.concatenate(candidate_rows)
        online_vals = clamp_outcome(q_online.raw_batch(all_rows[:, :STATE_DIM], all_rows[:, STATE_DIM:]))
        target_vals = clamp_outcome(q_target.raw_batch(all_rows[:, :STATE_DIM], all_rows[:, STATE_DIM:]))
        scores = online_vals[:, :3].sum(axis=1)
        for i, (lo, hi) in zip(open_rows, candidate_slices):
            best = lo + int(np.argmax(scores[lo:hi]))
            targets[i] = records[i].reward + gamma * target_vals[best]
    return targets


# ---------------------------------------------------------------- game rollout

@dataclass
class GameRollout:
    """One played game: both actions per wave, states from both perspectives."""

    waves: list[tuple[MicroState, PlayerAction, PlayerAction, MicroState]]
    outcome: GameOutcome

    def records(self, perspective: PlayerId) -> list[TransitionRecord]:
        out = []
        last = len(self.waves) - 1
        for i, (state, a1, a2, nxt) in enumerate(self.waves):
            terminal = i == last
            reward = np.zeros(OUTCOME_DIM)
            if terminal:
                reward = outcome_one_hot(outcome_index_for(self.outcome, perspective))
            mine, theirs = (a1, a2) if perspective == PlayerId.P1 else (a2, a1)
            out.append(
                TransitionRecord(
                    state=abstract(state, perspective),
                    friendly_action=mine,
                    enemy_action=theirs,
                    next_state=abstract(nxt, perspective),
                    reward=reward,
                    terminal=terminal,
                )
            )
        return out


def play_game(
    policy_p1, policy_p2, config: GameConfig, seed: int, on_step=None
) -> GameRollout:
    state = new_game(config, seed)
    waves = []
    outcome = None
    while outcome is None:
        a1 = policy_p1(state, PlayerId.P1)
        a2 = policy_p2(state, PlayerId.P2)
        nxt, outcome = resolve_wave(state, a1, a2)
        waves.append((state, a1, a2, nxt))
        state = nxt
        if on_step is not None:
            on_step(waves[-1], outcome)
    return GameRollout(waves=waves, outcome=outcome)


def evaluate_win_rate(
    q: QFunction, opponent: PoolMember, n_games: int, config: GameConfig, seed: int
) -> float:
    rng = np.random.default_rng(seed)
    wins = 0
    for i in range(n_games):
        rollout = play_game(
            GreedyPolicy(q),
            opponent.policy(rng),
            config,
            seed=int(rng.integers(1 << 31)),
        )
        wins += rollout.outcome.winner == PlayerId.P1
    return wins / n_games


# ---------------------------------------------------------------- training loop

@dataclass
class TrainResult:
    q: QFunction
    log: list[dict]
    reached_threshold: bool
    best_win_rate: float
    games_played: int
    buffer: ReplayBuffer


def train_agent(pool: TournamentPool, config: TrainConfig, game_config: GameConfig) -> TrainResult:
    """ε-greedy drDQN against uniformly sampled pool opponents.

    Stops once the trailing win rate clears the threshold, otherwise at the
    game/step budget (then the best-seen checkpoint is returned, flagged
    via reached_threshold=False)."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    online = QFunction.create(seed=int(rng.integers(1 << 31)), hidden=config.hidden)
    target = QFunction(online.params.copy())
    optimizer = AdamOptimizer(lr=config.lr)
    buffer = ReplayBuffer(config.buffer_capacity)
    results: deque[int] = deque(maxlen=config.win_window)
    log: list[dict] = []
    recent_losses: deque[float] = deque(maxlen=200)

    anneal_steps = max(int(config.max_steps * config.eps_anneal_frac), 1)
    step = 0
    updates = 0
    best = (-1.0, None)  # (win rate, params snapshot)
    reached = False
    games = 0

    def epsilon() -> float:
        frac = min(step / anneal_steps, 1.0)
        return config.eps_start + (config.eps_end - config.eps_start) * frac

    def maybe_update() -> None:
        nonlocal updates
        if len(buffer) < max(config.min_buffer, config.batch_size):
            return
        if step % config.update_every != 0:
            return
        batch = buffer.sample(rng, config.batch_size)
        targets = dr_dqn_targets(batch, online, target, config.gamma, game_config)
        inputs = np.empty((len(batch), STATE_DIM + ACTION_DIM))
        for i, rec in enumerate(batch):
            inputs[i, :STATE_DIM] = encode_state(rec.state)
            inputs[i, STATE_DIM:] = encode_action(rec.friendly_action)
        online.params, loss = train_step(online.params, (inputs, targets), optimizer)
        recent_losses.append(loss)
        updates += 1
        if updates % config.target_sync == 0:
            target.params = online.params.copy()

    while games < config.max_games and step < config.max_steps and not reached:
        opponent = pool.members[int(rng.integers(len(pool.members)))]
        opp_policy = opponent.policy(rng)
        learner = EpsilonGreedyPolicy(online, rng, epsilon())

        def on_step(wave, outcome):
            nonlocal step
            state, a1, a2, nxt = wave
            reward = np.zeros(OUTCOME_DIM)
            terminal = outcome is not None
            if terminal:
                reward = outcome_one_hot(outcome_index_for(outcome, PlayerId.P1))
            buffer.add(
                TransitionRecord(
                    state=abstract(state, PlayerId.P1),
                    friendly_action=a1,
                    enemy_action=a2,
                    next_state=abstract(nxt, PlayerId.P1),
                    reward=reward,
                    terminal=terminal,
                )
            )
            step += 1
            learner.epsilon = epsilon()
            maybe_update()

        rollout = play_game(learner, opp_policy, game_config, int(rng.integers(1 << 31)), on_step)
        games += 1
        won = rollout.outcome.winner == PlayerId.P1
        results.append(int(won))
        opponent.games += 1
        opponent.wins += int(not won)

        win_rate = sum(results) / len(results)
        if len(results) >= min(config.win_window, 50) and win_rate > best[0]:
            best = (win_rate, online.params.copy())
        if len(results) == config.win_window and win_rate >= config.win_threshold:
            reached = True
        if games % config.log_every == 0 or reached or games == config.max_games:
            log.append(
                {
                    "games": games,
                    "steps": step,
                    "updates": updates,
                    "loss": float(np.mean(recent_losses)) if recent_losses else None,
                    "win_rate": win_rate,
                    "epsilon": epsilon(),
                }
            )

    final_q = QFunction(online.params if reached or best[1] is None else best[1])
    return TrainResult(
        q=final_q,
        log=log,
        reached_threshold=reached,
        best_win_rate=max(best[0], sum(results) / len(results) if results else 0.0),
        games_played=games,
        buffer=buffer,
    )


def run_tournament(
    generations: int, config: TrainConfig, game_config: GameConfig
) -> tuple[TournamentPool, list[TrainResult]]:
    """Iteratively train agents against the growing pool; last agent is the
    designated search agent."""
    if generations < 1:
        raise ValueError("need at least one generation")
    pool = TournamentPool.seeded()
    results = []
    for gen in range(generations):
        gen_config = replace(config, seed=config.seed + gen * 7919)
        result = train_agent(pool, gen_config, game_config)
        pool.members.append(PoolMember(name=f"gen{gen + 1}", kind="q", q=result.q))
        results.append(result)
    return pool, results


# ---------------------------------------------------------------- transition data

def collect_transition_dataset(
    pool: TournamentPool,
    n_games: int,
    seed: int,
    game_config: GameConfig,
    include_buffer: ReplayBuffer | None = None,
) -> list[TransitionRecord]:
    """Pool-vs-pool and pool-vs-random games, both perspectives recorded,
    plus the provided replay buffer's contents."""
    if not pool.members:
        raise ValueError("pool must be non-empty")
    rng = np.random.default_rng(seed)
    random_member = PoolMember(name="random", kind="random")
    dataset: list[TransitionRecord] = []
    for i in range(n_games):
        first = pool.members[int(rng.integers(len(pool.members)))]
        if i % 2 == 0:
            second = pool.members[int(rng.integers(len(pool.members)))]
        else:
            second = random_member
        rollout = play_game(
            first.policy(rng), second.policy(rng), game_config, int(rng.integers(1 << 31))
        )
        dataset.extend(rollout.records(PlayerId.P1))
        dataset.extend(rollout.records(PlayerId.P2))
    if include_buffer is not None:
        dataset.extend(include_buffer)
    return dataset


# ---------------------------------------------------------------- dataset files

DATASET_FORMAT = "tow-dataset"
DATASET_VERSION = 1


def save_dataset(dataset: list[TransitionRecord], path) -> None:
    """Line-delimited JSON: a header line, then one record per line."""
    import json

    from .abstraction import state_to_doc
    from .search import _action_to_doc

    with open(path, "w") as fh:
        fh.write(json.dumps({"format": DATASET_FORMAT, "version": DATASET_VERSION}) + "\n")
        for rec in dataset:
            fh.write(
                json.dumps(
                    {
                        "state": state_to_doc(rec.state),
                        "friendly_action": _action_to_doc(rec.friendly_action),
                        "enemy_action": _action_to_doc(rec.enemy_action),
                        "next_state": state_to_doc(rec.next_state),
                        "reward": [float(x) for x in rec.reward],
                        "terminal": rec.terminal,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def load_dataset(path) -> list[TransitionRecord]:
    import json

    from .abstraction import state_from_doc
    from .search import _action_from_doc

    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("format") != DATASET_FORMAT or header.get("version") != DATASET_VERSION:
            raise ValueError("not a supported transition-dataset file")
        records = []
        for line in fh:
            doc = json.loads(line)
            records.append(
                TransitionRecord(
                    state=state_from_doc(doc["state"]),
                    friendly_action=_action_from_doc(doc["friendly_action"]),
                    enemy_action=_action_from_doc(doc["enemy_action"]),
                    next_state=state_from_doc(doc["next_state"]),
                    reward=np.asarray(doc["reward"], dtype=np.float64),
                    terminal=doc["terminal"],
                )
            )
    return records


# ---------------------------------------------------------------- model fitting

@dataclass
class FitConfig:
    lr: float = 1e-3
    batch_size: int = 256
    epochs: int = 20
    holdout_frac: float = 0.1
    hidden: int = 128
    seed: int = 0


@dataclass
class TransitionFitResult:
    model: TransitionModel
    history: list[dict]
    holdout_mae: dict


_FIELD_GROUPS = {
    "wave": slice(0, 1),
    "base_health": slice(1, 5),
    "currency": slice(5, 6),
    "buildings": slice(6, 18),
    "pylons": slice(18, 20),
    "unit_grid": slice(20, 68),
    "reward": slice(68, 74),
}


def _mae_by_group(pred: np.ndarray, truth: np.ndarray) -> dict:
    err = np.abs(pred - truth)
    return {name: float(err[:, sl].mean()) for name, sl in _FIELD_GROUPS.items()}


def fit_transition_model(
    dataset: list[TransitionRecord], config: FitConfig
) -> TransitionFitResult:
    """Squared-error regression from (s, a_f, a_e) onto (s', reward)."""
    if not dataset:
        raise ValueError("dataset must be non-empty")
    rng = np.random.default_rng(config.seed)
    n = len(dataset)
    X = np.empty((n, STATE_DIM + 2 * ACTION_DIM))
    Y = np.empty((n, STATE_DIM + OUTCOME_DIM))
    for i, rec in enumerate(dataset):
        X[i, :STATE_DIM] = encode_state(rec.state)
        X[i, STATE_DIM:STATE_DIM + ACTION_DIM] = encode_action(rec.friendly_action)
        X[i, STATE_DIM + ACTION_DIM:] = encode_action(rec.enemy_action)
        Y[i, :STATE_DIM] = encode_state(rec.next_state)
        Y[i, STATE_DIM:] = rec.reward
    order = rng.permutation(n)
    X, Y = X[order], Y[order]
    n_holdout = int(n * config.holdout_frac)
    X_hold, Y_hold = X[:n_holdout], Y[:n_holdout]
    X_train, Y_train = X[n_holdout:], Y[n_holdout:]

    model = TransitionModel.create(seed=int(rng.integers(1 << 31)), hidden=config.hidden)
    optimizer = AdamOptimizer(lr=config.lr)
    history = []
    n_train = len(X_train)
    for epoch in range(config.epochs):
        perm = rng.permutation(n_train)
        losses = []
        for start in range(0, n_train, config.batch_size):
            idx = perm[start:start + config.batch_size]
            model.params, loss = train_step(model.params, (X_train[idx], Y_train[idx]), optimizer)
            losses.append(loss)
        record = {"epoch": epoch, "train_loss": float(np.mean(losses))}
        if n_holdout:
            record["holdout_mae"] = _mae_by_group(model.raw_batch(X_hold), Y_hold)
        history.append(record)

    holdout = (
        _mae_by_group(model.raw_batch(X_hold), Y_hold)
        if n_holdout
        else _mae_by_group(model.raw_batch(X_train), Y_train)
    )
    return TransitionFitResult(model=model, history=history, holdout_mae=holdout)
