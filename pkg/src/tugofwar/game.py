"""Core game engine: micro-tick combat, wave resolution, legality, win conditions.

Two players push unit waves down two lanes.  Each wave both players buy
production buildings (restricted to one lane per wave) and pylons, every
building spawns one unit, and the spawned armies auto-fight for
``ticks_per_wave`` micro-ticks.  The first destroyed base ends the game;
otherwise the lowest-health base loses after wave 40.

Combat ticks are deterministic given the seeded per-game generator: attack
decisions are taken from the tick-start snapshot, damage (with uniform
jitter) is applied simultaneously, deaths are removed afterwards.  Long
march phases where nobody can possibly attack are fast-forwarded in one
step; this is exactly equivalent to ticking (no RNG draws happen while
marching) and is property-tested against the naive loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .config import BEATS, GameConfig, Lane, PlayerId


class GameError(ValueError):
    pass


class IllegalActionError(GameError):
    pass


class TerminalStateError(GameError):
    pass


class Win(IntEnum):
    """Win conditions; DESTROYS_TOP = destroying the opponent's top-lane base."""
    P1_DESTROYS_TOP = 0
    P1_DESTROYS_BOTTOM = 1
    P1_TIMEOUT = 2
    P2_DESTROYS_TOP = 3
    P2_DESTROYS_BOTTOM = 4
    P2_TIMEOUT = 5


@dataclass(frozen=True)
class GameOutcome:
    winner: PlayerId
    condition: Win


@dataclass(frozen=True)
class PlayerAction:
    """One lane choice plus purchases. Zero-building actions canonicalize to TOP
    (pylons are global, so the lane carries no information without buildings)."""

    lane: Lane
    buildings_added: tuple[int, int, int] = (0, 0, 0)
    pylons_added: int = 0

    def __post_init__(self):
        if len(self.buildings_added) != 3 or any(n < 0 for n in self.buildings_added):
            raise GameError("buildings_added must be 3 non-negative counts")
        if self.pylons_added < 0:
            raise GameError("pylons_added must be non-negative")
        if not any(self.buildings_added) and self.lane != Lane.TOP:
            object.__setattr__(self, "lane", Lane.TOP)

    @property
    def is_null(self) -> bool:
        return not any(self.buildings_added) and self.pylons_added == 0

    def sort_key(self) -> tuple:
        """Canonical total order used for deterministic tie-breaking."""
        return (int(self.lane), *self.buildings_added, self.pylons_added)


NULL_ACTION = PlayerAction(Lane.TOP)

# In-range tolerance: stop-at-range movement lands exactly on the boundary, so
# the hit test needs slack against float rounding.
ATTACK_EPS = 1e-9


@dataclass
class LaneUnits:
    """Struct-of-arrays unit storage for one lane (insertion order preserved)."""

    pos: np.ndarray
    hp: np.ndarray
    owner: np.ndarray
    kind: np.ndarray

    @staticmethod
    def empty() -> "LaneUnits":
        return LaneUnits(
            pos=np.empty(0, dtype=np.float64),
            hp=np.empty(0, dtype=np.float64),
            owner=np.empty(0, dtype=np.int8),
            kind=np.empty(0, dtype=np.int8),
        )

    def copy(self) -> "LaneUnits":
        return LaneUnits(self.pos.copy(), self.hp.copy(), self.owner.copy(), self.kind.copy())

    def __len__(self) -> int:
        return len(self.pos)

    def compact(self, alive: np.ndarray) -> None:
        self.pos = self.pos[alive]
        self.hp = self.hp[alive]
        self.owner = self.owner[alive]
        self.kind = self.kind[alive]


@dataclass
class MicroState:
    """Full simulator state; the agent only ever sees its abstraction.

    Damage jitter draws from one independent stream per lane, so a lane
    untouched by purchases evolves bit-identically no matter what happens
    in the other lane (the lane-independence law the lint detectors rely on)."""

    config: GameConfig
    wave: int
    currency: np.ndarray        # (2,) int64, per player
    pylons: np.ndarray          # (2,) int64
    buildings: np.ndarray       # (2 players, 2 lanes, 3 types) int64
    base_health: np.ndarray     # (2 players, 2 lanes) float64
    units: tuple[LaneUnits, LaneUnits]
    rng_state: tuple[dict, dict]    # per-lane generator states

    def copy(self) -> "MicroState":
        return MicroState(
            config=self.config,
            wave=self.wave,
            currency=self.currency.copy(),
            pylons=self.pylons.copy(),
            buildings=self.buildings.copy(),
            base_health=self.base_health.copy(),
            units=(self.units[0].copy(), self.units[1].copy()),
            rng_state=(dict(self.rng_state[0]), dict(self.rng_state[1])),
        )


def new_game(config: GameConfig, seed: int) -> MicroState:
    """Fresh game: wave 1 pending, full bases, start currency, seeded RNG."""
    config.validate()
    lane_rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2)]
    return MicroState(
        config=config,
        wave=1,
        currency=np.full(2, config.start_currency, dtype=np.int64),
        pylons=np.zeros(2, dtype=np.int64),
        buildings=np.zeros((2, 2, 3), dtype=np.int64),
        base_health=np.full((2, 2), config.base_health_max, dtype=np.float64),
        units=(LaneUnits.empty(), LaneUnits.empty()),
        rng_state=tuple(dict(r.bit_generator.state) for r in lane_rngs),
    )


def action_cost(action: PlayerAction, config: GameConfig) -> int:
    return (
        sum(n * c for n, c in zip(action.buildings_added, config.building_costs))
        + action.pylons_added * config.pylon_cost
    )


def affordable_actions(currency: int, pylons_owned: int, config: GameConfig) -> list[PlayerAction]:
    """All affordable (lane, purchase) combinations, canonically ordered and deduplicated."""
    cm, cb, ci = config.building_costs
    cp = config.pylon_cost
    pylon_room = config.max_pylons - pylons_owned
    actions: list[PlayerAction] = []
    for lane in (Lane.TOP, Lane.BOTTOM):
        for m in range(currency // cm + 1):
            left_m = currency - m * cm
            for b in range(left_m // cb + 1):
                left_b = left_m - b * cb
                for i in range(left_b // ci + 1):
                    left_i = left_b - i * ci
                    no_buildings = (m == 0 and b == 0 and i == 0)
                    if no_buildings and lane == Lane.BOTTOM:
                        continue  # canonical duplicate of the TOP form
                    for p in range(min(pylon_room, left_i // cp) + 1):
                        actions.append(PlayerAction(lane, (m, b, i), p))
    return actions


def legal_actions(state: MicroState, player: PlayerId) -> list[PlayerAction]:
    if terminal_outcome(state) is not None:
        raise TerminalStateError("game is over")
    return affordable_actions(int(state.currency[player]), int(state.pylons[player]), state.config)


def random_action(currency: int, pylons_owned: int, config: GameConfig, rng: np.random.Generator) -> PlayerAction:
    """Sample an affordable action without enumerating the whole action set.

    Not uniform over actions; used for random policies and exploration."""
    lane = Lane(int(rng.integers(2)))
    budget = currency
    counts = [0, 0, 0]
    order = rng.permutation(3)
    for t in order:
        cost = config.building_costs[t]
        cap = budget // cost
        if cap > 0:
            counts[t] = int(rng.integers(cap + 1))
            budget -= counts[t] * cost
    pylon_cap = min(config.max_pylons - pylons_owned, budget // config.pylon_cost)
    pylons = int(rng.integers(pylon_cap + 1)) if pylon_cap > 0 else 0
    return PlayerAction(lane, tuple(counts), pylons)


def _check_legal(state: MicroState, action: PlayerAction, player: PlayerId) -> None:
    cost = action_cost(action, state.config)
    if cost > state.currency[player]:
        raise IllegalActionError(
            f"player {int(player) + 1} cannot afford {cost} with {int(state.currency[player])}"
        )
    if state.pylons[player] + action.pylons_added > state.config.max_pylons:
        raise IllegalActionError("pylon purchase exceeds the cap")


def _destruction_outcome(base_health: np.ndarray) -> GameOutcome | None:
    # Fixed priority if several bases hit zero in the same tick: P1's kill wins,
    # top lane before bottom.
    checks = (
        (PlayerId.P2, Lane.TOP, PlayerId.P1, Win.P1_DESTROYS_TOP),
        (PlayerId.P2, Lane.BOTTOM, PlayerId.P1, Win.P1_DESTROYS_BOTTOM),
        (PlayerId.P1, Lane.TOP, PlayerId.P2, Win.P2_DESTROYS_TOP),
        (PlayerId.P1, Lane.BOTTOM, PlayerId.P2, Win.P2_DESTROYS_BOTTOM),
    )
    for owner, lane, winner, condition in checks:
        if base_health[owner, lane] <= 0.0:
            return GameOutcome(winner, condition)
    return None


def terminal_outcome(state: MicroState) -> GameOutcome | None:
    """Destroyed base => destroyer wins; past wave 40 the lowest base loses."""
    destroyed = _destruction_outcome(state.base_health)
    if destroyed is not None:
        return destroyed
    if state.wave > state.config.max_waves:
        mins = state.base_health.min(axis=1)
        if mins[0] != mins[1]:
            loser = PlayerId.P1 if mins[0] < mins[1] else PlayerId.P2
        else:
            totals = state.base_health.sum(axis=1)
            if totals[0] != totals[1]:
                loser = PlayerId.P1 if totals[0] < totals[1] else PlayerId.P2
            else:
                loser = PlayerId.P2  # exact tie resolved for Player 1
        winner = loser.opponent
        condition = Win.P1_TIMEOUT if winner == PlayerId.P1 else Win.P2_TIMEOUT
        return GameOutcome(winner, condition)
    return None


def _spawn_wave(state: MicroState) -> None:
    cfg = state.config
    for lane in (0, 1):
        blocks_pos, blocks_hp, blocks_owner, blocks_kind = [], [], [], []
        for player in (0, 1):
            spawn_x = 0.0 if player == 0 else cfg.lane_length
            for kind in range(3):
                n = int(state.buildings[player, lane, kind])
                if n == 0:
                    continue
                blocks_pos.append(np.full(n, spawn_x))
                blocks_hp.append(np.full(n, cfg.unit_stats[kind].hp))
                blocks_owner.append(np.full(n, player, dtype=np.int8))
                blocks_kind.append(np.full(n, kind, dtype=np.int8))
        if blocks_pos:
            u = state.units[lane]
            u.pos = np.concatenate([u.pos, *blocks_pos])
            u.hp = np.concatenate([u.hp, *blocks_hp])
            u.owner = np.concatenate([u.owner, *blocks_owner])
            u.kind = np.concatenate([u.kind, *blocks_kind])


@dataclass
class _LaneView:
    """Per-tick snapshot of one lane's engagement geometry."""

    idx: tuple[np.ndarray, np.ndarray]          # global indices per owner
    nearest_dist: tuple[np.ndarray, np.ndarray]  # to closest enemy unit (inf if none)
    nearest_idx: tuple[np.ndarray, np.ndarray]   # index into the *other* owner's idx
    base_dist: tuple[np.ndarray, np.ndarray]
    ranges: tuple[np.ndarray, np.ndarray]
    speeds: tuple[np.ndarray, np.ndarray]
    hit_unit: tuple[np.ndarray, np.ndarray]
    hit_base: tuple[np.ndarray, np.ndarray]


def _lane_view(units: LaneUnits, cfg: GameConfig, range_by_kind, speed_by_kind) -> _LaneView | None:
    n = len(units)
    if n == 0:
        return None
    idx1 = np.flatnonzero(units.owner == 0)
    idx2 = np.flatnonzero(units.owner == 1)
    pos1, pos2 = units.pos[idx1], units.pos[idx2]
    r1, r2 = range_by_kind[units.kind[idx1]], range_by_kind[units.kind[idx2]]
    v1, v2 = speed_by_kind[units.kind[idx1]], speed_by_kind[units.kind[idx2]]
    if len(idx1) and len(idx2):
        dist = np.abs(pos1[:, None] - pos2[None, :])
        near1, j1 = dist.min(axis=1), dist.argmin(axis=1)
        near2, j2 = dist.min(axis=0), dist.argmin(axis=0)
    else:
        near1 = np.full(len(idx1), np.inf)
        near2 = np.full(len(idx2), np.inf)
        j1 = np.zeros(len(idx1), dtype=np.int64)
        j2 = np.zeros(len(idx2), dtype=np.int64)
    base1 = cfg.lane_length - pos1   # P1 attacks the base at the far wall
    base2 = pos2
    hit_u1, hit_u2 = near1 <= r1 + ATTACK_EPS, near2 <= r2 + ATTACK_EPS
    hit_b1 = ~hit_u1 & (base1 <= r1 + ATTACK_EPS)
    hit_b2 = ~hit_u2 & (base2 <= r2 + ATTACK_EPS)
    return _LaneView(
        idx=(idx1, idx2),
        nearest_dist=(near1, near2),
        nearest_idx=(j1, j2),
        base_dist=(base1, base2),
        ranges=(r1, r2),
        speeds=(v1, v2),
        hit_unit=(hit_u1, hit_u2),
        hit_base=(hit_b1, hit_b2),
    )


def _safe_march_ticks(views: list[_LaneView | None], max_enemy_speed) -> int:
    """Ticks that can be fast-forwarded because provably nobody can attack."""
    best = math.inf
    for view in views:
        if view is None:
            continue
        for side in (0, 1):
            if len(view.idx[side]) == 0:
                continue
            other = 1 - side
            closing = view.speeds[side] + max_enemy_speed[other]
            slack_unit = view.nearest_dist[side] - view.ranges[side]
            finite = np.isfinite(slack_unit)
            if finite.any():
                best = min(best, float((slack_unit[finite] / closing[finite]).min()))
            slack_base = (view.base_dist[side] - view.ranges[side]) / view.speeds[side]
            best = min(best, float(slack_base.min()))
    if not math.isfinite(best):
        return 10 ** 9
    return max(0, int(best) - 1)


def _march_tick(state: MicroState, views: list[_LaneView | None], steps: int) -> None:
    """Advance `steps` move-only ticks; for steps == 1 applies stop-at-range clamping.

    Multi-step advances iterate the per-tick add so fast-forwarding stays
    bit-identical to naive ticking (the clamp provably never engages inside
    a safe march window)."""
    for lane, view in enumerate(views):
        if view is None:
            continue
        u = state.units[lane]
        for side, sign in ((0, 1.0), (1, -1.0)):
            if len(view.idx[side]) == 0:
                continue
            if steps == 1:
                limit = np.minimum(view.nearest_dist[side], view.base_dist[side]) - view.ranges[side]
                step = np.minimum(view.speeds[side], np.maximum(limit, 0.0))
                u.pos[view.idx[side]] += sign * step
            else:
                sub = u.pos[view.idx[side]]
                delta = sign * view.speeds[side]
                for _ in range(steps):
                    sub += delta
                u.pos[view.idx[side]] = sub
        np.clip(u.pos, 0.0, state.config.lane_length, out=u.pos)


def _combat_tick(state: MicroState, views: list[_LaneView | None], rngs: list[np.random.Generator],
                 mult_table: np.ndarray, damage_by_kind: np.ndarray) -> None:
    cfg = state.config
    lo, hi = 1.0 - cfg.damage_jitter, 1.0 + cfg.damage_jitter
    for lane, view in enumerate(views):
        if view is None:
            continue
        rng = rngs[lane]
        u = state.units[lane]
        pending = np.zeros(len(u))
        for side in (0, 1):
            attackers = view.hit_unit[side] | view.hit_base[side]
            n_attack = int(attackers.sum())
            if n_attack == 0:
                continue
            my_idx = view.idx[side][attackers]
            kinds = u.kind[my_idx]
            jitter = rng.uniform(lo, hi, n_attack) if cfg.damage_jitter > 0 else np.ones(n_attack)
            base_dmg = damage_by_kind[kinds] * jitter
            unit_mask = view.hit_unit[side][attackers]
            # unit-vs-unit damage carries the dominance multiplier
            if unit_mask.any():
                target_local = view.nearest_idx[side][attackers][unit_mask]
                target_idx = view.idx[1 - side][target_local]
                dmg = base_dmg[unit_mask] * mult_table[kinds[unit_mask], u.kind[target_idx]]
                np.add.at(pending, target_idx, dmg)
            base_mask = ~unit_mask
            if base_mask.any():
                enemy = 1 - side
                state.base_health[enemy, lane] -= float(base_dmg[base_mask].sum())
        if pending.any():
            u.hp -= pending
        # non-attackers move (stop-at-range)
        for side, sign in ((0, 1.0), (1, -1.0)):
            movers = ~(view.hit_unit[side] | view.hit_base[side])
            if not movers.any():
                continue
            limit = (np.minimum(view.nearest_dist[side], view.base_dist[side]) - view.ranges[side])[movers]
            step = np.minimum(view.speeds[side][movers], np.maximum(limit, 0.0))
            u.pos[view.idx[side][movers]] += sign * step
        alive = u.hp > 0
        if not alive.all():
            u.compact(alive)


def resolve_wave(
    state: MicroState,
    a1: PlayerAction,
    a2: PlayerAction,
    *,
    _skip_marching: bool = True,
) -> tuple[MicroState, GameOutcome | None]:
    """Apply both purchases, spawn, run the wave's combat, advance the wave.

    Returns the successor state and the game outcome if this wave ended it.
    The input state is not mutated.
    """
    if terminal_outcome(state) is not None:
        raise TerminalStateError("cannot resolve a wave in a terminal state")
    _check_legal(state, a1, PlayerId.P1)
    _check_legal(state, a2, PlayerId.P2)

    cfg = state.config
    s = state.copy()
    rngs = []
    for lane in (0, 1):
        rng = np.random.default_rng()
        rng.bit_generator.state = dict(state.rng_state[lane])
        rngs.append(rng)

    for player, action in ((0, a1), (1, a2)):
        s.currency[player] -= action_cost(action, cfg)
        s.pylons[player] += action.pylons_added
        if any(action.buildings_added):
            s.buildings[player, action.lane] += np.asarray(action.buildings_added, dtype=np.int64)

    _spawn_wave(s)

    range_by_kind = np.array([st.attack_range for st in cfg.unit_stats])
    speed_by_kind = np.array([st.move_speed for st in cfg.unit_stats])
    damage_by_kind = np.array([st.base_damage for st in cfg.unit_stats])
    mult_table = np.ones((3, 3))
    for attacker, beaten in BEATS.items():
        mult_table[attacker, beaten] = cfg.unit_stats[attacker].rps_multiplier
    max_enemy_speed = [0.0, 0.0]
    for side in (0, 1):
        kinds = np.concatenate([s.units[0].kind[s.units[0].owner == side],
                                s.units[1].kind[s.units[1].owner == side]])
        max_enemy_speed[side] = float(speed_by_kind[kinds].max()) if len(kinds) else 0.0

    ticks_left = cfg.ticks_per_wave
    while ticks_left > 0:
        views = [_lane_view(s.units[lane], cfg, range_by_kind, speed_by_kind) for lane in (0, 1)]
        anyone_attacks = any(
            v is not None and (v.hit_unit[0].any() or v.hit_unit[1].any()
                               or v.hit_base[0].any() or v.hit_base[1].any())
            for v in views
        )
        if anyone_attacks:
            _combat_tick(s, views, rngs, mult_table, damage_by_kind)
            ticks_left -= 1
            destroyed = _destruction_outcome(s.base_health)
            if destroyed is not None:
                np.clip(s.base_health, 0.0, None, out=s.base_health)
                s.rng_state = tuple(dict(r.bit_generator.state) for r in rngs)
                return s, destroyed
        else:
            steps = min(_safe_march_ticks(views, max_enemy_speed), ticks_left) if _skip_marching else 1
            steps = max(steps, 1)
            _march_tick(s, views, steps)
            ticks_left -= steps

    s.wave += 1
    for player in (0, 1):
        s.currency[player] += cfg.stipend(int(s.pylons[player]))
    s.rng_state = tuple(dict(r.bit_generator.state) for r in rngs)
    return s, terminal_outcome(s)
