"""Game configuration: unit roster, economy constants, and the config-file loader.

The config file format is flat ``key = value`` lines (``#`` comments allowed).
Unit stats use dotted keys, e.g. ``marine.hp = 100``.  Unknown keys are
rejected.  See docs/config.md for the full schema.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, replace
from enum import IntEnum
from pathlib import Path

CONFIG_ENV_VAR = "TOW_CONFIG"

# Fixed by the game rules; configs proposing other values are rejected.
MAX_WAVES = 40
MAX_PYLONS = 3


class ConfigError(ValueError):
    """Invalid game configuration or config file."""


class UnitType(IntEnum):
    MARINE = 0
    BANELING = 1
    IMMORTAL = 2


class Lane(IntEnum):
    TOP = 0
    BOTTOM = 1


class PlayerId(IntEnum):
    P1 = 0
    P2 = 1

    @property
    def opponent(self) -> "PlayerId":
        return PlayerId(1 - self)


# Dominance cycle: each type deals the multiplier against the type it beats.
BEATS = {
    UnitType.MARINE: UnitType.IMMORTAL,
    UnitType.IMMORTAL: UnitType.BANELING,
    UnitType.BANELING: UnitType.MARINE,
}


@dataclass(frozen=True)
class UnitStats:
    hp: float
    move_speed: float       # distance per tick
    attack_range: float     # distance
    base_damage: float      # hp per tick
    rps_multiplier: float   # applied against the beaten type

    def validate(self, name: str) -> None:
        for field_name in ("hp", "move_speed", "attack_range", "base_damage"):
            if getattr(self, field_name) <= 0:
                raise ConfigError(f"{name}.{field_name} must be > 0")
        if self.rps_multiplier < 1.0:
            raise ConfigError(f"{name}.rps_multiplier must be >= 1")


DEFAULT_UNIT_STATS = (
    UnitStats(hp=100.0, move_speed=0.045, attack_range=0.12, base_damage=10.0, rps_multiplier=2.0),
    UnitStats(hp=100.0, move_speed=0.055, attack_range=0.03, base_damage=13.0, rps_multiplier=2.0),
    UnitStats(hp=140.0, move_speed=0.035, attack_range=0.10, base_damage=12.0, rps_multiplier=2.0),
)


@dataclass(frozen=True)
class GameConfig:
    max_waves: int = MAX_WAVES
    ticks_per_wave: int = 30
    lane_length: float = 1.0
    base_health_max: float = 2000.0
    start_currency: int = 100
    base_stipend: int = 100
    pylon_stipend_bonus: int = 75
    max_pylons: int = MAX_PYLONS
    building_costs: tuple[int, int, int] = (50, 75, 200)
    pylon_cost: int = 150
    unit_stats: tuple[UnitStats, UnitStats, UnitStats] = DEFAULT_UNIT_STATS
    damage_jitter: float = 0.2

    def validate(self) -> None:
        if self.max_waves != MAX_WAVES:
            raise ConfigError(f"max_waves is fixed at {MAX_WAVES}")
        if self.max_pylons != MAX_PYLONS:
            raise ConfigError(f"max_pylons is fixed at {MAX_PYLONS}")
        if self.ticks_per_wave <= 0:
            raise ConfigError("ticks_per_wave must be > 0")
        if self.lane_length <= 0:
            raise ConfigError("lane_length must be > 0")
        if self.base_health_max <= 0:
            raise ConfigError("base_health_max must be > 0")
        for name, value in (
            ("start_currency", self.start_currency),
            ("base_stipend", self.base_stipend),
            ("pylon_stipend_bonus", self.pylon_stipend_bonus),
            ("pylon_cost", self.pylon_cost),
        ):
            if value <= 0:
                raise ConfigError(f"{name} must be > 0")
        if len(self.building_costs) != 3 or any(c <= 0 for c in self.building_costs):
            raise ConfigError("building_costs must be 3 positive integers")
        if not 0.0 <= self.damage_jitter < 1.0:
            raise ConfigError("damage_jitter must be in [0, 1)")
        if len(self.unit_stats) != 3:
            raise ConfigError("unit_stats must cover the 3 unit types")
        for unit in UnitType:
            self.unit_stats[unit].validate(unit.name.lower())
        # No unit may overshoot past another's attack envelope in one tick.
        min_range = min(s.attack_range for s in self.unit_stats)
        for unit in UnitType:
            if self.unit_stats[unit].move_speed > 2.0 * min_range:
                raise ConfigError(
                    f"{unit.name.lower()}.move_speed exceeds 2x the smallest attack_range; "
                    "units could walk through each other"
                )

    def cost_of(self, unit: UnitType) -> int:
        return self.building_costs[unit]

    def stipend(self, pylons: int) -> int:
        return self.base_stipend + pylons * self.pylon_stipend_bonus


DEFAULT_CONFIG = GameConfig()

_INT_KEYS = {
    "max_waves", "ticks_per_wave", "start_currency", "base_stipend",
    "pylon_stipend_bonus", "max_pylons", "pylon_cost",
}
_FLOAT_KEYS = {"lane_length", "base_health_max", "damage_jitter"}
_UNIT_NAMES = {"marine": UnitType.MARINE, "baneling": UnitType.BANELING, "immortal": UnitType.IMMORTAL}
_UNIT_FIELDS = {"cost", "hp", "move_speed", "attack_range", "base_damage", "rps_multiplier"}


def config_from_mapping(values: dict[str, str]) -> GameConfig:
    """Build a validated GameConfig from flat string key/value pairs."""
    scalars: dict[str, int | float] = {}
    costs = list(DEFAULT_CONFIG.building_costs)
    stats = {u: dict(vars(DEFAULT_CONFIG.unit_stats[u])) for u in UnitType}

    for key, raw in values.items():
        try:
            if key in _INT_KEYS:
                scalars[key] = int(raw)
            elif key in _FLOAT_KEYS:
                scalars[key] = float(raw)
            elif "." in key:
                unit_name, field_name = key.split(".", 1)
                if unit_name not in _UNIT_NAMES or field_name not in _UNIT_FIELDS:
                    raise ConfigError(f"unknown config key: {key!r}")
                unit = _UNIT_NAMES[unit_name]
                if field_name == "cost":
                    costs[unit] = int(raw)
                else:
                    stats[unit][field_name] = float(raw)
            else:
                raise ConfigError(f"unknown config key: {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc

    config = replace(
        DEFAULT_CONFIG,
        building_costs=tuple(costs),
        unit_stats=tuple(UnitStats(**stats[u]) for u in UnitType),
        **scalars,
    )
    config.validate()
    return config


def load_config(path: str | Path) -> GameConfig:
    """Parse a ``key = value`` config file. Unknown keys are rejected."""
    values: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = raw.strip()
    return config_from_mapping(values)


def resolve_config(path: str | None) -> GameConfig:
    """Load from an explicit path, else $TOW_CONFIG, else defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if path is None:
        return DEFAULT_CONFIG
    return load_config(path)


def config_to_dict(config: GameConfig) -> dict:
    return {
        "max_waves": config.max_waves,
        "ticks_per_wave": config.ticks_per_wave,
        "lane_length": config.lane_length,
        "base_health_max": config.base_health_max,
        "start_currency": config.start_currency,
        "base_stipend": config.base_stipend,
        "pylon_stipend_bonus": config.pylon_stipend_bonus,
        "max_pylons": config.max_pylons,
        "pylon_cost": config.pylon_cost,
        "damage_jitter": config.damage_jitter,
        "units": {
            unit.name.lower(): {
                "cost": config.building_costs[unit],
                **vars(config.unit_stats[unit]),
            }
            for unit in UnitType
        },
    }


def config_from_dict(doc: dict) -> GameConfig:
    units = doc["units"]
    config = GameConfig(
        max_waves=doc["max_waves"],
        ticks_per_wave=doc["ticks_per_wave"],
        lane_length=doc["lane_length"],
        base_health_max=doc["base_health_max"],
        start_currency=doc["start_currency"],
        base_stipend=doc["base_stipend"],
        pylon_stipend_bonus=doc["pylon_stipend_bonus"],
        max_pylons=doc["max_pylons"],
        pylon_cost=doc["pylon_cost"],
        damage_jitter=doc["damage_jitter"],
        building_costs=tuple(units[u.name.lower()]["cost"] for u in UnitType),
        unit_stats=tuple(
            UnitStats(**{k: v for k, v in units[u.name.lower()].items() if k != "cost"})
            for u in UnitType
        ),
    )
    config.validate()
    return config


def config_hash(config: GameConfig) -> str:
    """Content hash identifying a config; stored with every replay."""
    canonical = json.dumps(config_to_dict(config), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]
