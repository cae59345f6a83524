import pytest

from tugofwar.config import (
    ConfigError,
    DEFAULT_CONFIG,
    GameConfig,
    UnitType,
    config_from_dict,
    config_from_mapping,
    config_hash,
    config_to_dict,
    load_config,
    resolve_config,
)


def test_default_config_valid():
    DEFAULT_CONFIG.validate()


def test_paper_fixed_constants_rejected():
    with pytest.raises(ConfigError):
        GameConfig(max_pylons=4).validate()
    with pytest.raises(ConfigError):
        GameConfig(max_waves=39).validate()


def test_jitter_bounds():
    with pytest.raises(ConfigError):
        GameConfig(damage_jitter=1.0).validate()
    GameConfig(damage_jitter=0.0).validate()


def test_load_config_file(tmp_path):
    path = tmp_path / "game.cfg"
    path.write_text(
        """
        # economy tweaks
        start_currency = 250
        marine.cost = 60
        marine.hp = 120
        damage_jitter = 0.1
        """
    )
    cfg = load_config(path)
    assert cfg.start_currency == 250
    assert cfg.building_costs[UnitType.MARINE] == 60
    assert cfg.unit_stats[UnitType.MARINE].hp == 120
    assert cfg.damage_jitter == 0.1
    # untouched fields keep defaults
    assert cfg.pylon_cost == DEFAULT_CONFIG.pylon_cost


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("start_gold = 100\n")
    with pytest.raises(ConfigError, match="unknown config key"):
        load_config(path)
    with pytest.raises(ConfigError):
        config_from_mapping({"marine.speed": "1"})


def test_duplicate_and_malformed_lines(tmp_path):
    path = tmp_path / "dup.cfg"
    path.write_text("start_currency = 100\nstart_currency = 200\n")
    with pytest.raises(ConfigError, match="duplicate"):
        load_config(path)
    path.write_text("just some words\n")
    with pytest.raises(ConfigError, match="expected"):
        load_config(path)


def test_env_var_resolution(tmp_path, monkeypatch):
    path = tmp_path / "env.cfg"
    path.write_text("base_stipend = 123\n")
    monkeypatch.setenv("TOW_CONFIG", str(path))
    assert resolve_config(None).base_stipend == 123
    monkeypatch.delenv("TOW_CONFIG")
    assert resolve_config(None) == DEFAULT_CONFIG


def test_dict_round_trip_and_hash():
    cfg = config_from_mapping({"start_currency": "300"})
    assert config_from_dict(config_to_dict(cfg)) == cfg
    assert config_hash(cfg) != config_hash(DEFAULT_CONFIG)
    assert config_hash(DEFAULT_CONFIG) == config_hash(GameConfig())


def test_pass_through_guard():
    with pytest.raises(ConfigError, match="walk through"):
        config_from_mapping({"marine.move_speed": "0.5"})
