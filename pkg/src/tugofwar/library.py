"""On-disk replay library: replays, trees, lint reports, model checkpoints.

Layout (one directory per game, content-addressed config hash per replay):

    <root>/
      index.json                      # atomic write-then-rename
      models/
        pool.json                     # pool manifest
        gen1.net, ...                 # Q checkpoints (neural format)
        transition.net
      games/<game_id>/
        replay.json                   # decisions without trees
        trees/decision_0000.json      # one explanation tree per decision
        lint.json                     # written by the lint command

Writers own a game directory exclusively; the index update is atomic so
concurrent readers always see a consistent snapshot.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import GameConfig, config_from_dict, config_to_dict
from .models import QFunction, TransitionModel
from .neural import load_params_file, save_params_file
from .replay import Replay, replay_from_doc, replay_to_doc
from .training import PoolMember, ReplayBuffer, TournamentPool

INDEX_VERSION = 1


class LibraryError(RuntimeError):
    pass


def write_json_atomic(path: Path, doc) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(doc, sort_keys=True, indent=1))
    os.replace(tmp, path)


def read_json(path: Path):
    return json.loads(path.read_text())


@dataclass
class GameEntry:
    game_id: str
    config_hash: str
    opponent: str
    agent_won: bool
    n_decisions: int


class ReplayLibrary:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    # ------------------------------------------------------------ index

    @property
    def index_path(self) -> Path:
        return self.root / "index.json"

    def _read_index(self) -> dict:
        if not self.index_path.exists():
            return {"version": INDEX_VERSION, "games": {}}
        doc = read_json(self.index_path)
        if doc.get("version") != INDEX_VERSION:
            raise LibraryError(f"unsupported index version {doc.get('version')}")
        return doc

    def list_games(self) -> list[GameEntry]:
        index = self._read_index()
        return [
            GameEntry(
                game_id=gid,
                config_hash=meta["config_hash"],
                opponent=meta["opponent"],
                agent_won=meta["agent_won"],
                n_decisions=meta["n_decisions"],
            )
            for gid, meta in sorted(index["games"].items())
        ]

    def game_dir(self, game_id: str) -> Path:
        return self.root / "games" / game_id

    # ------------------------------------------------------------ replays

    def save_replay(self, replay: Replay) -> None:
        game_dir = self.game_dir(replay.game_id)
        trees_dir = game_dir / "trees"
        trees_dir.mkdir(parents=True, exist_ok=True)
        for decision in replay.decisions:
            if decision.tree_doc is None:
                raise LibraryError(f"decision {decision.index} has no tree to store")
            write_json_atomic(trees_dir / f"decision_{decision.index:04d}.json", decision.tree_doc)
        write_json_atomic(game_dir / "replay.json", replay_to_doc(replay, include_trees=False))
        index = self._read_index()
        index["games"][replay.game_id] = {
            "config_hash": replay.config_hash,
            "opponent": replay.opponent,
            "agent_won": replay.agent_won,
            "n_decisions": len(replay.decisions),
        }
        self.root.mkdir(parents=True, exist_ok=True)
        write_json_atomic(self.index_path, index)

    def load_replay(self, game_id: str, with_trees: bool = False) -> Replay:
        path = self.game_dir(game_id) / "replay.json"
        if not path.exists():
            raise KeyError(game_id)
        replay = replay_from_doc(read_json(path))
        if with_trees:
            for decision in replay.decisions:
                decision.tree_doc = self.load_tree(game_id, decision.index)
        return replay

    def load_tree(self, game_id: str, decision: int) -> dict:
        path = self.game_dir(game_id) / "trees" / f"decision_{decision:04d}.json"
        if not path.exists():
            raise KeyError(f"{game_id}/decision {decision}")
        return read_json(path)

    # ------------------------------------------------------------ lint reports

    def save_lint(self, game_id: str, report: dict) -> None:
        write_json_atomic(self.game_dir(game_id) / "lint.json", report)

    def load_lint(self, game_id: str) -> dict:
        path = self.game_dir(game_id) / "lint.json"
        if not path.exists():
            raise KeyError(f"no lint report for {game_id}")
        return read_json(path)

    def save_aggregate_lint(self, report: dict) -> None:
        (self.root / "reports").mkdir(parents=True, exist_ok=True)
        write_json_atomic(self.root / "reports" / "lint.json", report)

    # ------------------------------------------------------------ config

    def save_config(self, config: GameConfig) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        write_json_atomic(self.root / "config.json", config_to_dict(config))

    def load_config(self) -> GameConfig:
        path = self.root / "config.json"
        if not path.exists():
            raise LibraryError("library has no stored config")
        return config_from_dict(read_json(path))

    # ------------------------------------------------------------ models

    @property
    def models_dir(self) -> Path:
        return self.root / "models"

    def save_pool(self, pool: TournamentPool) -> None:
        self.models_dir.mkdir(parents=True, exist_ok=True)
        manifest = []
        for member in pool.members:
            entry = {"name": member.name, "kind": member.kind,
                     "games": member.games, "wins": member.wins}
            if member.kind == "q":
                save_params_file(member.q.params, self.models_dir / f"{member.name}.net")
                entry["file"] = f"{member.name}.net"
            manifest.append(entry)
        write_json_atomic(self.models_dir / "pool.json", {"members": manifest})

    def load_pool(self) -> TournamentPool:
        path = self.models_dir / "pool.json"
        if not path.exists():
            raise LibraryError("library has no trained pool; run the train command first")
        manifest = read_json(path)
        members = []
        for entry in manifest["members"]:
            member = PoolMember(name=entry["name"], kind=entry["kind"],
                                games=entry["games"], wins=entry["wins"])
            if entry["kind"] == "q":
                member.q = QFunction(load_params_file(self.models_dir / entry["file"]))
            members.append(member)
        return TournamentPool(members=members)

    def save_transition_model(self, model: TransitionModel) -> None:
        self.models_dir.mkdir(parents=True, exist_ok=True)
        save_params_file(model.params, self.models_dir / "transition.net")

    def load_transition_model(self) -> TransitionModel:
        path = self.models_dir / "transition.net"
        if not path.exists():
            raise LibraryError("library has no transition model; run the train command first")
        return TransitionModel(load_params_file(path))

    def save_training_log(self, rows: list[dict], name: str = "training_log.csv") -> Path:
        import csv

        self.models_dir.mkdir(parents=True, exist_ok=True)
        path = self.models_dir / name
        fields = ["games", "steps", "updates", "loss", "win_rate", "epsilon"]
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for row in rows:
                writer.writerow({k: row.get(k) for k in fields})
        return path
