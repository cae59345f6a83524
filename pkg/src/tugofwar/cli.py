"""Command-line driver: train, play, lint, interest, serve, export.

Every command accepts --config (falling back to $TOW_CONFIG, then built-in
defaults), --seed and --library.  Report-producing commands write CSV
tables plus PNG charts next to the machine-readable JSON.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .config import GameConfig, resolve_config
from .figures import (
    save_interest_curves,
    save_root_table_chart,
    save_severity_histograms,
    save_training_curves,
)
from .library import ReplayLibrary, write_json_atomic
from .lint import DETECTORS, LintThresholds, RULE_BASED_DETECTORS, scan_library
from .models import agent_value
from .replay import generate_replay, interest_scores, replay_to_doc
from .search import SearchParams
from .training import (
    FitConfig,
    PoolMember,
    TrainConfig,
    collect_transition_dataset,
    fit_transition_model,
    run_tournament,
    save_dataset,
)

_DETECTOR_ALIASES = {
    "health": "health_increase",
    "lane": "lane_independence",
    "units": "infeasible_units",
    "feasibility": "infeasible_units",
    "terminal": "missing_terminal",
    "buildings": "building_decrease",
    "eval": "eval_inconsistency",
}


class CliError(RuntimeError):
    pass


def _branch_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated counts, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tow",
        description="Lane-push strategy game with a tree-search agent and flaw-finding tools",
    )
    parser.add_argument("--config", help="game config file (or set $TOW_CONFIG)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--library", default="tow-library", help="replay library directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run tournament self-play and fit the transition model")
    p.add_argument("--generations", type=int, default=1)
    p.add_argument("--games", type=int, default=400, help="training game budget per generation")
    p.add_argument("--steps", type=int, default=20_000, help="decision budget per generation")
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--transition-games", type=int, default=400,
                   help="extra games for the transition dataset")
    p.add_argument("--epochs", type=int, default=15, help="transition-model fit epochs")

    p = sub.add_parser("play", help="generate replays with an explanation tree per decision")
    p.add_argument("count", type=int)
    p.add_argument("--vs", choices=("pool", "random", "self"), default="random")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--friendly", type=_branch_list, default=(20, 5))
    p.add_argument("--enemy", type=_branch_list, default=(10, 3))
    p.add_argument("--guard-terminals", choices=("on", "off"), default="on")
    p.add_argument("--prefix", default="g", help="game id prefix")

    p = sub.add_parser("lint", help="run flaw detectors over the library")
    p.add_argument("--detectors", default=",".join(RULE_BASED_DETECTORS),
                   help="comma-separated detector names (aliases: health, lane, units, terminal, buildings, eval)")
    p.add_argument("--game", help="restrict to one game id")
    p.add_argument("--out", help="report output directory (default <library>/reports)")

    p = sub.add_parser("interest", help="rank decision points worth inspecting")
    p.add_argument("--game", help="restrict to one game id")
    p.add_argument("--out", help="report output directory (default <library>/reports)")
    p.add_argument("--top", type=int, default=20, help="rows to print")

    p = sub.add_parser("serve", help="serve the read-only HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)

    p = sub.add_parser("export", help="dump documented-format files for a game")
    p.add_argument("--game", help="game id (default: every game)")
    p.add_argument("--out", required=True)
    return parser


def _resolve_detectors(text: str) -> tuple[str, ...]:
    names = []
    for raw in text.split(","):
        name = raw.strip()
        if not name:
            continue
        name = _DETECTOR_ALIASES.get(name, name)
        if name not in DETECTORS:
            raise CliError(f"unknown detector {raw.strip()!r}; known: {', '.join(DETECTORS)}")
        names.append(name)
    return tuple(dict.fromkeys(names))


def _load_library_replays(library: ReplayLibrary, game_id: str | None):
    entries = library.list_games()
    if game_id is not None:
        entries = [e for e in entries if e.game_id == game_id]
        if not entries:
            raise CliError(f"unknown game {game_id!r}")
    if not entries:
        raise CliError("library is empty; run the play command first")
    return [library.load_replay(e.game_id, with_trees=True) for e in entries]


# ---------------------------------------------------------------- commands

def cmd_train(args, config: GameConfig, library: ReplayLibrary) -> int:
    train_config = TrainConfig(
        max_games=args.games,
        max_steps=args.steps,
        hidden=args.hidden,
        min_buffer=200,
        update_every=2,
        target_sync=250,
        win_window=100,
        seed=args.seed,
    )
    print(f"training {args.generations} generation(s), {args.games} games each")
    pool, results = run_tournament(args.generations, train_config, config)
    library.save_config(config)
    library.save_pool(pool)
    log_rows = [row for result in results for row in result.log]
    log_path = library.save_training_log(log_rows)
    curves = save_training_curves(log_rows, library.models_dir / "training_curves.png")
    final = results[-1]
    print(f"final agent: best trailing win rate {final.best_win_rate:.2f} "
          f"(threshold reached: {final.reached_threshold})")

    dataset = collect_transition_dataset(
        pool, args.transition_games, seed=args.seed + 1, game_config=config,
        include_buffer=final.buffer,
    )
    save_dataset(dataset, library.models_dir / "transitions.jsonl")
    print(f"fitting transition model on {len(dataset)} transitions")
    fit = fit_transition_model(dataset, FitConfig(epochs=args.epochs, hidden=args.hidden,
                                                  seed=args.seed + 2))
    library.save_transition_model(fit.model)
    write_json_atomic(library.models_dir / "transition_fit.json",
                      {"holdout_mae": fit.holdout_mae, "history": fit.history})
    print(f"held-out MAE: base_health {fit.holdout_mae['base_health']:.4f}, "
          f"unit_grid {fit.holdout_mae['unit_grid']:.4f}")
    print(f"wrote {log_path} and {curves}")
    return 0


def cmd_play(args, config: GameConfig, library: ReplayLibrary) -> int:
    pool = library.load_pool()
    agent = pool.search_agent
    if agent.kind != "q":
        raise CliError("the pool's search agent is untrained; run train with >= 1 generation")
    transition = library.load_transition_model()
    params = SearchParams(depth=args.depth, friendly=args.friendly, enemy=args.enemy)
    rng = np.random.default_rng(args.seed)
    for i in range(args.count):
        game_seed = args.seed + i
        game_id = f"{args.prefix}{game_seed:08d}"
        if args.vs == "random":
            opponent = PoolMember(name="random", kind="random").policy(rng)
            opponent_name = "random"
        elif args.vs == "self":
            opponent = PoolMember(name="self", kind="q", q=agent.q).policy(rng)
            opponent_name = "self"
        else:
            member = pool.members[int(rng.integers(len(pool.members)))]
            opponent = member.policy(rng)
            opponent_name = f"pool:{member.name}"
        replay = generate_replay(
            agent.q, transition, opponent, params, config,
            seed=game_seed, game_id=game_id, opponent_name=opponent_name,
            guard_terminals=args.guard_terminals == "on",
        )
        library.save_replay(replay)
        result = "won" if replay.agent_won else "lost"
        print(f"{game_id}: {len(replay.decisions)} decisions vs {opponent_name}, agent {result}")
    return 0


def cmd_lint(args, config: GameConfig, library: ReplayLibrary) -> int:
    detectors = _resolve_detectors(args.detectors)
    replays = _load_library_replays(library, args.game)
    report = scan_library(replays, detectors=detectors, thresholds=LintThresholds())
    out_dir = Path(args.out) if args.out else library.root / "reports"
    out_dir.mkdir(parents=True, exist_ok=True)
    for replay in replays:
        per_game = {
            "format": report["format"],
            "version": report["version"],
            "detectors": report["detectors"],
            "game": report["per_game"][replay.game_id],
            "game_id": replay.game_id,
        }
        library.save_lint(replay.game_id, per_game)
    write_json_atomic(out_dir / "lint.json", report)
    library.save_aggregate_lint(report)

    findings_path = out_dir / "lint_findings.csv"
    with open(findings_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["game_id", "decision", "detector", "severity", "node_ids", "message"])
        for game in report["per_game"].values():
            for rep in game["reports"]:
                writer.writerow([rep["game_id"], rep["decision"], rep["detector"],
                                 f"{rep['severity']:.6f}",
                                 " ".join(str(n) for n in rep["node_ids"]), rep["message"]])
    figure_path = save_severity_histograms(report, out_dir / "lint_severity.png")

    total = sum(report["totals"].values())
    print(f"{total} finding(s) across {report['n_games']} game(s)")
    for name, count in report["totals"].items():
        print(f"  {name}: {count}")
    rise = report["health_rise_before_loss"]
    print(f"health rise at final decision before loss: {rise['n_with_rise']}/{rise['n_losing']} "
          f"losing games, {rise['n_severe']} severe (>10%) instance(s)")
    print(f"wrote {out_dir / 'lint.json'}, {findings_path} and {figure_path}")
    return 0


def cmd_interest(args, config: GameConfig, library: ReplayLibrary) -> int:
    replays = _load_library_replays(library, args.game)
    out_dir = Path(args.out) if args.out else library.root / "reports"
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for replay in replays:
        for score in interest_scores(replay):
            rows.append(
                {
                    "game_id": replay.game_id,
                    "decision": score.index,
                    "value_drop": score.value_drop,
                    "fluctuation": score.fluctuation,
                    "criticality": score.criticality,
                }
            )
        save_interest_curves(
            interest_scores(replay), out_dir / f"interest_{replay.game_id}.png", replay.game_id
        )
    csv_path = out_dir / "interest.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["game_id", "decision", "value_drop",
                                                "fluctuation", "criticality"])
        writer.writeheader()
        writer.writerows(rows)

    ranked = sorted(rows, key=lambda r: -(r["value_drop"] if r["value_drop"] is not None else -np.inf))
    print(f"{'game':<12} {'decision':>8} {'drop':>8} {'fluct':>8} {'crit':>8}")
    for row in ranked[: args.top]:
        drop = "-" if row["value_drop"] is None else f"{row['value_drop']:+.3f}"
        print(f"{row['game_id']:<12} {row['decision']:>8} {drop:>8} "
              f"{row['fluctuation']:>8.3f} {row['criticality']:>8.3f}")
    print(f"wrote {csv_path} and per-game interest PNGs in {out_dir}")
    return 0


def cmd_serve(args, config: GameConfig, library: ReplayLibrary) -> int:
    from .service import serve

    print(f"serving {library.root} on http://{args.host}:{args.port}")
    serve(library, host=args.host, port=args.port)
    return 0


def cmd_export(args, config: GameConfig, library: ReplayLibrary) -> int:
    out_root = Path(args.out)
    replays = _load_library_replays(library, args.game)
    for replay in replays:
        game_dir = out_root / replay.game_id
        (game_dir / "trees").mkdir(parents=True, exist_ok=True)
        write_json_atomic(game_dir / "replay.json", replay_to_doc(replay, include_trees=False))
        for decision in replay.decisions:
            write_json_atomic(game_dir / "trees" / f"decision_{decision.index:04d}.json",
                              decision.tree_doc)
            save_root_table_chart(
                decision.root_table,
                game_dir / f"root_table_{decision.index:04d}.png",
                title=f"{replay.game_id} decision {decision.index}",
            )
        with open(game_dir / "decisions.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["decision", "wave", "best_value", "n_root_actions"])
            for d in replay.decisions:
                writer.writerow([d.index, d.wave, f"{d.best_value:.6f}", len(d.root_table)])
        try:
            write_json_atomic(game_dir / "lint.json", library.load_lint(replay.game_id))
        except KeyError:
            pass
        print(f"exported {replay.game_id} -> {game_dir}")
    return 0


_COMMANDS = {
    "train": cmd_train,
    "play": cmd_play,
    "lint": cmd_lint,
    "interest": cmd_interest,
    "serve": cmd_serve,
    "export": cmd_export,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args.config)
        library = ReplayLibrary(args.library)
        return _COMMANDS[args.command](args, config, library)
    except KeyboardInterrupt:
        raise
    except Exception as exc:  # noqa: BLE001 - single exit point with message
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
