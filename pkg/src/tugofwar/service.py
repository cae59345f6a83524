"""Read-only HTTP API over a replay library.

Responses are pure functions of the on-disk library (immutable per library
version, safely cacheable).  Endpoints:

    GET /games                                -> library index
    GET /games/{id}                           -> replay (tables, no trees)
    GET /games/{id}/decisions/{n}/tree        -> explanation-tree document
    GET /games/{id}/decisions/{n}/root_table  -> sorted root-action table
    GET /games/{id}/interest                  -> per-decision interest scores
    GET /games/{id}/flaws                     -> stored lint report
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .library import ReplayLibrary
from .replay import interest_scores, replay_to_doc


def create_app(library: ReplayLibrary) -> FastAPI:
    app = FastAPI(title="tug-of-war replay explorer", version="1")

    def load_replay_or_404(game_id: str):
        try:
            return library.load_replay(game_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown game {game_id!r}")

    @app.get("/games")
    def list_games():
        return {
            "games": [
                {
                    "game_id": e.game_id,
                    "config_hash": e.config_hash,
                    "opponent": e.opponent,
                    "agent_won": e.agent_won,
                    "n_decisions": e.n_decisions,
                }
                for e in library.list_games()
            ]
        }

    @app.get("/games/{game_id}")
    def get_game(game_id: str):
        return replay_to_doc(load_replay_or_404(game_id), include_trees=False)

    @app.get("/games/{game_id}/decisions/{decision:int}/tree")
    def get_decision_tree(game_id: str, decision: int):
        load_replay_or_404(game_id)
        try:
            return library.load_tree(game_id, decision)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no decision {decision} in {game_id!r}")

    @app.get("/games/{game_id}/decisions/{decision:int}/root_table")
    def get_root_table(game_id: str, decision: int):
        replay = load_replay_or_404(game_id)
        if not 0 <= decision < len(replay.decisions):
            raise HTTPException(status_code=404, detail=f"no decision {decision} in {game_id!r}")
        doc = replay_to_doc(replay, include_trees=False)
        return {"game_id": game_id, "decision": decision,
                "root_table": doc["decisions"][decision]["root_table"]}

    @app.get("/games/{game_id}/interest")
    def get_interest(game_id: str):
        replay = load_replay_or_404(game_id)
        return {
            "game_id": game_id,
            "scores": [
                {
                    "index": s.index,
                    "value_drop": s.value_drop,
                    "fluctuation": s.fluctuation,
                    "criticality": s.criticality,
                }
                for s in interest_scores(replay)
            ],
        }

    @app.get("/games/{game_id}/flaws")
    def get_flaws(game_id: str):
        load_replay_or_404(game_id)
        try:
            return library.load_lint(game_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no lint report for {game_id!r}; run lint")

    return app


def serve(library: ReplayLibrary, host: str = "127.0.0.1", port: int = 8321) -> None:
    import uvicorn

    uvicorn.run(create_app(library), host=host, port=port, log_level="warning")
