/** Thin fetch client for the replay-library HTTP API. */

import type {
  GameEntry,
  GameLintDoc,
  InterestScoreDoc,
  ReplayDoc,
  RootTableEntry,
  TreeDoc,
} from "./types.js";

export class ApiClient {
  constructor(private readonly base: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(`${this.base}${path}`);
    if (!response.ok) {
      throw new Error(`${path}: ${response.status} ${response.statusText}`);
    }
    return (await response.json()) as T;
  }

  listGames(): Promise<{ games: GameEntry[] }> {
    return this.get("/games");
  }

  getGame(gameId: string): Promise<ReplayDoc> {
    return this.get(`/games/${encodeURIComponent(gameId)}`);
  }

  getDecisionTree(gameId: string, decision: number): Promise<TreeDoc> {
    return this.get(`/games/${encodeURIComponent(gameId)}/decisions/${decision}/tree`);
  }

  getRootTable(gameId: string, decision: number): Promise<{ root_table: RootTableEntry[] }> {
    return this.get(`/games/${encodeURIComponent(gameId)}/decisions/${decision}/root_table`);
  }

  getInterest(gameId: string): Promise<{ scores: InterestScoreDoc[] }> {
    return this.get(`/games/${encodeURIComponent(gameId)}/interest`);
  }

  async getFlaws(gameId: string): Promise<GameLintDoc | null> {
    try {
      return await this.get(`/games/${encodeURIComponent(gameId)}/flaws`);
    } catch {
      return null; // lint not run yet; overlays simply stay off
    }
  }
}
