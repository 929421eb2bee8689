/** Client-side ranking state: presentation shuffling, validation, and
 *  per-subject cycle detection mirroring the server's checks so obviously
 *  bad submissions never reach the network. */

export type Rng = () => number;

/** Unbiased Fisher-Yates shuffle; returns a new array. */
export function shuffle<T>(items: readonly T[], rng: Rng = Math.random): T[] {
  const out = items.slice();
  for (let i = out.length - 1; i > 0; i--) {
    const j = Math.floor(rng() * (i + 1));
    [out[i], out[j]] = [out[j], out[i]];
  }
  return out;
}

/** Anonymous subject token: no accounts, just a local random identifier. */
export function newSubjectToken(rng: Rng = Math.random): string {
  const alphabet = 'abcdefghijklmnopqrstuvwxyz0123456789';
  let token = 'subj-';
  for (let i = 0; i < 12; i++) {
    token += alphabet[Math.floor(rng() * alphabet.length)];
  }
  return token;
}

export interface ValidationResult {
  ok: boolean;
  reason?: string;
}

/** A ranking must be a strict total order over exactly the candidate ids. */
export function validateRanking(ranking: readonly string[], candidateIds: readonly string[]): ValidationResult {
  if (ranking.length !== candidateIds.length) {
    return { ok: false, reason: 'partial order: every candidate must be placed' };
  }
  const seen = new Set(ranking);
  if (seen.size !== ranking.length) {
    return { ok: false, reason: 'duplicate candidate in ranking' };
  }
  for (const id of candidateIds) {
    if (!seen.has(id)) return { ok: false, reason: `missing candidate ${id}` };
  }
  return { ok: true };
}

/** Detect a directed cycle in winner->loser edges (depth-first search). */
export function hasCycle(edges: ReadonlyArray<readonly [string, string]>): boolean {
  const graph = new Map<string, string[]>();
  for (const [winner, loser] of edges) {
    const out = graph.get(winner);
    if (out === undefined) graph.set(winner, [loser]);
    else out.push(loser);
  }
  const state = new Map<string, 1 | 2>(); // 1 = on stack, 2 = done
  const visit = (node: string): boolean => {
    state.set(node, 1);
    for (const next of graph.get(node) ?? []) {
      const s = state.get(next);
      if (s === 1) return true;
      if (s === undefined && visit(next)) return true;
    }
    state.set(node, 2);
    return false;
  };
  for (const node of graph.keys()) {
    if (!state.has(node) && visit(node)) return true;
  }
  return false;
}

/** Tracks one subject's activity within a round. */
export class RoundSession {
  readonly roundId: string;
  readonly candidateIds: readonly string[];
  readonly subject: string;
  private rankingSubmitted = false;
  private readonly pairEdges: Array<readonly [string, string]> = [];

  constructor(roundId: string, candidateIds: readonly string[], subject: string) {
    this.roundId = roundId;
    this.candidateIds = candidateIds;
    this.subject = subject;
  }

  get hasSubmittedRanking(): boolean {
    return this.rankingSubmitted;
  }

  /** Validate a full ranking; a subject may submit at most one per round. */
  checkRanking(ranking: readonly string[]): ValidationResult {
    if (this.rankingSubmitted) {
      return { ok: false, reason: 'already submitted for this round' };
    }
    return validateRanking(ranking, this.candidateIds);
  }

  markRankingSubmitted(): void {
    this.rankingSubmitted = true;
  }

  /** Validate a pairwise pick, including that it closes no preference cycle
   *  with this subject's earlier picks. */
  checkPair(winner: string, loser: string): ValidationResult {
    if (winner === loser) return { ok: false, reason: 'pick two distinct candidates' };
    if (!this.candidateIds.includes(winner) || !this.candidateIds.includes(loser)) {
      return { ok: false, reason: 'unknown candidate' };
    }
    if (hasCycle([...this.pairEdges, [winner, loser]])) {
      return { ok: false, reason: 'circular' };
    }
    return { ok: true };
  }

  markPairSubmitted(winner: string, loser: string): void {
    this.pairEdges.push([winner, loser]);
  }
}
