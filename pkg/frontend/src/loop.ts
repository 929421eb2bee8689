/** The interactive loop: open a round, collect preferences, relearn the
 *  weights from selected rounds, regenerate, and land on a fresh round. */

import { ApiClient, ApiError, LearnResult, RoundView } from './api.js';
import { RoundSession, shuffle, Rng } from './ranking.js';

export interface PresentedRound {
  round: RoundView;
  /** Candidate ids in randomized presentation order. */
  order: string[];
  session: RoundSession;
}

export interface RelearnOutcome {
  learn: LearnResult;
  newRound: RoundView;
}

export type SubmitOutcome =
  | { accepted: true }
  | { accepted: false; reason: string };

export class RankingLoop {
  private readonly api: ApiClient;
  private readonly rng: Rng;

  constructor(api: ApiClient, rng: Rng = Math.random) {
    this.api = api;
    this.rng = rng;
  }

  /** Open a round, wait until its candidates are generated, and present the
   *  cards in a fresh random order. */
  async openAndPresent(
    dataset: string,
    subject: string,
    params: Partial<Parameters<ApiClient['openRound']>[0]> = {},
  ): Promise<PresentedRound> {
    const opened = await this.api.openRound({ dataset, ...params });
    const round = await this.api.waitForRound(opened.id);
    if (round.status === 'failed') {
      throw new Error(round.error ?? 'round generation failed');
    }
    return this.present(round, subject);
  }

  /** Re-randomize presentation order for an already-loaded round. */
  present(round: RoundView, subject: string): PresentedRound {
    const ids = round.candidates.map((c) => c.id);
    return {
      round,
      order: shuffle(ids, this.rng),
      session: new RoundSession(round.id, ids, subject),
    };
  }

  /** Validate client-side, then submit a full ranking. */
  async submitRanking(view: PresentedRound, ranking: string[]): Promise<SubmitOutcome> {
    const check = view.session.checkRanking(ranking);
    if (!check.ok) return { accepted: false, reason: check.reason ?? 'invalid ranking' };
    try {
      await this.api.submitRanking(view.round.id, view.session.subject, ranking);
    } catch (err) {
      return { accepted: false, reason: describeRejection(err) };
    }
    view.session.markRankingSubmitted();
    return { accepted: true };
  }

  /** Validate client-side (including cycle detection), then submit a pick. */
  async submitPair(view: PresentedRound, winner: string, loser: string): Promise<SubmitOutcome> {
    const check = view.session.checkPair(winner, loser);
    if (!check.ok) return { accepted: false, reason: check.reason ?? 'invalid pick' };
    try {
      await this.api.submitPair(view.round.id, view.session.subject, winner, loser);
    } catch (err) {
      return { accepted: false, reason: describeRejection(err) };
    }
    view.session.markPairSubmitted(winner, loser);
    return { accepted: true };
  }

  /** Learn new weights from the selected rounds, regenerate, and open a new
   *  round seeded with the learned weights. */
  async relearnAndRegenerate(
    roundIds: string[],
    dataset: string,
    subject: string,
    params: { seed?: number; grid?: number; iters?: number; canvas_w?: number; canvas_h?: number; render_scale?: number } = {},
  ): Promise<RelearnOutcome> {
    if (roundIds.length === 0) {
      throw new Error('select at least one round with preferences');
    }
    const learn = await this.api.learn({ rounds: roundIds });
    const job = await this.api.startGeneration({
      dataset,
      weights_id: learn.weights_id,
      ...params,
    });
    const done = await this.api.waitForJob(job.id);
    if (done.status !== 'done' || done.result === null) {
      throw new Error(done.error ?? 'generation failed');
    }
    const presented = await this.openAndPresent(dataset, subject, {
      weights_id: learn.weights_id,
      ...params,
    });
    return { learn, newRound: presented.round };
  }
}

function describeRejection(err: unknown): string {
  if (err instanceof ApiError) {
    if (err.isCircular) return 'circular';
    if (err.status === 409) return 'round closed';
    return err.message;
  }
  return err instanceof Error ? err.message : String(err);
}
