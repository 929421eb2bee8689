import { describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { RankingLoop } from '../src/loop.js';
import { MockServer } from './mockServer.js';

function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}

function setup(pollsBeforeReady = 1) {
  const server = new MockServer();
  server.pollsBeforeReady = pollsBeforeReady;
  const api = new ApiClient('', server.fetch);
  const loop = new RankingLoop(api, lcg(11));
  return { server, api, loop };
}

describe('RankingLoop', () => {
  it('presents candidates in a randomized order over real ids only', async () => {
    const { loop } = setup();
    const view = await loop.openAndPresent('alpha', 's1', { n_candidates: 3 });
    const ids = view.round.candidates.map((c) => c.id);
    expect([...view.order].sort()).toEqual([...ids].sort());
  });

  it('blocks invalid rankings client-side and accepts valid ones', async () => {
    const { server, loop } = setup();
    const view = await loop.openAndPresent('alpha', 's1', { n_candidates: 3 });
    const partial = await loop.submitRanking(view, view.order.slice(0, 2));
    expect(partial).toMatchObject({ accepted: false });
    expect(server.rounds.get(view.round.id)!.records).toHaveLength(0);

    const ok = await loop.submitRanking(view, view.order);
    expect(ok).toEqual({ accepted: true });
    expect(server.rounds.get(view.round.id)!.records).toHaveLength(1);

    const again = await loop.submitRanking(view, view.order);
    expect(again).toMatchObject({ accepted: false });
    expect(server.rounds.get(view.round.id)!.records).toHaveLength(1);
  });

  it('surfaces server-side circular rejections', async () => {
    const { loop } = setup();
    const view = await loop.openAndPresent('alpha', 's1', { n_candidates: 3 });
    const [a, b, c] = view.round.candidates.map((x) => x.id);
    // bypass the client-side session check to prove the 422 is surfaced
    expect(await loop.submitPair(view, a, b)).toEqual({ accepted: true });
    const viewClone = { ...view, session: new (view.session.constructor as any)(view.round.id, [a, b, c], 's1') };
    expect(await loop.submitPair(viewClone, b, a)).toEqual({
      accepted: false,
      reason: 'circular',
    });
  });

  it('runs the full loop: rank, relearn, regenerate, land on a new round', async () => {
    const { server, loop } = setup();
    const first = await loop.openAndPresent('alpha', 'judge', { n_candidates: 3 });

    // three subjects submit; one tries a deliberately circular pairwise set
    for (const subject of ['s1', 's2']) {
      const view = loop.present(first.round, subject);
      expect(await loop.submitRanking(view, view.order)).toEqual({ accepted: true });
    }
    const cyc = loop.present(first.round, 's3');
    const [a, b, c] = cyc.round.candidates.map((x) => x.id);
    expect(await loop.submitPair(cyc, a, b)).toEqual({ accepted: true });
    expect(await loop.submitPair(cyc, b, c)).toEqual({ accepted: true });
    expect(await loop.submitPair(cyc, c, a)).toEqual({ accepted: false, reason: 'circular' });

    const out = await loop.relearnAndRegenerate([first.round.id], 'alpha', 'judge');
    expect(out.learn.weights_id).toBe('wts-1');
    expect(out.learn.closed_rounds).toEqual([first.round.id]);
    expect(server.rounds.get(first.round.id)!.status).toBe('closed');

    // closed round refuses further submissions
    const late = loop.present(first.round, 'late');
    expect(await loop.submitRanking(late, late.order)).toMatchObject({
      accepted: false,
      reason: 'round closed',
    });

    // the new round is seeded with the learned weights and its renders resolve
    expect(out.newRound.status).toBe('open');
    expect(out.newRound.weights_id).toBe('wts-1');
    for (const cand of out.newRound.candidates) {
      const resp = await server.fetch(cand.render_url);
      expect(resp.status).toBe(200);
      expect(resp.headers.get('Content-Type')).toBe('image/png');
    }
  });

  it('refuses to relearn with no selected rounds', async () => {
    const { loop } = setup();
    await expect(loop.relearnAndRegenerate([], 'alpha', 's1')).rejects.toThrow(/at least one/);
  });

  it('propagates learn rejection when rounds hold no preferences', async () => {
    const { loop } = setup();
    const view = await loop.openAndPresent('alpha', 's1', { n_candidates: 3 });
    await expect(loop.relearnAndRegenerate([view.round.id], 'alpha', 's1')).rejects.toThrow(
      /no preferences/,
    );
  });
});
