import { describe, expect, it } from 'vitest';

import { hasCycle, newSubjectToken, RoundSession, shuffle, validateRanking } from '../src/ranking.js';

/** Deterministic linear-congruential rng for reproducible tests. */
function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}

describe('shuffle', () => {
  it('returns a permutation and leaves the input untouched', () => {
    const input = ['a', 'b', 'c', 'd'];
    const out = shuffle(input, lcg(1));
    expect([...out].sort()).toEqual([...input].sort());
    expect(input).toEqual(['a', 'b', 'c', 'd']);
  });

  it('shows no positional bias across presentations (chi-square)', () => {
    // 300 presentations of 3 candidates: each (candidate, position) cell
    // expects 100; chi-square with 4 dof stays under the 0.1% quantile 18.47
    const rng = lcg(7);
    const ids = ['x', 'y', 'z'];
    const counts = new Map<string, number[]>(ids.map((id) => [id, [0, 0, 0]]));
    const n = 300;
    for (let t = 0; t < n; t++) {
      shuffle(ids, rng).forEach((id, pos) => {
        counts.get(id)![pos] += 1;
      });
    }
    const expected = n / ids.length;
    let chi2 = 0;
    for (const row of counts.values()) {
      for (const observed of row) chi2 += (observed - expected) ** 2 / expected;
    }
    expect(chi2).toBeLessThan(18.47);
  });
});

describe('newSubjectToken', () => {
  it('produces distinct anonymous tokens', () => {
    const rng = lcg(3);
    const a = newSubjectToken(rng);
    const b = newSubjectToken(rng);
    expect(a).toMatch(/^subj-[a-z0-9]{12}$/);
    expect(a).not.toEqual(b);
  });
});

describe('validateRanking', () => {
  const ids = ['a', 'b', 'c'];
  it('accepts a strict total order', () => {
    expect(validateRanking(['b', 'a', 'c'], ids).ok).toBe(true);
  });
  it('rejects partial orders', () => {
    expect(validateRanking(['b', 'a'], ids).ok).toBe(false);
  });
  it('rejects duplicates and unknown ids', () => {
    expect(validateRanking(['a', 'a', 'c'], ids).ok).toBe(false);
    expect(validateRanking(['a', 'b', 'z'], ids).ok).toBe(false);
  });
});

describe('hasCycle', () => {
  it('detects a 3-cycle', () => {
    expect(
      hasCycle([
        ['a', 'b'],
        ['b', 'c'],
        ['c', 'a'],
      ]),
    ).toBe(true);
  });
  it('accepts a consistent order', () => {
    expect(
      hasCycle([
        ['a', 'b'],
        ['b', 'c'],
        ['a', 'c'],
      ]),
    ).toBe(false);
  });
  it('detects a direct reversal', () => {
    expect(
      hasCycle([
        ['a', 'b'],
        ['b', 'a'],
      ]),
    ).toBe(true);
  });
});

describe('RoundSession', () => {
  it('allows at most one ranking per subject per round', () => {
    const session = new RoundSession('r1', ['a', 'b', 'c'], 's1');
    expect(session.checkRanking(['a', 'b', 'c']).ok).toBe(true);
    session.markRankingSubmitted();
    const second = session.checkRanking(['c', 'b', 'a']);
    expect(second.ok).toBe(false);
    expect(second.reason).toContain('already submitted');
  });

  it('flags cycles across the subject own picks as circular', () => {
    const session = new RoundSession('r1', ['a', 'b', 'c'], 's1');
    expect(session.checkPair('a', 'b').ok).toBe(true);
    session.markPairSubmitted('a', 'b');
    expect(session.checkPair('b', 'c').ok).toBe(true);
    session.markPairSubmitted('b', 'c');
    const bad = session.checkPair('c', 'a');
    expect(bad.ok).toBe(false);
    expect(bad.reason).toBe('circular');
  });

  it('rejects self-pairs and unknown candidates', () => {
    const session = new RoundSession('r1', ['a', 'b'], 's1');
    expect(session.checkPair('a', 'a').ok).toBe(false);
    expect(session.checkPair('a', 'z').ok).toBe(false);
  });
});
