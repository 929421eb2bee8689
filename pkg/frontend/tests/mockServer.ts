/** In-memory stand-in for the ranking service, exposed as a fetch function.
 *  Mirrors the endpoints and error shapes the real server produces. */

import type { FetchLike } from '../src/api.js';

interface MockRound {
  id: string;
  dataset: string;
  status: 'pending' | 'open' | 'closed' | 'failed';
  weights_id: string | null;
  candidates: Array<{
    id: string;
    config_id: string;
    render_id: string;
    render_url: string;
    fitness: number;
    weights_tag: string;
  }>;
  records: Array<{ subject: string; ranking?: string[]; pair?: [string, string] }>;
  pendingPolls: number;
}

interface MockJob {
  id: string;
  status: 'pending' | 'done' | 'failed';
  result: { config_id: string; render_id: string; render_url: string; fitness: number } | null;
  error: string | null;
  pendingPolls: number;
}

export class MockServer {
  readonly rounds = new Map<string, MockRound>();
  readonly jobs = new Map<string, MockJob>();
  readonly renders = new Set<string>();
  readonly datasets = ['alpha', 'beta'];
  /** How many status polls return "pending" before completion. */
  pollsBeforeReady = 1;
  learnCalls = 0;
  private counter = 0;

  private makeCandidates(n: number, tag: string) {
    const cands = [];
    for (let k = 0; k < n; k++) {
      const rid = `png-${this.counter}-${k}`;
      this.renders.add(rid);
      cands.push({
        id: `c${k}-${this.counter}`,
        config_id: `cfg-${this.counter}-${k}`,
        render_id: rid,
        render_url: `/api/renders/${rid}.png`,
        fitness: 1 + k / 10,
        weights_tag: tag,
      });
    }
    return cands;
  }

  private hasCycle(edges: Array<[string, string]>): boolean {
    const graph = new Map<string, string[]>();
    for (const [w, l] of edges) graph.set(w, [...(graph.get(w) ?? []), l]);
    const state = new Map<string, number>();
    const visit = (n: string): boolean => {
      state.set(n, 1);
      for (const next of graph.get(n) ?? []) {
        if (state.get(next) === 1) return true;
        if (!state.has(next) && visit(next)) return true;
      }
      state.set(n, 2);
      return false;
    };
    return [...graph.keys()].some((n) => !state.has(n) && visit(n));
  }

  fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? 'GET';
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    const path = url.replace(/^https?:\/\/[^/]+/, '');

    const json = (status: number, payload: unknown) =>
      new Response(JSON.stringify(payload), {
        status,
        headers: { 'Content-Type': 'application/json' },
      });

    if (method === 'GET' && path === '/api/datasets') {
      return json(200, { v: 1, datasets: this.datasets.map((d) => ({ name: d, images: 2 })) });
    }

    if (method === 'POST' && path === '/api/rounds') {
      if (!this.datasets.includes(body.dataset)) {
        return json(404, { detail: `unknown dataset ${body.dataset}` });
      }
      this.counter += 1;
      const id = `rnd-${this.counter}`;
      this.rounds.set(id, {
        id,
        dataset: body.dataset,
        status: 'pending',
        weights_id: body.weights_id ?? null,
        candidates: this.makeCandidates(body.n_candidates ?? 3, body.weights_id ?? 'basic-saliency'),
        records: [],
        pendingPolls: this.pollsBeforeReady,
      });
      return json(201, { v: 1, id, status: 'pending' });
    }

    const roundMatch = path.match(/^\/api\/rounds\/([^/]+)$/);
    if (method === 'GET' && roundMatch) {
      const rnd = this.rounds.get(roundMatch[1]);
      if (!rnd) return json(404, { detail: 'unknown round' });
      if (rnd.status === 'pending' && rnd.pendingPolls-- <= 0) rnd.status = 'open';
      return json(200, {
        v: 1,
        id: rnd.id,
        dataset: rnd.dataset,
        status: rnd.status,
        weights_id: rnd.weights_id,
        candidates: rnd.status === 'open' || rnd.status === 'closed' ? rnd.candidates : [],
        n_preferences: rnd.records.length,
        error: null,
      });
    }

    const prefMatch = path.match(/^\/api\/rounds\/([^/]+)\/preferences$/);
    if (method === 'POST' && prefMatch) {
      const rnd = this.rounds.get(prefMatch[1]);
      if (!rnd) return json(404, { detail: 'unknown round' });
      if (rnd.status !== 'open') return json(409, { detail: `round is ${rnd.status}, not open` });
      const ids = rnd.candidates.map((c) => c.id);
      if ((body.ranking == null) === (body.pair == null)) {
        return json(422, { detail: 'submit exactly one of ranking / pair' });
      }
      if (body.ranking != null) {
        if ([...body.ranking].sort().join() !== [...ids].sort().join()) {
          return json(422, { detail: 'ranking must be a total order over the candidates' });
        }
        rnd.records.push({ subject: body.subject, ranking: body.ranking });
      } else {
        const edges = rnd.records
          .filter((r) => r.pair && r.subject === body.subject)
          .map((r) => r.pair as [string, string]);
        edges.push([body.pair[0], body.pair[1]]);
        if (this.hasCycle(edges)) {
          return json(422, { detail: { reason: 'circular', subject: body.subject } });
        }
        rnd.records.push({ subject: body.subject, pair: body.pair });
      }
      return json(201, { v: 1, round: rnd.id, accepted: true });
    }

    if (method === 'POST' && path === '/api/learn') {
      const selected = (body.rounds as string[]).map((rid) => this.rounds.get(rid));
      if (selected.some((r) => r === undefined)) return json(404, { detail: 'unknown round' });
      const records = selected.flatMap((r) => r!.records);
      if (records.length === 0) {
        return json(422, { detail: 'no preferences recorded in those rounds' });
      }
      this.learnCalls += 1;
      for (const r of selected) r!.status = 'closed';
      return json(200, {
        v: 1,
        weights_id: `wts-${this.learnCalls}`,
        objective: 2.5,
        tau_sum: 3,
        ratio_penalty: 0.01,
        flagged_subjects: [],
        closed_rounds: selected.map((r) => r!.id),
      });
    }

    if (method === 'POST' && path === '/api/generate') {
      if (!this.datasets.includes(body.dataset)) {
        return json(404, { detail: `unknown dataset ${body.dataset}` });
      }
      this.counter += 1;
      const id = `job-${this.counter}`;
      const rid = `png-job-${this.counter}`;
      this.renders.add(rid);
      this.jobs.set(id, {
        id,
        status: 'pending',
        result: {
          config_id: `cfg-job-${this.counter}`,
          render_id: rid,
          render_url: `/api/renders/${rid}.png`,
          fitness: 3.2,
        },
        error: null,
        pendingPolls: this.pollsBeforeReady,
      });
      return json(202, { v: 1, id, status: 'pending' });
    }

    const jobMatch = path.match(/^\/api\/jobs\/([^/]+)$/);
    if (method === 'GET' && jobMatch) {
      const job = this.jobs.get(jobMatch[1]);
      if (!job) return json(404, { detail: 'unknown job' });
      if (job.status === 'pending' && job.pendingPolls-- <= 0) job.status = 'done';
      return json(200, {
        v: 1,
        id: job.id,
        status: job.status,
        result: job.status === 'done' ? job.result : null,
        error: job.error,
      });
    }

    const renderMatch = path.match(/^\/api\/renders\/(.+)\.png$/);
    if (method === 'GET' && renderMatch) {
      if (!this.renders.has(renderMatch[1])) return json(404, { detail: 'unknown render' });
      return new Response(new Uint8Array([0x89, 0x50, 0x4e, 0x47]), {
        status: 200,
        headers: { 'Content-Type': 'image/png' },
      });
    }

    return json(404, { detail: `no route for ${method} ${path}` });
  };
}
