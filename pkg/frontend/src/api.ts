/** Typed client for the collage ranking service HTTP/JSON API. */

export interface DatasetInfo {
  name: string;
  images: number;
}

export interface CandidateCard {
  id: string;
  config_id: string;
  render_id: string;
  render_url: string;
  fitness: number;
  weights_tag: string;
}

export type RoundStatus = 'pending' | 'open' | 'closed' | 'failed';

export interface RoundView {
  id: string;
  dataset: string;
  status: RoundStatus;
  weights_id: string | null;
  candidates: CandidateCard[];
  n_preferences: number;
  error: string | null;
}

export interface LearnResult {
  weights_id: string;
  objective: number;
  tau_sum: number;
  ratio_penalty: number;
  flagged_subjects: string[];
  closed_rounds: string[];
}

export type JobStatus = 'pending' | 'done' | 'failed';

export interface JobView {
  id: string;
  status: JobStatus;
  result: { config_id: string; render_id: string; render_url: string; fitness: number } | null;
  error: string | null;
}

export interface RoundParams {
  dataset: string;
  n_candidates?: number;
  weights_id?: string | null;
  seed?: number;
  grid?: number;
  iters?: number;
  restarts?: number;
  canvas_w?: number;
  canvas_h?: number;
  render_scale?: number;
}

export interface GenerateParams {
  dataset: string;
  weights_id?: string | null;
  seed?: number;
  grid?: number;
  iters?: number;
  restarts?: number;
  canvas_w?: number;
  canvas_h?: number;
  render_scale?: number;
}

export interface LearnParams {
  rounds: string[];
  seed?: number;
  eta?: number;
  restarts?: number;
  max_evals?: number;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Error carrying the server's status code and decoded detail payload. */
export class ApiError extends Error {
  readonly status: number;
  readonly detail: unknown;

  constructor(status: number, detail: unknown) {
    super(typeof detail === 'string' ? detail : JSON.stringify(detail));
    this.status = status;
    this.detail = detail;
  }

  /** True when the server rejected a pairwise pick as circular. */
  get isCircular(): boolean {
    return (
      this.status === 422 &&
      typeof this.detail === 'object' &&
      this.detail !== null &&
      (this.detail as { reason?: string }).reason === 'circular'
    );
  }
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl = '', fetchFn: FetchLike = (...args) => fetch(...args)) {
    this.base = baseUrl.replace(/\/$/, '');
    this.fetchFn = fetchFn;
  }

  /** Absolute URL for a server-relative artifact path (e.g. a render URL). */
  resolveUrl(path: string): string {
    return `${this.base}${path}`;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchFn(`${this.base}${path}`, {
      method,
      headers: body === undefined ? undefined : { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    let payload: unknown = null;
    const text = await resp.text();
    if (text.length > 0) {
      try {
        payload = JSON.parse(text);
      } catch {
        payload = text;
      }
    }
    if (!resp.ok) {
      const detail =
        typeof payload === 'object' && payload !== null && 'detail' in payload
          ? (payload as { detail: unknown }).detail
          : payload;
      throw new ApiError(resp.status, detail);
    }
    return payload as T;
  }

  async listDatasets(): Promise<DatasetInfo[]> {
    const out = await this.request<{ datasets: DatasetInfo[] }>('GET', '/api/datasets');
    return out.datasets;
  }

  openRound(params: RoundParams): Promise<{ id: string; status: RoundStatus }> {
    return this.request('POST', '/api/rounds', params);
  }

  getRound(id: string): Promise<RoundView> {
    return this.request('GET', `/api/rounds/${id}`);
  }

  submitRanking(roundId: string, subject: string, ranking: string[]): Promise<unknown> {
    return this.request('POST', `/api/rounds/${roundId}/preferences`, { subject, ranking });
  }

  submitPair(roundId: string, subject: string, winner: string, loser: string): Promise<unknown> {
    return this.request('POST', `/api/rounds/${roundId}/preferences`, {
      subject,
      pair: [winner, loser],
    });
  }

  learn(params: LearnParams): Promise<LearnResult> {
    return this.request('POST', '/api/learn', params);
  }

  startGeneration(params: GenerateParams): Promise<{ id: string; status: JobStatus }> {
    return this.request('POST', '/api/generate', params);
  }

  getJob(id: string): Promise<JobView> {
    return this.request('GET', `/api/jobs/${id}`);
  }

  /** Poll a round until it leaves the pending state. */
  async waitForRound(id: string, intervalMs = 250, timeoutMs = 120_000): Promise<RoundView> {
    return poll(() => this.getRound(id), (r) => r.status !== 'pending', intervalMs, timeoutMs);
  }

  /** Poll a generation job until it is done or failed. */
  async waitForJob(id: string, intervalMs = 250, timeoutMs = 120_000): Promise<JobView> {
    return poll(() => this.getJob(id), (j) => j.status !== 'pending', intervalMs, timeoutMs);
  }
}

async function poll<T>(
  get: () => Promise<T>,
  done: (value: T) => boolean,
  intervalMs: number,
  timeoutMs: number,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const value = await get();
    if (done(value)) return value;
    if (Date.now() >= deadline) throw new Error('polling timed out');
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
}
