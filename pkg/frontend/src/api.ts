/**
 * Typed client for the assessment service's /v1 API.
 *
 * The client is a thin transport wrapper: it never computes probabilities
 * or picks questions, it only relays what the service says.
 */

export interface Question {
  skill_id: string;
  title: string;
}

export interface PredictedSkill {
  skill_id: string;
  title: string;
  mastered: boolean;
  source: 'assessed' | 'predicted';
}

export interface AwaitingAnswerPayload {
  session_id: string;
  status: 'awaiting-answer';
  question: Question;
  answered_count: number;
  total_skills: number;
}

export interface CompletePayload {
  session_id: string;
  status: 'complete';
  stop_reason: string;
  question_count: number;
  predicted: PredictedSkill[];
  session_plan?: string[];
}

export type SessionPayload = AwaitingAnswerPayload | CompletePayload;

export interface SessionStatePayload {
  session_id: string;
  status: 'awaiting-answer' | 'complete';
  question: Question | null;
  assessed: { skill_id: string; mastered: boolean }[];
  probabilities: number[];
  uncertain_count: number;
  answered_count: number;
  total_skills: number;
}

export interface CorrectionItem {
  skill_id: string;
  mastered: boolean;
}

export interface CorrectionsResult {
  session_id: string;
  corrected: { skill_id: string; mastered: boolean }[];
  user_verified: boolean;
}

export interface CreateSessionOptions {
  mode?: 'full' | 'session';
  epsilon?: number;
  tau?: number;
  session_length?: number;
  exploration_probability?: number;
  rng_seed?: number;
  prior?: Record<string, boolean>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

export type FetchLike = (
  input: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ status: number; json(): Promise<unknown> }>;

async function throwApiError(status: number, body: unknown): Promise<never> {
  // the service wraps structured errors as { detail: { code, message } }
  const detail = (body as { detail?: { code?: string; message?: string } })?.detail;
  if (detail && typeof detail === 'object') {
    throw new ApiError(status, detail.code ?? 'error', detail.message ?? 'request failed');
  }
  throw new ApiError(status, 'error', `request failed with status ${status}`);
}

export class AssessClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}/v1${path}`, {
      method,
      headers: { 'content-type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const parsed = await response.json();
    if (response.status < 200 || response.status >= 300) {
      await throwApiError(response.status, parsed);
    }
    return parsed as T;
  }

  health(): Promise<{ status: string; skills: number }> {
    return this.request('GET', '/health');
  }

  createSession(options: CreateSessionOptions = {}): Promise<SessionPayload> {
    return this.request('POST', '/sessions', options);
  }

  getSession(sessionId: string): Promise<SessionStatePayload> {
    return this.request('GET', `/sessions/${encodeURIComponent(sessionId)}`);
  }

  submitAnswer(
    sessionId: string,
    skillId: string,
    mastered: boolean,
  ): Promise<SessionPayload> {
    return this.request('POST', `/sessions/${encodeURIComponent(sessionId)}/answers`, {
      skill_id: skillId,
      mastered,
    });
  }

  submitCorrections(
    sessionId: string,
    corrections: CorrectionItem[],
  ): Promise<CorrectionsResult> {
    return this.request(
      'POST',
      `/sessions/${encodeURIComponent(sessionId)}/corrections`,
      { corrections },
    );
  }
}
