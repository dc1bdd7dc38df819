/**
 * The assessment flow as a plain state machine, independent of the DOM.
 *
 * One outstanding request at a time: while a call is in flight every
 * action is a no-op, which is what keeps the answer buttons "disabled"
 * regardless of how the state is rendered.
 */

import {
  ApiError,
  AssessClient,
  CompletePayload,
  CorrectionItem,
  CreateSessionOptions,
  PredictedSkill,
  Question,
  SessionPayload,
} from './api.js';

export type Phase =
  | 'idle'
  | 'asking'
  | 'complete'
  | 'corrections-submitted'
  | 'failed';

export interface FlowSnapshot {
  phase: Phase;
  busy: boolean;
  sessionId: string | null;
  question: Question | null;
  answeredCount: number;
  totalSkills: number;
  stopReason: string | null;
  questionCount: number;
  /** Per-skill review rows; assessed rows are locked, predicted rows toggle. */
  review: ReviewRow[];
  sessionPlan: string[] | null;
  /** Last non-fatal problem to surface inline (conflicts, rejections). */
  notice: string | null;
  error: string | null;
}

export interface ReviewRow extends PredictedSkill {
  /** Current (possibly toggled) mastery shown to the learner. */
  current: boolean;
  locked: boolean;
}

type Listener = (snapshot: FlowSnapshot) => void;

export class AssessmentFlow {
  private phase: Phase = 'idle';
  private busy = false;
  private sessionId: string | null = null;
  private question: Question | null = null;
  private answeredCount = 0;
  private totalSkills = 0;
  private stopReason: string | null = null;
  private questionCount = 0;
  private review: ReviewRow[] = [];
  private sessionPlan: string[] | null = null;
  private notice: string | null = null;
  private error: string | null = null;
  private listeners: Listener[] = [];

  constructor(private readonly client: AssessClient) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  snapshot(): FlowSnapshot {
    return {
      phase: this.phase,
      busy: this.busy,
      sessionId: this.sessionId,
      question: this.question,
      answeredCount: this.answeredCount,
      totalSkills: this.totalSkills,
      stopReason: this.stopReason,
      questionCount: this.questionCount,
      review: this.review.map((row) => ({ ...row })),
      sessionPlan: this.sessionPlan ? [...this.sessionPlan] : null,
      notice: this.notice,
      error: this.error,
    };
  }

  private emit(): void {
    const snapshot = this.snapshot();
    for (const listener of this.listeners) listener(snapshot);
  }

  private async guarded(action: () => Promise<void>): Promise<void> {
    if (this.busy) return; // single in-flight request
    this.busy = true;
    this.notice = null;
    this.emit();
    try {
      await action();
    } catch (err) {
      if (err instanceof ApiError && err.status < 500) {
        // conflicts and rejections are survivable; keep the session
        this.notice = err.message;
      } else {
        this.phase = 'failed';
        this.error = err instanceof Error ? err.message : String(err);
      }
    } finally {
      this.busy = false;
      this.emit();
    }
  }

  private applySessionPayload(payload: SessionPayload): void {
    if (payload.status === 'awaiting-answer') {
      this.phase = 'asking';
      this.sessionId = payload.session_id;
      this.question = payload.question;
      this.answeredCount = payload.answered_count;
      this.totalSkills = payload.total_skills;
      return;
    }
    this.applyCompletion(payload);
  }

  private applyCompletion(payload: CompletePayload): void {
    this.phase = 'complete';
    this.sessionId = payload.session_id ?? this.sessionId;
    this.question = null;
    this.stopReason = payload.stop_reason;
    this.questionCount = payload.question_count;
    this.answeredCount = payload.question_count;
    this.totalSkills = payload.predicted.length;
    this.sessionPlan = payload.session_plan ?? null;
    this.review = payload.predicted.map((skill) => ({
      ...skill,
      current: skill.mastered,
      locked: skill.source === 'assessed',
    }));
  }

  async start(options: CreateSessionOptions = {}): Promise<void> {
    await this.guarded(async () => {
      this.applySessionPayload(await this.client.createSession(options));
    });
  }

  /** Re-attach to a server-held session, e.g. after a page refresh. */
  async resume(sessionId: string): Promise<void> {
    await this.guarded(async () => {
      const state = await this.client.getSession(sessionId);
      this.sessionId = state.session_id;
      this.answeredCount = state.answered_count;
      this.totalSkills = state.total_skills;
      if (state.status === 'awaiting-answer' && state.question) {
        this.phase = 'asking';
        this.question = state.question;
      } else {
        // a session finished before the refresh: the state endpoint only
        // reports directly assessed skills, so the review shows those as
        // locked rows and offers no further toggles
        this.phase = 'complete';
        this.question = null;
        this.questionCount = state.answered_count;
        this.review = state.assessed.map((entry) => ({
          skill_id: entry.skill_id,
          title: entry.skill_id,
          mastered: entry.mastered,
          source: 'assessed' as const,
          current: entry.mastered,
          locked: true,
        }));
      }
    });
  }

  async answer(mastered: boolean): Promise<void> {
    const sessionId = this.sessionId;
    const question = this.question;
    if (this.phase !== 'asking' || !sessionId || !question) return;
    await this.guarded(async () => {
      this.applySessionPayload(
        await this.client.submitAnswer(sessionId, question.skill_id, mastered),
      );
    });
  }

  /** Toggle a predicted skill on the review screen; locked rows stay put. */
  toggle(skillId: string): void {
    if (this.phase !== 'complete') return;
    const row = this.review.find((r) => r.skill_id === skillId);
    if (!row || row.locked) return;
    row.current = !row.current;
    this.emit();
  }

  /** Only the rows the learner actually changed. */
  changedCorrections(): CorrectionItem[] {
    return this.review
      .filter((row) => !row.locked && row.current !== row.mastered)
      .map((row) => ({ skill_id: row.skill_id, mastered: row.current }));
  }

  async submitCorrections(): Promise<void> {
    const sessionId = this.sessionId;
    if (this.phase !== 'complete' || !sessionId) return;
    const corrections = this.changedCorrections();
    await this.guarded(async () => {
      await this.client.submitCorrections(sessionId, corrections);
      this.phase = 'corrections-submitted';
    });
  }
}
