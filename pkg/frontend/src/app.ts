/**
 * DOM rendering for the assessment flow. All displayed counts and states
 * come straight from the service via the flow snapshot.
 */

import { AssessmentFlow, FlowSnapshot, ReviewRow } from './flow.js';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderStart(root: HTMLElement, flow: AssessmentFlow, busy: boolean): void {
  const button = el('button', 'primary', 'Start assessment');
  button.disabled = busy;
  button.addEventListener('click', () => void flow.start());
  root.append(
    el('h1', undefined, 'Skill assessment'),
    el(
      'p',
      'hint',
      'Answer a handful of questions; the rest of your knowledge state is predicted.',
    ),
    button,
  );
}

function renderQuestion(root: HTMLElement, flow: AssessmentFlow, s: FlowSnapshot): void {
  root.append(
    el('h1', undefined, 'Do you master this skill?'),
    el('p', 'question-title', s.question ? s.question.title : '…'),
    el(
      'p',
      'progress',
      `${s.answeredCount} / ${s.totalSkills} skills answered — most runs stop early`,
    ),
  );
  const yes = el('button', 'primary', 'Mastered');
  const no = el('button', 'secondary', 'Not yet');
  yes.disabled = no.disabled = s.busy || !s.question;
  yes.addEventListener('click', () => void flow.answer(true));
  no.addEventListener('click', () => void flow.answer(false));
  const row = el('div', 'answer-row');
  row.append(yes, no);
  root.append(row);
}

function renderReviewRow(flow: AssessmentFlow, row: ReviewRow, busy: boolean): HTMLElement {
  const item = el('li', row.locked ? 'skill locked' : 'skill');
  const badge = el('span', `badge ${row.source}`, row.source);
  const label = el('span', 'title', row.title);
  const state = el('button', row.current ? 'state mastered' : 'state unmastered');
  state.textContent = row.current ? 'mastered' : 'not mastered';
  state.disabled = row.locked || busy;
  if (!row.locked) {
    state.addEventListener('click', () => flow.toggle(row.skill_id));
  }
  item.append(badge, label, state);
  return item;
}

function renderComplete(root: HTMLElement, flow: AssessmentFlow, s: FlowSnapshot): void {
  root.append(
    el('h1', undefined, 'Assessment complete'),
    el(
      'p',
      'summary',
      `${s.questionCount} questions asked (${s.stopReason ?? 'finished'}). ` +
        'Review the predictions below — flip anything we got wrong.',
    ),
  );
  if (s.sessionPlan && s.sessionPlan.length > 0) {
    root.append(el('p', 'plan', `Up next to learn: ${s.sessionPlan.join(', ')}`));
  }
  const list = el('ul', 'review');
  for (const row of s.review) list.append(renderReviewRow(flow, row, s.busy));
  const submit = el('button', 'primary', 'Confirm knowledge state');
  submit.disabled = s.busy;
  submit.addEventListener('click', () => void flow.submitCorrections());
  root.append(list, submit);
}

export function render(root: HTMLElement, flow: AssessmentFlow, s: FlowSnapshot): void {
  root.replaceChildren();
  if (s.notice) root.append(el('p', 'notice', s.notice));
  switch (s.phase) {
    case 'idle':
      renderStart(root, flow, s.busy);
      break;
    case 'asking':
      renderQuestion(root, flow, s);
      break;
    case 'complete':
      renderComplete(root, flow, s);
      break;
    case 'corrections-submitted':
      root.append(
        el('h1', undefined, 'Thanks!'),
        el('p', 'summary', 'Your confirmed knowledge state was stored.'),
      );
      break;
    case 'failed':
      root.append(
        el('h1', undefined, 'Something went wrong'),
        el('p', 'error', s.error ?? 'unknown error'),
        el('p', 'hint', 'Reload to resume — your session is held on the server.'),
      );
      break;
  }
}

export function mount(root: HTMLElement, flow: AssessmentFlow): void {
  flow.subscribe((s) => {
    // keep the session id in the URL so a refresh can resume
    if (s.sessionId && window.location.hash !== `#${s.sessionId}`) {
      window.history.replaceState(null, '', `#${s.sessionId}`);
    }
    render(root, flow, s);
  });
  render(root, flow, flow.snapshot());
}
