import { AssessClient } from './api.js';
import { mount } from './app.js';
import { AssessmentFlow } from './flow.js';

const root = document.getElementById('app');
if (!root) throw new Error('missing #app element');

const client = new AssessClient(window.location.origin);
const flow = new AssessmentFlow(client);
mount(root, flow);

const sessionId = window.location.hash.slice(1);
if (sessionId) {
  void flow.resume(sessionId);
}
