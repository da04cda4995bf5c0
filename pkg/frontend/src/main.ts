// DOM wiring: tabs for the review queue, the labeling loop, metrics, and
// the posterior chart. All data comes from the engine API; the view logic
// lives in the tested modules, this file only glues it to the page.

import { ApiClient } from './api.js';
import { chartCaption, chartSvg } from './chart.js';
import { LabelingSession } from './hitl.js';
import { compareFp, formatRatio } from './metrics.js';
import { ReviewQueueStore } from './queue.js';
import {
  escalationList,
  labelForm,
  metricsTable,
  noticeBanner,
  transcriptView,
} from './render.js';
import type { IntentClass, MetricsReport, Verdict } from './types.js';

const api = new ApiClient();
const queue = new ReviewQueueStore();
let labeling: LabelingSession | null = null;
let metricsBefore: MetricsReport | null = null;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function isoDaysAgo(days: number): string {
  const d = new Date(Date.now() - days * 86_400_000);
  return d.toISOString().slice(0, 10);
}

async function refreshQueue(): Promise<void> {
  await queue.load(api);
  el('queue-notice').innerHTML = noticeBanner(queue.notice);
  el('queue-list').innerHTML = escalationList(queue.pending);
  for (const button of document.querySelectorAll<HTMLButtonElement>('button.open')) {
    button.addEventListener('click', () => openRecord(button.dataset.record!));
  }
}

function openRecord(recordId: string): void {
  const record = queue.find(recordId);
  if (!record) return;
  el('review-transcript').innerHTML = transcriptView(record);
  el('review-controls').dataset.record = recordId;
  el('review-controls').hidden = false;
}

async function submitReview(verdict: Verdict): Promise<void> {
  const recordId = el('review-controls').dataset.record;
  if (!recordId) return;
  const record = queue.find(recordId);
  const labels: Array<[number, IntentClass]> = [];
  if (record) {
    for (const input of document.querySelectorAll<HTMLSelectElement>(
      '#review-transcript select[data-seq]',
    )) {
      if (input.value) labels.push([Number(input.dataset.seq), input.value as IntentClass]);
    }
  }
  const outcome = await queue.submitReview(api, recordId, {
    operator_id: 'console',
    verdict,
    labels,
  });
  if (outcome.kind !== 'error') {
    el('review-controls').hidden = true;
    el('review-transcript').innerHTML = '';
  }
  await refreshQueue();
}

async function loadBatch(): Promise<void> {
  const response = await api.hitlBatch(50);
  labeling = new LabelingSession(response.items);
  el('hitl-version').textContent = `lexicon v${response.lexicon_version}`;
  el('hitl-form').innerHTML = labelForm(labeling.groups);
  document
    .querySelectorAll<HTMLInputElement>('#hitl-form input[type=radio]')
    .forEach((input) => {
      input.addEventListener('change', () => {
        const row = input.closest('tr');
        if (row && labeling) {
          labeling.assign(row.dataset.text!, input.value as IntentClass);
        }
      });
    });
}

async function submitBatchLabels(): Promise<void> {
  if (!labeling || labeling.assignedCount === 0) return;
  const metricsFrom = (el('metrics-from') as HTMLInputElement).value || isoDaysAgo(30);
  const metricsTo = (el('metrics-to') as HTMLInputElement).value || isoDaysAgo(0);
  metricsBefore = await api.metrics(metricsFrom, metricsTo);
  const response = await labeling.submit(api);
  el('hitl-version').textContent = `lexicon v${response.version}`;
  const after = await api.metrics(metricsFrom, metricsTo);
  const comparison = compareFp(metricsBefore, after);
  el('hitl-improvement').textContent =
    `FP ${formatRatio(comparison.before)} -> ${formatRatio(comparison.after)}` +
    (comparison.relativeDrop !== null
      ? ` (${(comparison.relativeDrop * 100).toFixed(0)}% drop)`
      : '');
  await loadBatch();
}

async function refreshMetrics(): Promise<void> {
  const from = (el('metrics-from') as HTMLInputElement).value;
  const to = (el('metrics-to') as HTMLInputElement).value;
  if (!from || !to) return;
  const report = await api.metrics(from, to);
  el('metrics-view').innerHTML = metricsTable(report);
}

async function estimateSpread(): Promise<void> {
  const raw = (el('spread-obs') as HTMLTextAreaElement).value.trim();
  const observations = raw
    ? raw.split('\n').map((line) => JSON.parse(line))
    : [];
  const result = await api.spreadEstimate({ observations, G: 512 });
  el('spread-chart').innerHTML = chartSvg(result);
  el('spread-caption').textContent = chartCaption(result);
}

function showTab(name: string): void {
  for (const section of document.querySelectorAll<HTMLElement>('main > section')) {
    section.hidden = section.id !== `tab-${name}`;
  }
}

export function boot(): void {
  for (const button of document.querySelectorAll<HTMLButtonElement>('nav button')) {
    button.addEventListener('click', () => showTab(button.dataset.tab!));
  }
  el('queue-refresh').addEventListener('click', () => void refreshQueue());
  el('review-confirm').addEventListener('click', () =>
    void submitReview('CONFIRM_SYMPTOMATIC'),
  );
  el('review-override').addEventListener('click', () =>
    void submitReview('OVERRIDE_CLEAR'),
  );
  el('hitl-load').addEventListener('click', () => void loadBatch());
  el('hitl-submit').addEventListener('click', () => void submitBatchLabels());
  el('metrics-refresh').addEventListener('click', () => void refreshMetrics());
  el('spread-run').addEventListener('click', () => void estimateSpread());
  showTab('queue');
  void refreshQueue();
}

if (typeof document !== 'undefined') {
  document.addEventListener('DOMContentLoaded', boot);
}
