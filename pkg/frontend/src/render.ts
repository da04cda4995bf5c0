// HTML string renderers. No templating library: the views are small and
// the string form keeps them unit-testable without a DOM.

import type { EscalationRecord, MetricsReport, TranscriptRow } from './types.js';
import type { LabelGroup } from './hitl.js';
import { metricsRows } from './metrics.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

export function confidenceBadge(row: TranscriptRow): string {
  if (row.p_top1 === null || row.class === null) return '';
  const level = row.p_top1 < 0.7 ? 'low' : 'high';
  return (
    `<span class="badge badge-${level}">` +
    `${row.class} ${(row.p_top1 * 100).toFixed(0)}%</span>`
  );
}

export function transcriptView(record: EscalationRecord): string {
  const rows = record.transcript
    .map((row) => {
      const side = row.speaker === 'SYSTEM' ? 'system' : 'callee';
      return (
        `<div class="turn turn-${side}" data-seq="${row.seq}">` +
        `<span class="speaker">${row.speaker}</span>` +
        `<span class="text">${escapeHtml(row.text)}</span>` +
        confidenceBadge(row) +
        `</div>`
      );
    })
    .join('\n');
  return `<div class="transcript" data-record="${record.record_id}">\n${rows}\n</div>`;
}

export function escalationList(records: EscalationRecord[]): string {
  if (records.length === 0) {
    return '<p class="empty">No pending escalations.</p>';
  }
  const items = records
    .map(
      (r) =>
        `<li class="escalation" data-record="${r.record_id}">` +
        `<span class="reason reason-${r.reason.toLowerCase()}">${r.reason}</span>` +
        `<span class="subject">${escapeHtml(r.subject_id)}</span>` +
        `<span class="created">${r.created_at}</span>` +
        `<button class="open" data-record="${r.record_id}">review</button></li>`,
    )
    .join('\n');
  return `<ul class="escalation-list">\n${items}\n</ul>`;
}

export function labelForm(groups: LabelGroup[]): string {
  const rows = groups
    .map(
      (g, i) =>
        `<tr data-text="${escapeHtml(g.text)}">` +
        `<td>${escapeHtml(g.text)}</td>` +
        `<td>${g.count}</td>` +
        `<td>${(g.maxUncertainty * 100).toFixed(0)}%</td>` +
        `<td>${(['YES', 'NO', 'OTHER'] as const)
          .map(
            (cls) =>
              `<label><input type="radio" name="label-${i}" value="${cls}"` +
              `${g.assigned === cls ? ' checked' : ''}/>${cls}</label>`,
          )
          .join(' ')}</td></tr>`,
    )
    .join('\n');
  return (
    `<table class="label-form"><thead><tr>` +
    `<th>utterance</th><th>seen</th><th>uncertainty</th><th>label</th>` +
    `</tr></thead><tbody>\n${rows}\n</tbody></table>`
  );
}

export function metricsTable(report: MetricsReport): string {
  const rows = metricsRows(report)
    .map(
      (row) =>
        `<tr><td>${row.label}</td><td>${row.count}</td><td>${row.ratio}</td></tr>`,
    )
    .join('\n');
  return (
    `<table class="metrics"><thead>` +
    `<tr><th></th><th>Count</th><th>Ratio</th></tr></thead><tbody>\n` +
    `${rows}\n</tbody></table>\n` +
    `<p class="metrics-side">calls ${report.calls_total} | ` +
    `hang-up rate ${(report.hangup_rate * 100).toFixed(1)}% | ` +
    `failure rate ${(report.failure_rate * 100).toFixed(1)}% | ` +
    `escalations ${report.escalations}</p>`
  );
}

export function noticeBanner(notice: string | null): string {
  return notice ? `<div class="notice">${escapeHtml(notice)}</div>` : '';
}
