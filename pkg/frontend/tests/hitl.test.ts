// Labeling workflow against recorded fixtures: batch grouping, label
// submission, new lexicon version, and the before/after FP comparison.

import { describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { LabelingSession, groupBatch } from '../src/hitl.js';
import { compareFp } from '../src/metrics.js';
import type { BatchResponse, LabelsResponse, MetricsReport } from '../src/types.js';
import { fakeFetch, fixture, type RecordedCall } from './helpers.js';

const batch = fixture<BatchResponse>('hitl_batch.json');
const labelsResponse = fixture<LabelsResponse>('labels_response.json');
const before = fixture<MetricsReport>('metrics_before.json');
const after = fixture<MetricsReport>('metrics_after.json');

describe('labeling workflow', () => {
  it('groups duplicate utterances and keeps uncertainty order', () => {
    const groups = groupBatch(batch.items);
    expect(groups.length).toBeGreaterThan(0);
    expect(groups.length).toBeLessThanOrEqual(batch.items.length);
    const counts = groups.reduce((sum, g) => sum + g.count, 0);
    expect(counts).toBe(batch.items.length);
    for (let i = 1; i < groups.length; i += 1) {
      expect(groups[i - 1]!.maxUncertainty).toBeGreaterThanOrEqual(
        groups[i]!.maxUncertainty,
      );
    }
  });

  it('posts one label per distinct text and renders the new version', async () => {
    const calls: RecordedCall[] = [];
    const api = new ApiClient(
      fakeFetch({ 'POST /labels': { payload: labelsResponse } }, calls),
    );
    const session = new LabelingSession(batch.items);
    for (const group of session.groups) {
      session.assign(group.text, 'NO');
    }
    const response = await session.submit(api);

    expect(response.version).toBe(labelsResponse.version);
    expect(session.lexiconVersion).toBe(labelsResponse.version);
    const posted = calls[0]!.body as { labels: Array<{ text: string; label: string }> };
    expect(posted.labels.length).toBe(session.groups.length);
    const texts = posted.labels.map((l) => l.text);
    expect(new Set(texts).size).toBe(texts.length); // deduplicated
  });

  it('refuses to submit with nothing assigned', async () => {
    const api = new ApiClient(fakeFetch({}));
    const session = new LabelingSession(batch.items);
    await expect(session.submit(api)).rejects.toThrow('no labels assigned');
  });

  it('recorded metrics show a non-increasing FP ratio after labeling', () => {
    const comparison = compareFp(before, after);
    expect(comparison.improved).toBe(true);
    expect(comparison.after).toBeLessThanOrEqual(comparison.before);
    expect(comparison.relativeDrop).not.toBeNull();
    expect(comparison.relativeDrop!).toBeGreaterThan(0);
  });
});
