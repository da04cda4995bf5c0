// Review workflow against recorded engine fixtures: PENDING -> REVIEWED on
// success, optimistic rollback plus an "already reviewed" notice on 409.

import { describe, expect, it } from 'vitest';

import { ApiClient, ApiError } from '../src/api.js';
import { ReviewQueueStore } from '../src/queue.js';
import type { EscalationRecord, ReviewResponse } from '../src/types.js';
import { fakeFetch, fixture, type RecordedCall } from './helpers.js';

const pendingFixture = fixture<{ escalations: EscalationRecord[] }>(
  'escalations_pending.json',
);
const reviewSuccess = fixture<ReviewResponse>('review_success.json');
const reviewConflict = fixture<{ detail: string }>('review_conflict.json');

const firstId = pendingFixture.escalations[0]!.record_id;

describe('review workflow', () => {
  it('loads the pending queue from the API', async () => {
    const store = new ReviewQueueStore();
    await store.load(
      new ApiClient(fakeFetch({ 'GET /escalations?status=PENDING': { payload: pendingFixture } })),
    );
    expect(store.pending.length).toBe(pendingFixture.escalations.length);
    expect(store.pending[0]!.review_status).toBe('PENDING');
  });

  it('submitting a review removes the record and reports REVIEWED', async () => {
    const calls: RecordedCall[] = [];
    const api = new ApiClient(
      fakeFetch(
        {
          'GET /escalations?status=PENDING': { payload: pendingFixture },
          [`POST /escalations/${firstId}/review`]: { payload: reviewSuccess },
        },
        calls,
      ),
    );
    const store = new ReviewQueueStore();
    await store.load(api);
    const before = store.pending.length;

    const outcome = await store.submitReview(api, firstId, {
      operator_id: 'op-1',
      verdict: 'OVERRIDE_CLEAR',
      labels: [[3, 'NO']],
    });

    expect(outcome.kind).toBe('reviewed');
    if (outcome.kind === 'reviewed') {
      expect(outcome.response.review_status).toBe('REVIEWED');
      expect(outcome.response.lexicon_version).toBeGreaterThanOrEqual(1);
    }
    expect(store.pending.length).toBe(before - 1);
    expect(store.find(firstId)).toBeUndefined();
    const posted = calls.find((c) => c.method === 'POST');
    expect(posted?.body).toMatchObject({ verdict: 'OVERRIDE_CLEAR', labels: [[3, 'NO']] });
  });

  it('a 409 rolls the removal back and surfaces the conflict notice', async () => {
    const refreshed = {
      escalations: pendingFixture.escalations.filter((r) => r.record_id !== firstId),
    };
    let loads = 0;
    const api = new ApiClient(
      fakeFetch({
        'GET /escalations?status=PENDING': () => {
          loads += 1;
          return { payload: loads === 1 ? pendingFixture : refreshed };
        },
        [`POST /escalations/${firstId}/review`]: { status: 409, payload: reviewConflict },
      }),
    );
    const store = new ReviewQueueStore();
    await store.load(api);
    const before = store.pending.length;

    const outcome = await store.submitReview(api, firstId, {
      operator_id: 'op-2',
      verdict: 'OVERRIDE_CLEAR',
      labels: [],
    });

    expect(outcome.kind).toBe('conflict');
    expect(store.pending.length).toBe(before); // optimistic removal rolled back
    expect(store.notice).toContain('already reviewed');

    await store.load(api); // the refresh reconciles with the server
    expect(store.find(firstId)).toBeUndefined();
  });

  it('other failures restore the item and keep the error visible', async () => {
    const api = new ApiClient(
      fakeFetch({
        'GET /escalations?status=PENDING': { payload: pendingFixture },
        [`POST /escalations/${firstId}/review`]: {
          status: 400,
          payload: { detail: 'labels may reference callee utterances only' },
        },
      }),
    );
    const store = new ReviewQueueStore();
    await store.load(api);
    const outcome = await store.submitReview(api, firstId, {
      operator_id: 'op-3',
      verdict: 'CONFIRM_SYMPTOMATIC',
      labels: [[0, 'OTHER']],
    });
    expect(outcome.kind).toBe('error');
    expect(store.find(firstId)).toBeDefined();
    expect(store.notice).toContain('callee');
  });

  it('maps API failures to typed errors', async () => {
    const api = new ApiClient(
      fakeFetch({
        'GET /escalations?status=PENDING': { status: 404, payload: { detail: 'nope' } },
      }),
    );
    await expect(api.pendingEscalations()).rejects.toSatisfy(
      (error: unknown) => error instanceof ApiError && error.status === 404,
    );
  });
});
