// Review-queue state: optimistic removal on submit, rollback on conflict.

import { ApiClient, ApiError } from './api.js';
import type { EscalationRecord, ReviewRequest, ReviewResponse } from './types.js';

export type ReviewOutcome =
  | { kind: 'reviewed'; response: ReviewResponse }
  | { kind: 'conflict'; notice: string }
  | { kind: 'error'; notice: string };

export class ReviewQueueStore {
  pending: EscalationRecord[] = [];
  notice: string | null = null;

  async load(api: ApiClient): Promise<void> {
    this.pending = await api.pendingEscalations();
    this.notice = null;
  }

  find(recordId: string): EscalationRecord | undefined {
    return this.pending.find((r) => r.record_id === recordId);
  }

  /** Submit a review; the item leaves the list immediately and is put back
   * if the service reports it was already reviewed elsewhere (409). */
  async submitReview(
    api: ApiClient,
    recordId: string,
    request: ReviewRequest,
  ): Promise<ReviewOutcome> {
    const index = this.pending.findIndex((r) => r.record_id === recordId);
    if (index < 0) {
      return { kind: 'error', notice: `record ${recordId} is not in the queue` };
    }
    const [removed] = this.pending.splice(index, 1);
    try {
      const response = await api.review(recordId, request);
      this.notice = null;
      return { kind: 'reviewed', response };
    } catch (error) {
      // Roll the optimistic removal back; a follow-up load() reconciles
      // with the server (and drops records reviewed by someone else).
      this.pending.splice(index, 0, removed!);
      if (error instanceof ApiError && error.status === 409) {
        this.notice = `Record ${recordId} was already reviewed by someone else.`;
        return { kind: 'conflict', notice: this.notice };
      }
      this.notice = error instanceof Error ? error.message : String(error);
      return { kind: 'error', notice: this.notice };
    }
  }
}
