// Labeling workflow: group the uncertainty batch by utterance text, collect
// one class per distinct text, submit, and report the new lexicon version.

import { ApiClient } from './api.js';
import type { BatchItem, IntentClass, LabelsResponse } from './types.js';

export interface LabelGroup {
  text: string;
  count: number;
  maxUncertainty: number;
  suggested: IntentClass;
  assigned: IntentClass | null;
}

/** Collapse duplicate utterances, keeping the batch's uncertainty order. */
export function groupBatch(items: BatchItem[]): LabelGroup[] {
  const groups = new Map<string, LabelGroup>();
  for (const item of items) {
    const existing = groups.get(item.text);
    if (existing) {
      existing.count += 1;
      existing.maxUncertainty = Math.max(existing.maxUncertainty, item.uncertainty);
    } else {
      groups.set(item.text, {
        text: item.text,
        count: 1,
        maxUncertainty: item.uncertainty,
        suggested: item.top1,
        assigned: null,
      });
    }
  }
  return [...groups.values()].sort((a, b) => b.maxUncertainty - a.maxUncertainty);
}

export class LabelingSession {
  readonly groups: LabelGroup[];
  lexiconVersion: number | null = null;

  constructor(items: BatchItem[]) {
    this.groups = groupBatch(items);
  }

  assign(text: string, label: IntentClass): void {
    const group = this.groups.find((g) => g.text === text);
    if (!group) throw new Error(`no batch utterance ${JSON.stringify(text)}`);
    group.assigned = label;
  }

  get assignedCount(): number {
    return this.groups.filter((g) => g.assigned !== null).length;
  }

  /** Post one label per distinct labeled text; returns the new version. */
  async submit(api: ApiClient): Promise<LabelsResponse> {
    const labels = this.groups
      .filter((g) => g.assigned !== null)
      .map((g) => ({ text: g.text, label: g.assigned as string }));
    if (labels.length === 0) throw new Error('no labels assigned');
    const response = await api.submitLabels(labels);
    this.lexiconVersion = response.version;
    return response;
  }
}
