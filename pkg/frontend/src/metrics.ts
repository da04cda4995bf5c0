// Dashboard view-models: error-table rows and the before/after comparison
// shown beside the labeling workflow.

import type { MetricsReport } from './types.js';

export interface MetricsRow {
  label: string;
  count: number;
  ratio: string;
}

export function formatRatio(value: number): string {
  return `${(value * 100).toFixed(2)}%`;
}

export function metricsRows(report: MetricsReport): MetricsRow[] {
  return [
    { label: 'False negative', count: report.fn_count, ratio: formatRatio(report.fn_ratio) },
    { label: 'False positive', count: report.fp_count, ratio: formatRatio(report.fp_ratio) },
    { label: 'Total turns', count: report.total_turns, ratio: '100.00%' },
  ];
}

export interface FpComparison {
  before: number;
  after: number;
  improved: boolean;
  relativeDrop: number | null; // null when the starting ratio is zero
}

export function compareFp(before: MetricsReport, after: MetricsReport): FpComparison {
  const drop =
    before.fp_ratio > 0 ? (before.fp_ratio - after.fp_ratio) / before.fp_ratio : null;
  return {
    before: before.fp_ratio,
    after: after.fp_ratio,
    improved: after.fp_ratio <= before.fp_ratio,
    relativeDrop: drop,
  };
}
