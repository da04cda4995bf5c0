// Posterior chart as plain SVG markup: the continuous density curve, the
// credible-interval band, and a point-mass marker at q = 0. Pure string
// builders so the test suite runs without a DOM.

import type { PosteriorResult } from './types.js';

export interface ChartLayout {
  width: number;
  height: number;
  padding: number;
}

export const DEFAULT_LAYOUT: ChartLayout = { width: 640, height: 240, padding: 24 };

function scaleX(q: number, layout: ChartLayout): number {
  return layout.padding + q * (layout.width - 2 * layout.padding);
}

function scaleY(value: number, max: number, layout: ChartLayout): number {
  const inner = layout.height - 2 * layout.padding;
  return layout.height - layout.padding - (max > 0 ? (value / max) * inner : 0);
}

/** SVG path of the density curve over the q grid. */
export function densityPath(
  result: PosteriorResult,
  layout: ChartLayout = DEFAULT_LAYOUT,
): string {
  const max = Math.max(...result.q_density);
  return result.q_grid
    .map((q, i) => {
      const command = i === 0 ? 'M' : 'L';
      const x = scaleX(q, layout).toFixed(2);
      const y = scaleY(result.q_density[i]!, max, layout).toFixed(2);
      return `${command}${x},${y}`;
    })
    .join(' ');
}

export function ciBand(
  result: PosteriorResult,
  layout: ChartLayout = DEFAULT_LAYOUT,
): { x: number; width: number } {
  const [lo, hi] = result.q_ci;
  const x = scaleX(lo, layout);
  return { x, width: Math.max(0, scaleX(hi, layout) - x) };
}

export function chartSvg(
  result: PosteriorResult,
  layout: ChartLayout = DEFAULT_LAYOUT,
): string {
  const band = ciBand(result, layout);
  const pointMassHeight =
    (layout.height - 2 * layout.padding) * Math.min(1, result.point_mass);
  const baseline = layout.height - layout.padding;
  return [
    `<svg viewBox="0 0 ${layout.width} ${layout.height}" class="posterior-chart">`,
    `<rect class="ci-band" x="${band.x.toFixed(2)}" y="${layout.padding}" ` +
      `width="${band.width.toFixed(2)}" height="${layout.height - 2 * layout.padding}"/>`,
    `<line class="axis" x1="${layout.padding}" y1="${baseline}" ` +
      `x2="${layout.width - layout.padding}" y2="${baseline}"/>`,
    `<path class="density" d="${densityPath(result, layout)}"/>`,
    result.point_mass > 0
      ? `<line class="point-mass" x1="${scaleX(0, layout)}" y1="${baseline}" ` +
        `x2="${scaleX(0, layout)}" y2="${(baseline - pointMassHeight).toFixed(2)}"/>`
      : '',
    `</svg>`,
  ]
    .filter(Boolean)
    .join('\n');
}

export function chartCaption(result: PosteriorResult): string {
  const [lo, hi] = result.q_ci;
  return (
    `p(outbreak) = ${result.p_T1.toFixed(4)} | ` +
    `E[q] = ${result.q_mean.toFixed(4)} | ` +
    `95% CI [${lo.toFixed(4)}, ${hi.toFixed(4)}] | ` +
    `point mass at 0: ${result.point_mass.toFixed(4)}`
  );
}
