import type { ComparisonModel, MethodSeries } from './comparison.js';
import { formatValue } from './format.js';

const WIDTH = 640;
const HEIGHT = 330;
const MARGIN = { top: 34, right: 18, bottom: 46, left: 18 };

const METHOD_COLOR: Record<string, string> = {
  uncorrected: '#d62728',
  'uncorrected+adj': '#ff9896',
  corrected: '#1f77b4',
  'corrected+adj': '#17becf',
};

function color(method: string): string {
  return METHOD_COLOR[method] ?? '#777777';
}

function esc(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

/**
 * Point-and-band chart of the comparison: one column group per sweep
 * value, one colored point per estimator with its uncertainty band, and
 * a dashed segment marking the true effect served with the run. All
 * labels come from payload numbers via formatValue.
 */
export function renderComparisonChart(model: ComparisonModel): string {
  if (model.series.length === 0 || model.values.length === 0) {
    return '<p class="empty">No result rows to chart.</p>';
  }

  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;

  let lo = Infinity;
  let hi = -Infinity;
  for (const s of model.series) {
    for (const p of s.points) {
      lo = Math.min(lo, p.bandLo);
      hi = Math.max(hi, p.bandHi);
    }
  }
  for (const t of model.truth) {
    lo = Math.min(lo, t.trueTe);
    hi = Math.max(hi, t.trueTe);
  }
  const span = hi - lo || 1;
  lo -= 0.08 * span;
  hi += 0.08 * span;
  const y = (v: number): number => MARGIN.top + ((hi - v) / (hi - lo)) * plotH;

  const nGroups = model.values.length;
  const groupW = plotW / nGroups;
  const xGroup = (i: number): number => MARGIN.left + (i + 0.5) * groupW;
  const k = model.series.length;
  const spacing = Math.min(34, (groupW * 0.7) / Math.max(k, 1));
  const xPoint = (i: number, j: number): number => xGroup(i) + (j - (k - 1) / 2) * spacing;

  const parts: string[] = [];
  parts.push(
    `<svg viewBox="0 0 ${WIDTH} ${HEIGHT}" role="img" aria-label="estimates with uncertainty bands" xmlns="http://www.w3.org/2000/svg">`,
  );

  // legend
  model.series.forEach((s, j) => {
    const x = MARGIN.left + j * 150;
    parts.push(
      `<rect x="${x}" y="10" width="12" height="12" fill="${color(s.method)}"></rect>`,
      `<text x="${x + 17}" y="20" class="legend">${esc(s.method)}</text>`,
    );
  });

  // truth reference per group
  model.truth.forEach((t, i) => {
    const cx = xGroup(i);
    const half = 0.45 * groupW;
    const ty = y(t.trueTe);
    parts.push(
      `<g class="truth" data-value="${t.value}">`,
      `<line x1="${(cx - half).toFixed(1)}" y1="${ty.toFixed(1)}" x2="${(cx + half).toFixed(1)}" y2="${ty.toFixed(1)}" stroke="#444" stroke-dasharray="5 4"></line>`,
      `<text x="${(cx + half).toFixed(1)}" y="${(ty - 5).toFixed(1)}" text-anchor="end" class="truth-label">truth ${formatValue(t.trueTe)}</text>`,
      `</g>`,
    );
  });

  // one series per method
  const renderSeries = (s: MethodSeries, j: number): void => {
    parts.push(`<g class="series" data-method="${esc(s.method)}" fill="${color(s.method)}" stroke="${color(s.method)}">`);
    s.points.forEach((p) => {
      const i = model.values.indexOf(p.value);
      const x = xPoint(i, j);
      const yLo = y(p.bandLo);
      const yHi = y(p.bandHi);
      const yMid = y(p.meanEstimate);
      const tip =
        `${s.method} at ${model.axis} = ${formatValue(p.value, 2)}: ` +
        `${formatValue(p.meanEstimate)} in [${formatValue(p.bandLo)}, ${formatValue(p.bandHi)}]`;
      parts.push(
        `<g class="point">`,
        `<title>${esc(tip)}</title>`,
        `<line x1="${x.toFixed(1)}" y1="${yLo.toFixed(1)}" x2="${x.toFixed(1)}" y2="${yHi.toFixed(1)}" stroke-width="2"></line>`,
        `<line x1="${(x - 5).toFixed(1)}" y1="${yLo.toFixed(1)}" x2="${(x + 5).toFixed(1)}" y2="${yLo.toFixed(1)}" stroke-width="2"></line>`,
        `<line x1="${(x - 5).toFixed(1)}" y1="${yHi.toFixed(1)}" x2="${(x + 5).toFixed(1)}" y2="${yHi.toFixed(1)}" stroke-width="2"></line>`,
        `<circle cx="${x.toFixed(1)}" cy="${yMid.toFixed(1)}" r="4.5"></circle>`,
        `</g>`,
      );
    });
    parts.push(`</g>`);
  };
  model.series.forEach(renderSeries);

  // group labels along the bottom
  model.values.forEach((value, i) => {
    parts.push(
      `<text x="${xGroup(i).toFixed(1)}" y="${HEIGHT - 24}" text-anchor="middle" class="axis-label">` +
        `${esc(model.axis)} = ${formatValue(value, 2)}</text>`,
    );
  });

  parts.push(`</svg>`);
  return parts.join('');
}
