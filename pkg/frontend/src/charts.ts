// SVG chart builders. These scale values to pixels and nothing else: every
// rendered figure carries its source number in a data-value attribute so
// tests can check the chart shows exactly what the API sent.

import type { Histogram, RoundSummary } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export const SERIES_COLORS = [
  "#38bdf8", "#f472b6", "#a78bfa", "#fbbf24", "#34d399",
  "#fb923c", "#60a5fa", "#f87171", "#4ade80", "#c084fc",
];

function svg(width: number, height: number, testid: string): SVGSVGElement {
  const el = document.createElementNS(SVG_NS, "svg");
  el.setAttribute("viewBox", `0 0 ${width} ${height}`);
  el.setAttribute("width", String(width));
  el.setAttribute("height", String(height));
  el.dataset.testid = testid;
  return el;
}

function rect(x: number, y: number, w: number, h: number, fill: string): SVGRectElement {
  const el = document.createElementNS(SVG_NS, "rect");
  el.setAttribute("x", String(x));
  el.setAttribute("y", String(y));
  el.setAttribute("width", String(Math.max(w, 0)));
  el.setAttribute("height", String(Math.max(h, 0)));
  el.setAttribute("fill", fill);
  return el;
}

/** Score distribution for one round: one bar per histogram bin. */
export function histogramChart(histogram: Histogram, width = 320, height = 120): SVGSVGElement {
  const chart = svg(width, height, "histogram-chart");
  const peak = Math.max(...histogram.counts, 1);
  const barWidth = width / histogram.counts.length;
  histogram.counts.forEach((count, i) => {
    const barHeight = (count / peak) * (height - 12);
    const bar = rect(i * barWidth + 1, height - barHeight, barWidth - 2, barHeight, "#38bdf8");
    bar.dataset.value = String(count);
    bar.dataset.binStart = String(histogram.bin_edges[i]);
    chart.appendChild(bar);
  });
  return chart;
}

/** Best-so-far line across rounds; y axis is the score range [0, 1]. */
export function bestSoFarChart(values: number[], width = 320, height = 120): SVGSVGElement {
  const chart = svg(width, height, "best-so-far-chart");
  if (values.length === 0) return chart;
  const stepX = values.length > 1 ? (width - 20) / (values.length - 1) : 0;
  const points = values.map((v, i) => {
    const x = 10 + i * stepX;
    const y = height - 10 - v * (height - 20);
    return { x, y, v };
  });
  const line = document.createElementNS(SVG_NS, "polyline");
  line.setAttribute("points", points.map((p) => `${p.x},${p.y}`).join(" "));
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", "#34d399");
  line.setAttribute("stroke-width", "2");
  chart.appendChild(line);
  for (const p of points) {
    const dot = document.createElementNS(SVG_NS, "circle");
    dot.setAttribute("cx", String(p.x));
    dot.setAttribute("cy", String(p.y));
    dot.setAttribute("r", "3");
    dot.setAttribute("fill", "#34d399");
    dot.dataset.value = String(p.v);
    chart.appendChild(dot);
  }
  return chart;
}

/** Stacked per-ingredient composition totals, one bar per round. */
export function compositionChart(
  rounds: RoundSummary[],
  keys: string[],
  width = 320,
  height = 160,
): SVGSVGElement {
  const chart = svg(width, height, "composition-chart");
  if (rounds.length === 0) return chart;
  const totals = rounds.map((r) =>
    keys.reduce((acc, k) => acc + (r.composition_totals[k] ?? 0), 0),
  );
  const scale = Math.max(...totals, 1e-9);
  const slot = width / rounds.length;
  rounds.forEach((round, i) => {
    let y = height - 4;
    keys.forEach((key, j) => {
      const value = round.composition_totals[key] ?? 0;
      const h = (value / scale) * (height - 24);
      y -= h;
      const bar = rect(i * slot + 6, y, slot - 12, h, SERIES_COLORS[j % SERIES_COLORS.length]);
      bar.dataset.value = String(value);
      bar.dataset.ingredient = key;
      bar.dataset.round = String(round.round);
      chart.appendChild(bar);
    });
  });
  return chart;
}

export function chartLegend(keys: string[]): HTMLElement {
  const legend = document.createElement("div");
  legend.className = "legend";
  keys.forEach((key, i) => {
    const item = document.createElement("span");
    item.className = "legend-item";
    const swatch = document.createElement("span");
    swatch.className = "swatch";
    swatch.style.background = SERIES_COLORS[i % SERIES_COLORS.length];
    item.appendChild(swatch);
    item.appendChild(document.createTextNode(key));
    legend.appendChild(item);
  });
  return legend;
}
