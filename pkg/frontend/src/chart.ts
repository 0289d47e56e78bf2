/**
 * Dependency-free canvas line chart for the rolling snapshot windows.
 * Coordinate mapping lives in computeScale so it can be tested headless.
 */

import type { SeriesPoint } from "./types.js";

export interface ChartScale {
  xOf(ts: number): number;
  yOf(value: number): number;
  vMin: number;
  vMax: number;
}

export function computeScale(points: SeriesPoint[], width: number,
                             height: number, pad = 8): ChartScale {
  const first = points[0];
  const last = points[points.length - 1];
  const tMin = first ? first.ts : 0;
  const tMax = last && last.ts !== tMin ? last.ts : tMin + 1;
  let vMin = Infinity;
  let vMax = -Infinity;
  for (const p of points) {
    if (p.value < vMin) vMin = p.value;
    if (p.value > vMax) vMax = p.value;
  }
  if (!points.length) {
    vMin = 0;
    vMax = 1;
  }
  if (vMax - vMin < 1e-9) {
    // flat series: open a band so the line sits mid-chart
    vMin -= 0.5;
    vMax += 0.5;
  }
  const xSpan = width - 2 * pad;
  const ySpan = height - 2 * pad;
  return {
    vMin,
    vMax,
    xOf: (ts) => pad + ((ts - tMin) / (tMax - tMin)) * xSpan,
    yOf: (value) => pad + (1 - (value - vMin) / (vMax - vMin)) * ySpan,
  };
}

export function drawChart(canvas: HTMLCanvasElement, points: SeriesPoint[],
                          color: string): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  if (!points.length) return;

  const scale = computeScale(points, width, height);
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  points.forEach((p, i) => {
    const x = scale.xOf(p.ts);
    const y = scale.yOf(p.value);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();

  ctx.fillStyle = "#8b949e";
  ctx.font = "10px monospace";
  ctx.fillText(scale.vMax.toFixed(2), 2, 10);
  ctx.fillText(scale.vMin.toFixed(2), 2, height - 2);
}
