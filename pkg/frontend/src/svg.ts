/**
 * Deterministic SVG emission: fixed canvas, fixed fonts, fixed number
 * formatting, no timestamps. The same figure model always serializes to the
 * same bytes.
 */

import { Figure, Guide, Series } from './figures.js';
import { Scale, extent, fmt, linearScale, logScale, padLinear, padLog } from './scale.js';

const W = 720;
const H = 480;
const MARGIN = { left: 72, right: 168, top: 34, bottom: 52 };

const PALETTE = ['#1b6ca8', '#d1495b', '#3a7d44', '#8d5a97', '#c77d1e', '#4a4e69', '#0f8b8d'];

function esc(s: string): string {
  return s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

function px(v: number): string {
  return (Math.round(v * 100) / 100).toFixed(2);
}

function seriesPath(points: [number, number][], xs: Scale, ys: Scale, step: boolean): string {
  const cmds: string[] = [];
  let prevY: number | null = null;
  for (const [x, y] of points) {
    const X = xs.toPixel(x);
    const Y = ys.toPixel(y);
    if (cmds.length === 0) {
      cmds.push(`M ${px(X)} ${px(Y)}`);
    } else if (step && prevY !== null) {
      cmds.push(`L ${px(X)} ${px(prevY)}`, `L ${px(X)} ${px(Y)}`);
    } else {
      cmds.push(`L ${px(X)} ${px(Y)}`);
    }
    prevY = Y;
  }
  return cmds.join(' ');
}

function guidePath(g: Guide, xs: Scale, ys: Scale): string {
  // power law through the anchor in log-log space, clipped to the x-domain
  const [x0, x1] = xs.domain;
  const y = (x: number) => g.anchor[1] * Math.pow(x / g.anchor[0], g.slope);
  const clip = (x: number) => Math.min(Math.max(y(x), ys.domain[0]), ys.domain[1]);
  const xa = x0;
  const xb = x1;
  return `M ${px(xs.toPixel(xa))} ${px(ys.toPixel(clip(xa)))} L ${px(xs.toPixel(xb))} ${px(ys.toPixel(clip(xb)))}`;
}

export function renderSvg(fig: Figure): string {
  const xsAll = fig.series.flatMap((s) => s.points.map((p) => p[0])).concat(fig.vlines);
  const ysAll = fig.series.flatMap((s) => s.points.map((p) => p[1]));
  const xDom = fig.xLog ? padLog(extent(xsAll)) : padLinear(extent(xsAll));
  const yDom = fig.yLog ? padLog(extent(ysAll)) : padLinear(extent(ysAll));
  const xs = (fig.xLog ? logScale : linearScale)(xDom[0], xDom[1], MARGIN.left, W - MARGIN.right);
  const ys = (fig.yLog ? logScale : linearScale)(yDom[0], yDom[1], H - MARGIN.bottom, MARGIN.top);

  const out: string[] = [];
  out.push('<?xml version="1.0" encoding="UTF-8"?>');
  out.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}" font-family="DejaVu Sans, sans-serif">`,
  );
  out.push(`<rect width="${W}" height="${H}" fill="#ffffff"/>`);
  out.push(`<text x="${px(W / 2)}" y="20" text-anchor="middle" font-size="14">${esc(fig.title)}</text>`);

  // gridlines and ticks
  for (const t of xs.ticks()) {
    const X = px(xs.toPixel(t));
    out.push(`<line x1="${X}" y1="${MARGIN.top}" x2="${X}" y2="${H - MARGIN.bottom}" stroke="#e5e5e5" stroke-width="1"/>`);
    out.push(
      `<text x="${X}" y="${H - MARGIN.bottom + 16}" text-anchor="middle" font-size="10">${esc(fmt(t))}</text>`,
    );
  }
  for (const t of ys.ticks()) {
    const Y = px(ys.toPixel(t));
    out.push(`<line x1="${MARGIN.left}" y1="${Y}" x2="${W - MARGIN.right}" y2="${Y}" stroke="#e5e5e5" stroke-width="1"/>`);
    out.push(
      `<text x="${MARGIN.left - 6}" y="${Y}" text-anchor="end" dominant-baseline="middle" font-size="10">${esc(fmt(t))}</text>`,
    );
  }
  out.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${W - MARGIN.left - MARGIN.right}" height="${H - MARGIN.top - MARGIN.bottom}" fill="none" stroke="#333333" stroke-width="1"/>`,
  );
  out.push(
    `<text x="${px((MARGIN.left + W - MARGIN.right) / 2)}" y="${H - 12}" text-anchor="middle" font-size="12">${esc(fig.xLabel)}</text>`,
  );
  out.push(
    `<text x="18" y="${px((MARGIN.top + H - MARGIN.bottom) / 2)}" text-anchor="middle" font-size="12" transform="rotate(-90 18 ${px((MARGIN.top + H - MARGIN.bottom) / 2)})">${esc(fig.yLabel)}</text>`,
  );

  // vertical markers
  for (const xv of fig.vlines) {
    const X = px(xs.toPixel(xv));
    out.push(`<line x1="${X}" y1="${MARGIN.top}" x2="${X}" y2="${H - MARGIN.bottom}" stroke="#222222" stroke-width="1.5" class="marker"/>`);
  }

  // slope guides (dashed, behind the data)
  for (const g of fig.guides) {
    out.push(`<path d="${guidePath(g, xs, ys)}" fill="none" stroke="#888888" stroke-width="1" stroke-dasharray="6,4" class="guide"/>`);
    const lx = xs.toPixel(g.anchor[0]);
    const ly = ys.toPixel(g.anchor[1]);
    out.push(
      `<text x="${px(lx + 4)}" y="${px(ly + 12)}" font-size="10" fill="#666666">${esc(g.label)}</text>`,
    );
  }

  // series
  fig.series.forEach((s: Series) => {
    const color = PALETTE[s.colorIndex % PALETTE.length];
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : '';
    if (s.points.length > 1) {
      out.push(
        `<path d="${seriesPath(s.points, xs, ys, !!s.step)}" fill="none" stroke="${color}" stroke-width="1.6"${dash} class="series"/>`,
      );
    }
    if (s.marker || s.points.length === 1) {
      for (const [x, y] of s.points) {
        out.push(
          `<circle cx="${px(xs.toPixel(x))}" cy="${px(ys.toPixel(y))}" r="2.6" fill="${color}" class="series-marker"/>`,
        );
      }
    }
  });

  // legend (deduplicated labels, right margin)
  const seen = new Set<string>();
  let ly = MARGIN.top + 8;
  out.push(`<g class="legend">`);
  for (const s of fig.series) {
    if (seen.has(s.label)) continue;
    seen.add(s.label);
    if (ly > H - MARGIN.bottom) break;
    const color = PALETTE[s.colorIndex % PALETTE.length];
    const x0 = W - MARGIN.right + 10;
    out.push(`<line x1="${x0}" y1="${px(ly)}" x2="${x0 + 18}" y2="${px(ly)}" stroke="${color}" stroke-width="1.6"/>`);
    out.push(`<text x="${x0 + 24}" y="${px(ly + 3.5)}" font-size="11">${esc(s.label)}</text>`);
    ly += 16;
  }
  out.push('</g>');
  out.push('</svg>');
  return out.join('\n') + '\n';
}
