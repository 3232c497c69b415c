// View models for the result screen. Values come from the response JSON
// verbatim: the console never recomputes or reformats a number it shows.

import { SearchResponseJson } from "./types.js";

export interface HitRowView {
  c: number;
  d: number;
  a: number;
  keyword: string;
  comment: string;
  cells: (number | string | null)[];
}

export interface HitTableView {
  columns: string[];
  rows: HitRowView[];
  total: number;
}

export interface StatsEntryView {
  path: string;
  av: number;
  sd: number;
  min: number;
  max: number;
}

export function hitColumns(response: SearchResponseJson): string[] {
  const seen = new Set<string>();
  const columns: string[] = [];
  for (const hit of response.hits) {
    for (const path of Object.keys(hit.values)) {
      if (!seen.has(path)) {
        seen.add(path);
        columns.push(path);
      }
    }
  }
  return columns;
}

export function hitTable(response: SearchResponseJson, columns?: string[]): HitTableView {
  const cols = columns ?? hitColumns(response);
  const rows = response.hits.map((hit) => ({
    c: hit.c,
    d: hit.d,
    a: hit.a,
    keyword: hit.keycomment?.kw0 ?? "",
    comment: hit.keycomment?.comment ?? "",
    cells: cols.map((path) => (path in hit.values ? hit.values[path] : null)),
  }));
  return { columns: cols, rows, total: response.total };
}

export function statsHeader(response: SearchResponseJson): StatsEntryView[] {
  return Object.entries(response.stats).map(([path, s]) => ({
    path,
    av: s.av,
    sd: s.sd,
    min: s.min,
    max: s.max,
  }));
}

export function scatterPoints(response: SearchResponseJson): [number, number][] {
  return response.scatter ?? [];
}

/** Plain SVG scatter plot; no chart dependency. */
export function scatterSvg(
  points: [number, number][],
  width = 420,
  height = 260,
  pad = 30,
): string {
  if (points.length === 0) {
    return `<svg width="${width}" height="${height}"></svg>`;
  }
  const xs = points.map((p) => p[0]);
  const ys = points.map((p) => p[1]);
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const sx = (x: number) => pad + ((x - x0) / (x1 - x0 || 1)) * (width - 2 * pad);
  const sy = (y: number) => height - pad - ((y - y0) / (y1 - y0 || 1)) * (height - 2 * pad);
  const dots = points
    .map(([x, y]) => `<circle cx="${sx(x).toFixed(1)}" cy="${sy(y).toFixed(1)}" r="2.5"/>`)
    .join("");
  const frame =
    `<rect x="${pad}" y="${pad}" width="${width - 2 * pad}" height="${height - 2 * pad}" ` +
    `fill="none" stroke="#999"/>`;
  return `<svg width="${width}" height="${height}" class="scatter">${frame}${dots}</svg>`;
}

/** Keeps only the newest in-flight response: searches may overlap and an
 *  older answer must never overwrite a newer one. */
export class LatestWins<T> {
  private seq = 0;

  begin(): number {
    return ++this.seq;
  }

  accept(ticket: number, apply: (value: T) => void): (value: T) => void {
    return (value: T) => {
      if (ticket === this.seq) {
        apply(value);
      }
    };
  }
}
