// Search-mask model generation: one section per branch, one row per leaf,
// widgets chosen by dimension kind. Built entirely from definition JSON.

import {
  DefinitionJson,
  DimensionJson,
  IntervalJson,
  LeafContentJson,
} from "./types.js";

export type Widget = "number" | "date" | "interval" | "tux" | "text";

export interface RowControls {
  sim: boolean;
  min: boolean;
  max: boolean;
  g: boolean;
  word: boolean;
  tux: boolean;
}

export interface MaskRow {
  path: string;
  label: string;
  unit?: string;
  widget: Widget;
  leaf: LeafContentJson;
  controls: RowControls;
}

export interface MaskSection {
  label: string;
  path: string;
  rows: MaskRow[];
  sections: MaskSection[];
}

export interface FormModel {
  dsi: string;
  title: string;
  root: MaskSection;
}

export class MaskError extends Error {}

export type Resolver = (dsi: string) => DefinitionJson | undefined;

function widgetFor(leaf: LeafContentJson): Widget {
  switch (leaf.kind) {
    case "integer":
    case "money":
    case "float-medium":
    case "float-max":
      return "number";
    case "date":
      return "date";
    case "list":
      return "interval";
    case "tux":
      return "tux";
    case "text":
      return "text";
    default:
      throw new MaskError(`unknown dimension kind ${leaf.kind}`);
  }
}

function controlsFor(widget: Widget): RowControls {
  if (widget === "text") {
    return { sim: false, min: false, max: false, g: false, word: true, tux: false };
  }
  if (widget === "tux") {
    return { sim: false, min: false, max: false, g: false, word: false, tux: true };
  }
  return { sim: true, min: true, max: true, g: true, word: false, tux: false };
}

function unitOf(dim: DimensionJson): string | undefined {
  const kws = dim.pair?.fixed?.keywords ?? [];
  return kws.length > 1 ? kws[1].text : undefined;
}

// display order: rank when present, original position otherwise (stable)
function displayOrder(dims: DimensionJson[]): DimensionJson[] {
  return dims
    .map((dim, index) => ({ dim, key: dim.rank ?? index, index }))
    .sort((a, b) => (a.key === b.key ? a.index - b.index : a.key - b.key))
    .map((entry) => entry.dim);
}

function buildSection(
  definition: DefinitionJson,
  label: string,
  prefix: string,
  resolve: Resolver,
  depth: number,
): MaskSection {
  if (!definition || !Array.isArray(definition.dimensions)) {
    throw new MaskError(`malformed definition at ${label || definition?.dsi}`);
  }
  const section: MaskSection = { label, path: prefix.replace(/\/$/, ""), rows: [], sections: [] };
  for (const dim of displayOrder(definition.dimensions)) {
    if (!dim || typeof dim.di !== "string" || !dim.content) {
      throw new MaskError(`malformed dimension in ${definition.dsi}`);
    }
    const path = prefix + dim.di;
    if (dim.content.branch) {
      if (depth <= 0) {
        continue; // circular definitions are cut like the engine cuts them
      }
      const sub = resolve(dim.content.branch.dsi);
      if (!sub) {
        throw new MaskError(`unresolved branch ${dim.content.branch.dsi}`);
      }
      section.sections.push(buildSection(sub, dim.di, path + "/", resolve, depth - 1));
      continue;
    }
    const leaf: LeafContentJson | undefined =
      dim.content.leaf ?? (dim.content.computed ? { kind: "float-max" } : undefined);
    if (!leaf) {
      throw new MaskError(`dimension ${path} has no renderable content`);
    }
    const widget = widgetFor(leaf);
    section.rows.push({
      path,
      label: dim.di,
      unit: unitOf(dim),
      widget,
      leaf,
      controls: controlsFor(widget),
    });
  }
  return section;
}

/** Build the whole form model; throws MaskError on any malformed input so
 *  the caller shows an error panel instead of a partial form. */
export function maskModel(
  definition: DefinitionJson,
  resolve: Resolver = () => undefined,
  depthLimit = 8,
): FormModel {
  const root = buildSection(definition, "", "", resolve, depthLimit);
  return {
    dsi: definition.dsi,
    title: definition.pair?.fixed?.keywords?.[0]?.text ?? definition.dsi,
    root,
  };
}

export function allRows(section: MaskSection): MaskRow[] {
  const out = [...section.rows];
  for (const sub of section.sections) {
    out.push(...allRows(sub));
  }
  return out;
}

// ---------------------------------------------------------------------------
// interval dropdown semantics

export interface IntervalBounds {
  lower?: number;
  upper?: number;
}

/** Effective borders: a missing lower border is the previous upper one. */
export function effectiveBounds(intervals: IntervalJson[], index: number): IntervalBounds {
  const iv = intervals[index];
  const lower = iv.lower ?? (index > 0 ? intervals[index - 1].upper : undefined);
  return { lower, upper: iv.upper };
}

/** What a selected interval label contributes to one slot of the mask:
 *  as similarity target it is the interval mean (or the single existing
 *  border); as a condition its borders land in min/max. */
export function intervalSlotValue(
  intervals: IntervalJson[],
  label: string,
  slot: "sim" | "min" | "max",
): number | undefined {
  const index = intervals.findIndex((iv) => iv.label === label);
  if (index < 0) {
    throw new MaskError(`unknown interval label ${label}`);
  }
  const { lower, upper } = effectiveBounds(intervals, index);
  if (slot === "sim") {
    if (lower !== undefined && upper !== undefined) return (lower + upper) / 2;
    return lower ?? upper ?? 0;
  }
  return slot === "min" ? lower : upper;
}

/** Canonical scalar of a date input at the row's declared resolution:
 *  seconds since 1970-01-01T00:00:00Z, missing trailing fields = interval
 *  start; time-only formats count seconds from midnight. */
export function dateToScalar(raw: string, format?: string): number {
  const fmt = format ?? "yyyy-mm-dd hh:mm:ss";
  if (fmt === "hh:mm" || fmt === "hh:mm:ss") {
    const m = /^(\d{2}):(\d{2})(?::(\d{2}))?$/.exec(raw.trim());
    if (!m) throw new MaskError(`not a ${fmt} time: ${raw}`);
    return Number(m[1]) * 3600 + Number(m[2]) * 60 + Number(m[3] ?? 0);
  }
  const m = /^(\d{4})(?:-(\d{2})(?:-(\d{2})(?: (\d{2})(?::(\d{2})(?::(\d{2}))?)?)?)?)?$/.exec(
    raw.trim(),
  );
  if (!m) throw new MaskError(`not a date: ${raw}`);
  const [y, mo, d, h, mi, s] = [
    Number(m[1]),
    m[2] ? Number(m[2]) : 1,
    m[3] ? Number(m[3]) : 1,
    m[4] ? Number(m[4]) : 0,
    m[5] ? Number(m[5]) : 0,
    m[6] ? Number(m[6]) : 0,
  ];
  // setUTCFullYear avoids Date.UTC's two-digit-year remapping of 0..99
  const date = new Date(0);
  date.setUTCFullYear(y, mo - 1, d);
  date.setUTCHours(h, mi, s, 0);
  return date.getTime() / 1000;
}
