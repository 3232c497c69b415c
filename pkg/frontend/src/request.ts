// Mapping from mask state to a search request. Total and injective over
// filled fields: every filled control lands in exactly one request field,
// nothing is silently dropped.

import { FormModel, MaskError, MaskRow, allRows, dateToScalar, intervalSlotValue } from "./mask.js";
import { DimRequestJson, SearchRequestJson } from "./types.js";

export interface RowState {
  sim?: string;
  min?: string;
  max?: string;
  g?: boolean;
  word?: string;
  tux?: string;
  // interval widgets: a label selected either as target or as condition
  intervalSim?: string;
  intervalCondition?: string;
}

export type FormState = Record<string, RowState>;

function scalarOf(row: MaskRow, raw: string): number {
  const text = raw.trim();
  if (row.widget === "date") {
    return dateToScalar(text, row.leaf.dateFormat);
  }
  const value = Number(text);
  if (!Number.isFinite(value)) {
    throw new MaskError(`${row.path}: not a number: ${raw}`);
  }
  return value;
}

export function buildRequest(
  model: FormModel,
  state: FormState,
  pcnt = 1000,
  offered?: boolean,
  wanted?: boolean,
): SearchRequestJson {
  const rows = new Map(allRows(model.root).map((row) => [row.path, row]));
  for (const path of Object.keys(state)) {
    if (!rows.has(path)) {
      throw new MaskError(`form state references unknown dimension ${path}`);
    }
  }
  const dims: DimRequestJson[] = [];
  for (const [path, row] of rows) {
    const rs = state[path];
    if (!rs) continue;
    const dim: DimRequestJson = { path };
    let filled = false;
    if (rs.sim !== undefined && rs.sim !== "") {
      dim.sim = scalarOf(row, rs.sim);
      filled = true;
    }
    if (rs.min !== undefined && rs.min !== "") {
      dim.min = scalarOf(row, rs.min);
      filled = true;
    }
    if (rs.max !== undefined && rs.max !== "") {
      dim.max = scalarOf(row, rs.max);
      filled = true;
    }
    if (rs.intervalSim) {
      dim.sim = intervalSlotValue(row.leaf.intervals ?? [], rs.intervalSim, "sim");
      filled = true;
    }
    if (rs.intervalCondition) {
      const lo = intervalSlotValue(row.leaf.intervals ?? [], rs.intervalCondition, "min");
      const hi = intervalSlotValue(row.leaf.intervals ?? [], rs.intervalCondition, "max");
      if (lo !== undefined) dim.min = lo;
      if (hi !== undefined) dim.max = hi;
      filled = true;
    }
    if (rs.word) {
      dim.word = rs.word;
      filled = true;
    }
    if (rs.tux) {
      dim.tux = rs.tux;
      filled = true;
    }
    if (rs.g) {
      dim.g = true;
      filled = true;
    }
    if (filled) {
      dims.push(dim);
    }
  }
  if (!dims.some((d) => d.sim !== undefined || d.min !== undefined || d.max !== undefined
      || d.word !== undefined || d.tux !== undefined)) {
    throw new MaskError("fill at least one sim, min/max, or text condition");
  }
  const request: SearchRequestJson = { dsi: model.dsi, dims, pcnt };
  if (offered !== undefined) request.offered = offered;
  if (wanted !== undefined) request.wanted = wanted;
  return request;
}
