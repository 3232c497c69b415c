// Single-page search console. Hash routes: #/ lists spaces, #/ds/<id> shows
// one space's search mask and results. The page is a pure client of the
// HTTP API; every number it displays comes verbatim from a response.

import { ApiFailure, Client } from "./api.js";
import { FormModel, MaskRow, MaskSection, maskModel } from "./mask.js";
import { FormState, buildRequest } from "./request.js";
import {
  LatestWins,
  hitTable,
  scatterPoints,
  scatterSvg,
  statsHeader,
} from "./render.js";
import { SearchResponseJson } from "./types.js";

const client = new Client("");
const latest = new LatestWins<SearchResponseJson>();

function el(tag: string, attrs: Record<string, string> = {}, text = ""): HTMLElement {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, v);
  }
  if (text) node.textContent = text;
  return node;
}

function root(): HTMLElement {
  return document.getElementById("app")!;
}

function errorPanel(target: HTMLElement, message: string) {
  target.querySelectorAll(".error").forEach((n) => n.remove());
  target.prepend(el("div", { class: "error" }, message));
}

// ---------------------------------------------------------------------------
// space list

async function renderSpaceList() {
  const container = root();
  container.replaceChildren();
  const heading = el("h1", {}, "Domain spaces");
  const input = el("input", { placeholder: "word search over first keywords" }) as HTMLInputElement;
  const list = el("table", { class: "spaces" });
  container.append(heading, input, list);

  async function refresh() {
    try {
      const { results } = await client.listSpaces(input.value);
      list.replaceChildren();
      const head = el("tr");
      for (const h of ["id", "s", "r", "space"]) head.append(el("th", {}, h));
      list.append(head);
      for (const s of results) {
        const row = el("tr");
        row.append(el("td", {}, String(s.id)));
        row.append(el("td", {}, String(s.s)));
        row.append(el("td", {}, String(s.r)));
        const link = el("a", { href: `#/ds/${s.id}` }, s.kw0 + (s.comment ? ` — ${s.comment}` : ""));
        const cell = el("td");
        cell.append(link);
        row.append(cell);
        list.append(row);
      }
    } catch (e) {
      errorPanel(container, String(e));
    }
  }
  input.addEventListener("input", refresh);
  await refresh();
}

// ---------------------------------------------------------------------------
// search mask

interface BoundInputs {
  row: MaskRow;
  sim?: HTMLInputElement;
  min?: HTMLInputElement;
  max?: HTMLInputElement;
  g?: HTMLInputElement;
  word?: HTMLInputElement;
  tux?: HTMLInputElement;
  intervalSim?: HTMLSelectElement;
  intervalCondition?: HTMLSelectElement;
}

function rowInputs(row: MaskRow, tr: HTMLElement): BoundInputs {
  const bound: BoundInputs = { row };
  const simCell = el("td");
  const minCell = el("td");
  const maxCell = el("td");
  const gCell = el("td");
  if (row.widget === "interval") {
    const mk = (slot: "intervalSim" | "intervalCondition") => {
      const select = el("select") as HTMLSelectElement;
      select.append(el("option", { value: "" }, "") as HTMLOptionElement);
      for (const iv of row.leaf.intervals ?? []) {
        select.append(el("option", { value: iv.label }, iv.label) as HTMLOptionElement);
      }
      bound[slot] = select;
      return select;
    };
    simCell.append(mk("intervalSim"));
    minCell.append(mk("intervalCondition"));
    maxCell.append(el("span", { class: "hint" }, "condition fills min+max"));
  } else if (row.widget === "text") {
    const word = el("input", { placeholder: "word" }) as HTMLInputElement;
    bound.word = word;
    simCell.append(word);
  } else if (row.widget === "tux") {
    const tux = el("input", { placeholder: "prefix", maxlength: "8" }) as HTMLInputElement;
    bound.tux = tux;
    simCell.append(tux);
  } else {
    const kind = row.widget === "date" ? "text" : "number";
    const mk = (slot: "sim" | "min" | "max") => {
      const input = el("input", { type: kind, step: "any" }) as HTMLInputElement;
      bound[slot] = input;
      return input;
    };
    simCell.append(mk("sim"));
    minCell.append(mk("min"));
    maxCell.append(mk("max"));
    const g = el("input", { type: "checkbox" }) as HTMLInputElement;
    bound.g = g;
    gCell.append(g);
  }
  const label = row.unit ? `${row.label} ${row.unit}` : row.label;
  tr.append(simCell, minCell, maxCell, gCell, el("td", {}, label));
  return bound;
}

function renderSection(section: MaskSection, table: HTMLElement, inputs: BoundInputs[]) {
  if (section.label) {
    const tr = el("tr", { class: "section" });
    tr.append(el("td", { colspan: "5" }, section.label));
    table.append(tr);
  }
  for (const row of section.rows) {
    const tr = el("tr");
    inputs.push(rowInputs(row, tr));
    table.append(tr);
  }
  for (const sub of section.sections) {
    renderSection(sub, table, inputs);
  }
}

function collectState(inputs: BoundInputs[]): FormState {
  const state: FormState = {};
  for (const b of inputs) {
    const rs: Record<string, unknown> = {};
    if (b.sim?.value) rs.sim = b.sim.value;
    if (b.min?.value) rs.min = b.min.value;
    if (b.max?.value) rs.max = b.max.value;
    if (b.g?.checked) rs.g = true;
    if (b.word?.value) rs.word = b.word.value;
    if (b.tux?.value) rs.tux = b.tux.value;
    if (b.intervalSim?.value) rs.intervalSim = b.intervalSim.value;
    if (b.intervalCondition?.value) rs.intervalCondition = b.intervalCondition.value;
    if (Object.keys(rs).length) {
      state[b.row.path] = rs as FormState[string];
    }
  }
  return state;
}

async function renderSpace(ref: string) {
  const container = root();
  container.replaceChildren(el("p", {}, "loading…"));
  let model: FormModel;
  try {
    const tree = await client.definitionTree(ref);
    model = maskModel(tree.root, (dsi) => tree.resolved.get(dsi));
  } catch (e) {
    container.replaceChildren();
    errorPanel(container, `cannot build search mask: ${e}`);
    return;
  }
  container.replaceChildren();
  container.append(el("h1", {}, model.title));
  container.append(el("a", { href: "#/" }, "← all spaces"));

  const form = el("table", { class: "mask" });
  const head = el("tr");
  for (const h of ["sim", "min", "max", "g", "dimension"]) head.append(el("th", {}, h));
  form.append(head);
  const inputs: BoundInputs[] = [];
  renderSection(model.root, form, inputs);
  const pcnt = el("input", { type: "number", value: "1000", min: "1", max: "1000" }) as HTMLInputElement;
  const submit = el("button", {}, "search") as HTMLButtonElement;
  if (inputs.length === 0) submit.disabled = true;
  const results = el("div", { class: "results" });
  container.append(form, el("label", {}, "pcnt: "), pcnt, submit, results);

  submit.addEventListener("click", async () => {
    const ticket = latest.begin();
    try {
      const request = buildRequest(model, collectState(inputs), Number(pcnt.value));
      const response = await client.search(request);
      latest.accept(ticket, (r: SearchResponseJson) => renderResults(results, r))(response);
    } catch (e) {
      // the form keeps its state; only the result area shows the failure
      errorPanel(results, e instanceof ApiFailure ? e.message : String(e));
    }
  });
}

// ---------------------------------------------------------------------------
// results

function renderResults(target: HTMLElement, response: SearchResponseJson) {
  target.replaceChildren();
  for (const s of statsHeader(response)) {
    target.append(
      el("div", { class: "stats" },
         `${s.path}: av= ${s.av} sd= ${s.sd} min= ${s.min} max= ${s.max}`),
    );
  }
  const points = scatterPoints(response);
  if (points.length) {
    const holder = el("div", { class: "plot" });
    holder.innerHTML = scatterSvg(points);
    target.append(holder);
  }
  const view = hitTable(response);
  const table = el("table", { class: "hits" });
  const head = el("tr");
  for (const h of ["c", "d", "a", "keyword", "comment", ...view.columns]) {
    head.append(el("th", {}, h));
  }
  table.append(head);
  for (const row of view.rows) {
    const tr = el("tr");
    const link = el("a", { href: "#" }, String(row.c));
    link.addEventListener("click", (ev) => {
      ev.preventDefault();
      void showDetail(target, row.c);
    });
    const cCell = el("td");
    cCell.append(link);
    tr.append(cCell);
    tr.append(el("td", {}, String(row.d)));
    tr.append(el("td", {}, String(row.a)));
    tr.append(el("td", {}, row.keyword));
    tr.append(el("td", {}, row.comment));
    for (const cell of row.cells) {
      tr.append(el("td", {}, cell === null ? "" : String(cell)));
    }
    table.append(tr);
  }
  target.append(table);
  target.append(el("p", {}, `${view.rows.length} of ${view.total} match(es)`));
}

async function showDetail(target: HTMLElement, c: number) {
  try {
    const detail = await client.dvDetail(c);
    const panel = el("div", { class: "detail" });
    panel.append(el("h2", {}, `record ${detail.c} (a=${detail.a})`));
    if (detail.keycomment) {
      panel.append(el("p", {},
                      `${detail.keycomment.kw0}${detail.keycomment.comment ? " || " + detail.keycomment.comment : ""}`));
    }
    if (detail.resource) {
      const p = el("p");
      p.append(el("a", { href: detail.resource }, detail.resource));
      panel.append(p);
    }
    for (const member of detail.members) {
      panel.append(el("h3", {}, member.dsi));
      const table = el("table", { class: "detail-values" });
      for (const [path, value] of Object.entries(member.values)) {
        const tr = el("tr");
        tr.append(el("td", {}, value));
        tr.append(el("td", {}, path));
        table.append(tr);
      }
      panel.append(table);
    }
    const close = el("button", {}, "close") as HTMLButtonElement;
    close.addEventListener("click", () => panel.remove());
    panel.append(close);
    target.querySelectorAll(".detail").forEach((n) => n.remove());
    target.prepend(panel);
  } catch (e) {
    errorPanel(target, String(e));
  }
}

// ---------------------------------------------------------------------------
// routing

function route() {
  const hash = window.location.hash || "#/";
  const match = /^#\/ds\/(.+)$/.exec(hash);
  if (match) {
    void renderSpace(decodeURIComponent(match[1]));
  } else {
    void renderSpaceList();
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  window.addEventListener("hashchange", route);
  window.addEventListener("DOMContentLoaded", route);
}
