/** DOM wiring: one design session against one service instance.
 * All science lives server-side; this file only moves JSON around and
 * renders the pure views in chart.ts / table.ts. */

import { ServiceClient, ServiceError } from "./api.js";
import { renderTraceChart } from "./chart.js";
import {
  DEFAULT_RUN_SETTINGS,
  emptyConstraints,
  toConfig,
  validateConstraints,
  type ConstraintSet,
  type GroupPin,
} from "./constraints.js";
import { rawToken } from "./ndjson.js";
import { initialState, reduce, type SessionState } from "./store.js";
import {
  attachDisplayTokens,
  sortCandidates,
  whatIfSpec,
  type DisplayCandidate,
  type SortKey,
} from "./table.js";
import { REGIONS, type Candidate, type Vocabulary } from "./types.js";

const client = new ServiceClient("");

let vocab: Vocabulary;
let constraints: ConstraintSet = emptyConstraints();
let session: SessionState = initialState();
let runId: string | null = null;
let sortKey: SortKey = "g";
let rows: DisplayCandidate[] = [];
let streamAbort: AbortController | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function renderConstraints(): void {
  const host = el<HTMLDivElement>("constraints");
  const cyclePin: Record<GroupPin, GroupPin> = {
    free: "pinned",
    pinned: "forbidden",
    forbidden: "free",
  };
  host.replaceChildren();
  for (const region of REGIONS) {
    const box = document.createElement("fieldset");
    const legend = document.createElement("legend");
    legend.textContent = region;
    box.append(legend);
    for (const g of vocab[region]) {
      const pin = constraints.groups[region][g.name] ?? "free";
      const btn = document.createElement("button");
      btn.textContent = `${g.name}${pin === "free" ? "" : ` (${pin})`}`;
      btn.className = `pin ${pin}`;
      btn.onclick = () => {
        constraints.groups[region][g.name] = cyclePin[pin];
        renderConstraints();
      };
      box.append(btn);
    }
    host.append(box);
  }
  const connBox = document.createElement("fieldset");
  const legend = document.createElement("legend");
  legend.textContent = "connector";
  connBox.append(legend);
  const select = document.createElement("select");
  select.append(new Option("(free)", ""));
  for (const k of vocab.connectors) select.append(new Option(k.name, k.name));
  select.value = constraints.connector ?? "";
  select.onchange = () => {
    constraints.connector = select.value || null;
  };
  connBox.append(select);
  host.append(connBox);

  const errors = validateConstraints(constraints, vocab);
  el<HTMLUListElement>("validation").replaceChildren(
    ...errors.map((e) => {
      const li = document.createElement("li");
      li.textContent = e;
      return li;
    }),
  );
  el<HTMLButtonElement>("start").disabled = errors.length > 0;
}

function renderTrace(): void {
  el<HTMLDivElement>("chart").innerHTML = renderTraceChart(session.trace);
  el<HTMLSpanElement>("run-state").textContent = session.runState ?? "-";
}

function renderTable(): void {
  const tbody = el<HTMLTableSectionElement>("candidates");
  tbody.replaceChildren();
  for (const row of sortCandidates(rows, sortKey)) {
    const tr = document.createElement("tr");
    const cells = [
      row.composition,
      row.tokens.mu ?? "-",
      row.tokens.alpha_pol ?? "-",
      row.tokens.gap ?? "-",
      row.tokens.ln_beta ?? "-",
      row.tokens.g ?? "-",
    ];
    for (const text of cells) {
      const td = document.createElement("td");
      td.textContent = text;
      tr.append(td);
    }
    tr.onclick = () => openWhatIf(row.candidate);
    tbody.append(tr);
  }
}

async function refreshCandidates(): Promise<void> {
  if (!runId) return;
  const { data, raw } = await client.getRun(runId);
  rows = attachDisplayTokens(data.candidates_so_far, raw, vocab);
  renderTable();
}

function openWhatIf(candidate: Candidate): void {
  const panel = el<HTMLDivElement>("whatif");
  panel.hidden = false;
  el<HTMLButtonElement>("whatif-run").onclick = async () => {
    const swap = {
      region: el<HTMLSelectElement>("whatif-region").value as
        (typeof REGIONS)[number],
      from: el<HTMLInputElement>("whatif-from").value.trim(),
      to: el<HTMLInputElement>("whatif-to").value.trim(),
    };
    const out = el<HTMLPreElement>("whatif-result");
    const built = whatIfSpec(candidate, swap, vocab, constraints);
    if (!built.ok) {
      out.textContent = built.error;
      return;
    }
    try {
      const { data, raw } = await client.predict(built.spec);
      out.textContent = [
        `mu       ${rawToken(raw, "mu") ?? data.mu}`,
        `alpha    ${rawToken(raw, "alpha_pol") ?? data.alpha_pol}`,
        `gap      ${rawToken(raw, "gap") ?? data.gap}`,
        `ln_beta  ${rawToken(raw, "ln_beta") ?? data.ln_beta}`,
      ].join("\n");
    } catch (err) {
      out.textContent =
        err instanceof ServiceError ? `prediction failed: ${err.message}` : String(err);
    }
  };
}

async function startRun(): Promise<void> {
  const settings = {
    ...DEFAULT_RUN_SETTINGS,
    populationSize: Number(el<HTMLInputElement>("pop").value),
    generations: Number(el<HTMLInputElement>("gens").value),
    seed: Number(el<HTMLInputElement>("seed").value),
  };
  constraints.targetMode = el<HTMLSelectElement>("target-mode").value as
    ConstraintSet["targetMode"];
  constraints.targetValue = Number(el<HTMLInputElement>("target-value").value);
  const { data } = await client.createRun(toConfig(constraints, vocab, settings));
  runId = data.run_id;
  session = initialState();
  streamAbort?.abort();
  streamAbort = new AbortController();
  void client
    .streamEvents(
      runId,
      (pe) => {
        session = reduce(session, pe);
        renderTrace();
      },
      { signal: streamAbort.signal },
    )
    .then(refreshCandidates);
}

async function control(action: "pause" | "resume" | "stop"): Promise<void> {
  if (!runId) return;
  if (action === "pause") await client.pause(runId);
  else if (action === "stop") await client.stop(runId);
  else {
    // resuming applies the current editor state as an amendment
    const cfg = toConfig(constraints, vocab);
    await client.resume(runId, { target: cfg.target, constants: cfg.constants });
  }
  await refreshCandidates();
}

async function boot(): Promise<void> {
  vocab = (await client.vocab()).data;
  renderConstraints();
  el<HTMLButtonElement>("start").onclick = () => void startRun();
  el<HTMLButtonElement>("pause").onclick = () => void control("pause");
  el<HTMLButtonElement>("resume").onclick = () => void control("resume");
  el<HTMLButtonElement>("stop").onclick = () => void control("stop");
  el<HTMLSelectElement>("sort-key").onchange = (e) => {
    sortKey = (e.target as HTMLSelectElement).value as SortKey;
    renderTable();
  };
  setInterval(() => void refreshCandidates(), 2000);
}

void boot();
