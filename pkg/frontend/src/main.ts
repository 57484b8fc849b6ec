/** App bootstrap: wires the four views to the API client and the session
 * state. At most one query is in flight at a time. */

import { ApiClient, ApiRequestError, PatternGroup, SeriesResponse, buildQueryBody } from "./api.js";
import type { Domain } from "./chart.js";
import { EXPORT_SIZE, Stroke, exportPngBase64, isBlank } from "./sketch.js";
import {
  UiSession,
  cycleFocus,
  highlightsFromGroup,
  initialSession,
  recordAnswer,
  selectTable,
  toggleVariable,
} from "./state.js";
import { renderChatBox, validateSubmission } from "./views/chatBox.js";
import { renderDataTable } from "./views/dataTable.js";
import { renderMainView } from "./views/mainView.js";
import { renderPatternView } from "./views/patternView.js";

const api = new ApiClient("");

let session: UiSession = initialSession();
let seriesData: SeriesResponse = { timestamps: [], series: {} };
let groups: PatternGroup[] = [];
let selectedGroup: number | null = null;
let detailDomain: Domain | null = null;
let inFlight = false;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function renderAll(): void {
  renderDataTable(el("data-table"), seriesData, session.selectedVariables, {
    onToggleVariable(v) {
      session = toggleVariable(session, v);
      void refreshSeries().then(renderAll);
    },
  });
  renderMainView(
    el("main-view"),
    { data: seriesData, variables: session.selectedVariables, highlights: session.highlights, detailDomain },
    {
      onBrush(domain) {
        detailDomain = domain;
        renderAll();
      },
    },
  );
  const chat = renderChatBox(el("chat-box"), session.transcript, {
    onAsk(text: string, strokes: Stroke[]) {
      const problem = validateSubmission(text, strokes);
      if (problem) {
        chat.setError(problem);
        return; // inline validation: no request leaves the client
      }
      chat.setError(null);
      void ask(text, strokes).then(() => chat.clearInput());
    },
  });
  renderPatternView(el("pattern-view"), groups, selectedGroup, session.patternFocus, {
    onSelectGroup(i) {
      selectedGroup = i;
      session = { ...session, patternFocus: 0, highlights: highlightsFromGroup(groups[i]) };
      renderAll();
    },
    onCycle() {
      if (selectedGroup !== null) {
        session = cycleFocus(session, groups[selectedGroup].top_refs.length);
        renderAll();
      }
    },
    refImageUrl: (refId) => api.refImageUrl(refId),
  });
}

async function ask(text: string, strokes: Stroke[]): Promise<void> {
  if (inFlight || session.tableId === null) return;
  inFlight = true;
  try {
    const image = isBlank(strokes) ? null : exportPngBase64(strokes, EXPORT_SIZE, EXPORT_SIZE);
    const question = text.trim() !== "" ? text : "[sketch]";
    const body = buildQueryBody(text.trim() !== "" ? text : null, image);
    const response = await api.query(session.tableId, body);
    session = recordAnswer(session, question, response);
  } catch (e) {
    const message = e instanceof ApiRequestError ? e.message : String(e);
    session = recordAnswer(session, text || "[sketch]", {
      answer: `error: ${message}`,
      plan: {
        intent: "Error",
        variables: [],
        window: null,
        k: 0,
        fill_template: "",
        trend_word: null,
        noun: null,
        period_text: null,
        has_query_embedding: false,
      },
      matches: [],
      verdict: null,
    });
  } finally {
    inFlight = false;
  }
  renderAll();
}

async function refreshSeries(): Promise<void> {
  if (session.tableId === null || session.selectedVariables.length === 0) {
    seriesData = { timestamps: [], series: {} };
    return;
  }
  try {
    seriesData = await api.series(session.tableId, session.selectedVariables);
  } catch {
    // non-blocking: keep the previous data on fetch failure
  }
}

async function openTable(tableId: string): Promise<void> {
  const probe = await api.series(tableId, [], 2);
  // learn the schema from a patterns-independent endpoint: fetch with no vars
  // returns empty series, so instead read variables from a tiny query
  const vars = Object.keys(probe.series);
  let variables = vars;
  if (variables.length === 0) {
    const described = await api.query(tableId, { text: "describe the data", k: 1 });
    variables = described.matches.map((m) => m.variable);
  }
  session = selectTable(session, tableId, variables.slice(0, 2));
  detailDomain = null;
  await refreshSeries();
  try {
    const first = variables[0];
    groups = first ? (await api.patterns(tableId, first)).groups : [];
  } catch {
    groups = [];
  }
  selectedGroup = null;
  renderAll();
}

async function boot(): Promise<void> {
  const { tables } = await api.listTables();
  const picker = el("table-picker") as HTMLSelectElement;
  picker.innerHTML = "";
  for (const t of tables) {
    const opt = document.createElement("option");
    opt.value = t;
    opt.textContent = t;
    picker.append(opt);
  }
  picker.addEventListener("change", () => void openTable(picker.value));
  if (tables.length > 0) await openTable(tables[0]);
  else renderAll();
}

window.addEventListener("DOMContentLoaded", () => void boot());
