/** Data Table view: raw rows of the active table with per-variable
 * checkboxes controlling what the Main View plots. */

import type { SeriesResponse } from "../api.js";

export interface DataTableCallbacks {
  onToggleVariable(variable: string): void;
}

export function renderDataTable(
  root: HTMLElement,
  data: SeriesResponse,
  selected: string[],
  cb: DataTableCallbacks,
  maxRows = 200,
): void {
  root.innerHTML = "";
  const vars = Object.keys(data.series);

  const controls = document.createElement("div");
  controls.className = "var-toggles";
  for (const v of vars) {
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = selected.includes(v);
    box.addEventListener("change", () => cb.onToggleVariable(v));
    label.append(box, document.createTextNode(` ${v}`));
    controls.append(label);
  }
  root.append(controls);

  const table = document.createElement("table");
  const head = table.createTHead().insertRow();
  for (const name of ["Date", ...vars]) {
    const th = document.createElement("th");
    th.textContent = name;
    head.append(th);
  }
  const body = table.createTBody();
  const n = Math.min(data.timestamps.length, maxRows);
  for (let i = 0; i < n; i++) {
    const row = body.insertRow();
    row.insertCell().textContent = data.timestamps[i];
    for (const v of vars) row.insertCell().textContent = data.series[v][i].toFixed(3);
  }
  root.append(table);
  if (data.timestamps.length > maxRows) {
    const note = document.createElement("p");
    note.className = "muted";
    note.textContent = `showing first ${maxRows} of ${data.timestamps.length} rows`;
    root.append(note);
  }
}
