/** Pattern View: trend-category groups in backend order (most populated
 * first), each expandable to its top-3 reference thumbnails; a "show"
 * control cycles focus through the selected group's references. */

import type { PatternGroup } from "../api.js";

export interface PatternCallbacks {
  onSelectGroup(index: number): void;
  onCycle(): void;
  refImageUrl(refId: string): string;
}

export function renderPatternView(
  root: HTMLElement,
  groups: PatternGroup[],
  selectedGroup: number | null,
  focus: number,
  cb: PatternCallbacks,
): void {
  root.innerHTML = "";
  if (groups.length === 0) {
    const p = document.createElement("p");
    p.className = "muted";
    p.textContent = "ingest a table to see pattern groups";
    root.append(p);
    return;
  }
  const list = document.createElement("ol");
  // backend order preserved: no client-side sorting
  groups.forEach((g, i) => {
    const li = document.createElement("li");
    const btn = document.createElement("button");
    btn.className = i === selectedGroup ? "group selected" : "group";
    btn.textContent = `${g.category} (${g.count})`;
    btn.addEventListener("click", () => cb.onSelectGroup(i));
    li.append(btn);
    if (i === selectedGroup) {
      const refs = document.createElement("div");
      refs.className = "group-refs";
      g.top_refs.forEach((r, j) => {
        const img = document.createElement("img");
        img.src = cb.refImageUrl(r.ref_id);
        img.alt = `${g.category} ${r.start}..${r.end}`;
        img.className = j === focus ? "ref focused" : "ref";
        img.title = `${r.start} .. ${r.end} (${r.confidence.toFixed(3)})`;
        refs.append(img);
      });
      const show = document.createElement("button");
      show.textContent = "show next";
      show.addEventListener("click", () => cb.onCycle());
      refs.append(show);
      li.append(refs);
    }
    list.append(li);
  });
  root.append(list);
}
