/** Session state. Pure transition functions: every update returns a new
 * state object, the transcript is append-only, and highlights always come
 * verbatim from the most recent answer (the UI never synthesizes them). */

import type { MatchPayload, QueryResponse } from "./api.js";

export interface Highlight {
  start: string; // ISO date, inclusive
  end: string;
  label: string | null;
}

export interface TranscriptEntry {
  question: string; // what the user asked (or "[sketch]")
  response: QueryResponse; // stored exactly as received
}

export interface UiSession {
  tableId: string | null;
  selectedVariables: string[];
  transcript: readonly TranscriptEntry[];
  highlights: readonly Highlight[];
  patternFocus: number; // index into the selected group's top_refs, for "show" cycling
}

export function initialSession(): UiSession {
  return {
    tableId: null,
    selectedVariables: [],
    transcript: [],
    highlights: [],
    patternFocus: 0,
  };
}

export function selectTable(s: UiSession, tableId: string, variables: string[]): UiSession {
  return { ...s, tableId, selectedVariables: variables, transcript: [], highlights: [], patternFocus: 0 };
}

export function toggleVariable(s: UiSession, variable: string): UiSession {
  const has = s.selectedVariables.includes(variable);
  const selectedVariables = has
    ? s.selectedVariables.filter((v) => v !== variable)
    : [...s.selectedVariables, variable];
  return { ...s, selectedVariables };
}

export function highlightsFromMatches(matches: MatchPayload[]): Highlight[] {
  return matches.map((m) => ({ start: m.start, end: m.end, label: m.trend }));
}

/** Append an answer to the transcript and replace the highlights with the
 * intervals of that answer. */
export function recordAnswer(s: UiSession, question: string, response: QueryResponse): UiSession {
  return {
    ...s,
    transcript: [...s.transcript, { question, response }],
    highlights: highlightsFromMatches(response.matches),
  };
}

/** Highlights for a clicked pattern group: its top-3 (or fewer) references. */
export function highlightsFromGroup(group: {
  top_refs: { start: string; end: string }[];
  category: string;
}): Highlight[] {
  return group.top_refs.slice(0, 3).map((r) => ({ start: r.start, end: r.end, label: group.category }));
}

/** Advance the "show" control; wraps past the last reference back to 0. */
export function cycleFocus(s: UiSession, groupSize: number): UiSession {
  if (groupSize <= 0) return { ...s, patternFocus: 0 };
  return { ...s, patternFocus: (s.patternFocus + 1) % groupSize };
}

/** Invariant check used by tests and debug assertions: every highlight must
 * reference an interval present in the latest transcript entry. */
export function highlightsConsistent(s: UiSession): boolean {
  if (s.highlights.length === 0) return true;
  const last = s.transcript[s.transcript.length - 1];
  if (!last) return false;
  const spans = new Set(last.response.matches.map((m) => `${m.start}|${m.end}`));
  return s.highlights.every((h) => spans.has(`${h.start}|${h.end}`));
}
