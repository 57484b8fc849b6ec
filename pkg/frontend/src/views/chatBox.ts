/** Chat Box: question input, sketch canvas, and the transcript. Displayed
 * answers are the API's answer strings verbatim. */

import type { TranscriptEntry } from "../state.js";
import { Stroke, addPoint, beginStroke, drawStrokes, isBlank } from "../sketch.js";

export interface ChatCallbacks {
  onAsk(text: string, strokes: Stroke[]): void;
}

const CANVAS_SIZE = 280;

export interface ChatBoxHandle {
  setError(message: string | null): void;
  clearInput(): void;
  getStrokes(): Stroke[];
}

export function renderChatBox(
  root: HTMLElement,
  transcript: readonly TranscriptEntry[],
  cb: ChatCallbacks,
): ChatBoxHandle {
  root.innerHTML = "";

  const log = document.createElement("div");
  log.className = "chat-log";
  for (const entry of transcript) {
    const q = document.createElement("p");
    q.className = "chat-q";
    q.textContent = entry.question;
    const a = document.createElement("p");
    a.className = "chat-a";
    a.textContent = entry.response.answer;
    log.append(q, a);
  }
  root.append(log);
  log.scrollTop = log.scrollHeight;

  const err = document.createElement("p");
  err.className = "chat-error";
  err.hidden = true;
  root.append(err);

  const input = document.createElement("input");
  input.type = "text";
  input.placeholder = "ask about trends, patterns, correlations…";

  const canvas = document.createElement("canvas");
  canvas.width = CANVAS_SIZE;
  canvas.height = CANVAS_SIZE;
  canvas.className = "sketch-canvas";
  let strokes: Stroke[] = [];
  const ctx = canvas.getContext("2d");
  const repaint = () => {
    if (ctx) drawStrokes(ctx, strokes, CANVAS_SIZE, CANVAS_SIZE, 3);
  };
  repaint();
  let drawing = false;
  const pt = (e: MouseEvent) => {
    const r = canvas.getBoundingClientRect();
    return { x: e.clientX - r.left, y: e.clientY - r.top };
  };
  canvas.addEventListener("mousedown", (e) => {
    drawing = true;
    strokes = beginStroke(strokes, pt(e));
    repaint();
  });
  canvas.addEventListener("mousemove", (e) => {
    if (!drawing) return;
    strokes = addPoint(strokes, pt(e));
    repaint();
  });
  window.addEventListener("mouseup", () => {
    drawing = false;
  });

  const clearBtn = document.createElement("button");
  clearBtn.textContent = "clear sketch";
  clearBtn.addEventListener("click", () => {
    strokes = [];
    repaint();
  });

  const ask = document.createElement("button");
  ask.textContent = "ask";
  ask.addEventListener("click", () => cb.onAsk(input.value, strokes));
  input.addEventListener("keydown", (e) => {
    if (e.key === "Enter") cb.onAsk(input.value, strokes);
  });

  const controls = document.createElement("div");
  controls.className = "chat-controls";
  controls.append(input, ask, canvas, clearBtn);
  root.append(controls);

  return {
    setError(message) {
      err.hidden = message === null;
      err.textContent = message ?? "";
    },
    clearInput() {
      input.value = "";
    },
    getStrokes: () => strokes,
  };
}

/** Inline validation shared with tests: a submission is valid when it has
 * text or a non-blank sketch; blank submissions must not hit the network. */
export function validateSubmission(text: string, strokes: Stroke[]): string | null {
  if (text.trim() === "" && isBlank(strokes)) {
    return "type a question or draw a sketch first";
  }
  return null;
}
