/** Typed client for the backend JSON service. The UI never re-ranks or
 * rewrites results: answers are stored and displayed exactly as returned. */

export interface MatchPayload {
  ref_id: string;
  variable: string;
  start: string;
  end: string;
  similarity: number;
  trend: string | null;
}

export interface PlanPayload {
  intent: string;
  variables: string[];
  window: [string, string] | null;
  k: number;
  fill_template: string;
  trend_word: string | null;
  noun: string | null;
  period_text: string | null;
  has_query_embedding: boolean;
}

export interface QueryResponse {
  answer: string;
  plan: PlanPayload;
  matches: MatchPayload[];
  verdict: string | null;
}

export interface PatternGroup {
  category: string;
  count: number;
  top_refs: { ref_id: string; start: string; end: string; confidence: number }[];
}

export interface SeriesResponse {
  timestamps: string[];
  series: Record<string, number[]>;
}

export interface ApiError {
  code: string;
  message: string;
  detail: unknown;
}

export interface QueryBody {
  text?: string | null;
  image_base64?: string | null;
  k?: number;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Build the JSON body for POST /query; omits empty attachments. */
export function buildQueryBody(
  text: string | null,
  imageBase64: string | null,
  k = 3,
): QueryBody {
  const body: QueryBody = { k };
  if (text !== null && text.trim() !== "") body.text = text;
  if (imageBase64 !== null && imageBase64 !== "") body.image_base64 = imageBase64;
  return body;
}

export class ApiRequestError extends Error {
  constructor(
    public readonly status: number,
    public readonly payload: ApiError,
  ) {
    super(`${payload.code}: ${payload.message}`);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  refImageUrl(refId: string): string {
    return this.url(`/api/refs/${encodeURIComponent(refId)}/image`);
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.url(path), init);
    const text = await res.text();
    let doc: unknown;
    try {
      doc = JSON.parse(text);
    } catch {
      throw new ApiRequestError(res.status, {
        code: "BadResponse",
        message: `non-JSON response (${res.status})`,
        detail: text,
      });
    }
    if (!res.ok) throw new ApiRequestError(res.status, doc as ApiError);
    return doc as T;
  }

  listTables(): Promise<{ tables: string[] }> {
    return this.json("/api/tables");
  }

  async ingest(file: Blob, fileName: string, tableId?: string): Promise<unknown> {
    const form = new FormData();
    form.append("file", file, fileName);
    if (tableId) form.append("table_id", tableId);
    return this.json("/api/tables", { method: "POST", body: form });
  }

  query(tableId: string, body: QueryBody): Promise<QueryResponse> {
    return this.json(`/api/tables/${encodeURIComponent(tableId)}/query`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  patterns(tableId: string, variable: string): Promise<{ variable: string; groups: PatternGroup[] }> {
    const qs = new URLSearchParams({ var: variable });
    return this.json(`/api/tables/${encodeURIComponent(tableId)}/patterns?${qs}`);
  }

  series(tableId: string, vars: string[], maxPoints = 2000): Promise<SeriesResponse> {
    const qs = new URLSearchParams({ vars: vars.join(","), max_points: String(maxPoints) });
    return this.json(`/api/tables/${encodeURIComponent(tableId)}/series?${qs}`);
  }
}
