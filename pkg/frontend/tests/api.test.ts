import { describe, expect, it } from "vitest";

import { ApiClient, ApiRequestError, buildQueryBody } from "../src/api.js";

function fakeFetch(status: number, body: unknown, calls: { url: string; init?: RequestInit }[]) {
  return async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  };
}

describe("buildQueryBody", () => {
  it("omits empty text and image", () => {
    expect(buildQueryBody(null, null, 3)).toEqual({ k: 3 });
    expect(buildQueryBody("  ", "", 5)).toEqual({ k: 5 });
  });

  it("passes image base64 through untouched", () => {
    const b64 = "aGVsbG8=";
    expect(buildQueryBody("similar?", b64)).toEqual({ k: 3, text: "similar?", image_base64: b64 });
  });
});

describe("ApiClient", () => {
  it("query posts JSON to the table endpoint", async () => {
    const calls: { url: string; init?: RequestInit }[] = [];
    const payload = { answer: "A.", plan: {}, matches: [], verdict: null };
    const api = new ApiClient("http://x", fakeFetch(200, payload, calls));
    const res = await api.query("demo", { text: "hi", k: 2 });
    expect(calls[0].url).toBe("http://x/api/tables/demo/query");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ text: "hi", k: 2 });
    // the displayed answer is the response payload verbatim
    expect(res).toEqual(payload);
  });

  it("encodes table ids and query params", async () => {
    const calls: { url: string; init?: RequestInit }[] = [];
    const api = new ApiClient("", fakeFetch(200, { timestamps: [], series: {} }, calls));
    await api.series("a b", ["Apple", "Banana"], 100);
    expect(calls[0].url).toBe("/api/tables/a%20b/series?vars=Apple%2CBanana&max_points=100");
  });

  it("patterns builds the var query", async () => {
    const calls: { url: string; init?: RequestInit }[] = [];
    const api = new ApiClient("", fakeFetch(200, { variable: "Apple", groups: [] }, calls));
    await api.patterns("demo", "Apple");
    expect(calls[0].url).toBe("/api/tables/demo/patterns?var=Apple");
  });

  it("ref image URLs escape the ref id", () => {
    const api = new ApiClient("");
    expect(api.refImageUrl("t:Apple:0-10:line")).toBe("/api/refs/t%3AApple%3A0-10%3Aline/image");
  });

  it("error responses raise ApiRequestError with the backend payload", async () => {
    const calls: { url: string; init?: RequestInit }[] = [];
    const api = new ApiClient(
      "",
      fakeFetch(422, { code: "UnsupportedQueryError", message: "nope", detail: null }, calls),
    );
    await expect(api.query("demo", { text: "why?" })).rejects.toMatchObject({
      status: 422,
      payload: { code: "UnsupportedQueryError" },
    });
  });

  it("non-JSON responses surface as BadResponse", async () => {
    const api = new ApiClient("", async () => new Response("<html>", { status: 502 }));
    await expect(api.listTables()).rejects.toBeInstanceOf(ApiRequestError);
  });
});
