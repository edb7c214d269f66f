import { describe, expect, it, vi } from "vitest";

import { ApiClient, ServiceRequestError } from "../src/api.js";
import type { ConstraintGraphJson } from "../src/types.js";

const CONSTRAINTS: ConstraintGraphJson = {
  categories: ["canvas", "toolbar"],
  components: ["toolbar"],
  loc: [],
  size: [],
};

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("ApiClient", () => {
  it("posts generate requests with the wire fields", async () => {
    const calls: { url: string; body: any }[] = [];
    const fetchFn = vi.fn(async (url: RequestInfo | URL, init?: RequestInit) => {
      calls.push({ url: String(url), body: JSON.parse(String(init?.body)) });
      return jsonResponse({ layouts: [], consistency: [], reports: [], seed: 3, checkpoint: "h" });
    });
    const client = new ApiClient("http://svc", fetchFn as unknown as typeof fetch);
    await client.generate(CONSTRAINTS, {
      samples: 2,
      seed: 3,
      fixedSizes: { 0: { w: 0.4, h: 0.1 } },
    });
    expect(calls[0].url).toBe("http://svc/api/generate");
    expect(calls[0].body).toEqual({
      constraints: CONSTRAINTS,
      samples: 2,
      seed: 3,
      fixed_sizes: { "0": [0.4, 0.1] },
      refine: true,
    });
  });

  it("surfaces field-level errors", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse({ detail: { field: "constraints", message: "bad index" } }, 400),
    );
    const client = new ApiClient("http://svc", fetchFn as unknown as typeof fetch);
    await expect(client.generate(CONSTRAINTS, { samples: 1, seed: 0 })).rejects.toMatchObject({
      status: 400,
      field: "constraints",
      message: "bad index",
    });
  });

  it("wraps non-JSON failures generically", async () => {
    const fetchFn = vi.fn(async () => new Response("boom", { status: 500 }));
    const client = new ApiClient("http://svc", fetchFn as unknown as typeof fetch);
    const error = await client.health().catch((e) => e);
    expect(error).toBeInstanceOf(ServiceRequestError);
    expect(error.status).toBe(500);
  });

  it("a second generate aborts the one in flight", async () => {
    const seenSignals: AbortSignal[] = [];
    const fetchFn = vi.fn(
      (url: RequestInfo | URL, init?: RequestInit) =>
        new Promise<Response>((resolve, reject) => {
          const signal = init?.signal as AbortSignal;
          seenSignals.push(signal);
          signal.addEventListener("abort", () =>
            reject(new DOMException("aborted", "AbortError")),
          );
          setTimeout(
            () =>
              resolve(
                jsonResponse({ layouts: [], consistency: [], reports: [], seed: 0, checkpoint: "h" }),
              ),
            5,
          );
        }),
    );
    const client = new ApiClient("http://svc", fetchFn as unknown as typeof fetch);
    const first = client.generate(CONSTRAINTS, { samples: 1, seed: 0 });
    const second = client.generate(CONSTRAINTS, { samples: 1, seed: 1 });
    await expect(first).rejects.toHaveProperty("name", "AbortError");
    await expect(second).resolves.toBeTruthy();
    expect(seenSignals[0].aborted).toBe(true);
    expect(seenSignals[1].aborted).toBe(false);
  });

  it("fetches the category vocabulary", async () => {
    const fetchFn = vi.fn(async () => jsonResponse({ categories: ["canvas", "a"] }));
    const client = new ApiClient("http://svc", fetchFn as unknown as typeof fetch);
    expect(await client.categories()).toEqual(["canvas", "a"]);
  });
});
