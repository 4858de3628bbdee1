import { describe, expect, it } from "vitest";

import { ApiError, ManufacturerClient } from "../src/api.js";

function stubFetch(handler: (url: string, init?: RequestInit) => object | Response) {
  return (async (url: string, init?: RequestInit) => {
    const out = handler(url, init);
    if (out instanceof Response) return out;
    return new Response(JSON.stringify(out),
                        { headers: { "content-type": "application/json" } });
  }) as typeof fetch;
}

describe("manufacturer client", () => {
  it("round-trips iteration creation", async () => {
    const calls: string[] = [];
    const client = new ManufacturerClient("http://svc", stubFetch((url, init) => {
      calls.push(`${init?.method ?? "GET"} ${url}`);
      return { iteration_id: 3 };
    }));
    const out = await client.createIteration({} as never);
    expect(out.iteration_id).toBe(3);
    expect(calls).toEqual(["POST http://svc/iterations"]);
  });

  it("builds mesh urls without fetching", () => {
    const client = new ManufacturerClient("http://svc", stubFetch(() => ({})));
    expect(client.meshUrl(2, "record-001"))
      .toBe("http://svc/iterations/2/records/record-001/mesh");
  });

  it("surfaces server reason codes verbatim", async () => {
    const client = new ManufacturerClient("http://svc", stubFetch(() =>
      new Response(JSON.stringify({ detail: { reason: "invalid-spec",
                                              message: "missing domain" } }),
                   { status: 400 })));
    await expect(client.createIteration({} as never)).rejects.toMatchObject({
      status: 400,
      reason: "invalid-spec",
      message: "missing domain",
    } satisfies Partial<ApiError>);
  });

  it("passes the per-supplier flag through", async () => {
    const urls: string[] = [];
    const client = new ManufacturerClient("http://svc", stubFetch((url) => {
      urls.push(url);
      return { records: [] };
    }));
    await client.generate(4, true);
    expect(urls[0]).toBe("http://svc/iterations/4/generate?per_supplier=true");
  });
});
