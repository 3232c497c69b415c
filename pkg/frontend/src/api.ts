// Thin fetch client for the engine's HTTP API.

import {
  ApiError,
  DefinitionInfo,
  DefinitionJson,
  DsSummary,
  DvDetailJson,
  SearchRequestJson,
  SearchResponseJson,
} from "./types.js";

export class ApiFailure extends Error {
  constructor(public readonly status: number, public readonly body: ApiError) {
    super(`${body.code}: ${body.message}`);
  }
}

async function call<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(base + path, init);
  const body = await resp.json();
  if (!resp.ok) {
    throw new ApiFailure(resp.status, body as ApiError);
  }
  return body as T;
}

export class Client {
  constructor(private readonly base: string = "") {}

  listSpaces(query = ""): Promise<{ results: DsSummary[] }> {
    return call(this.base, `/ds?query=${encodeURIComponent(query)}`);
  }

  definition(ref: string | number): Promise<DefinitionInfo> {
    return call(this.base, `/ds/${encodeURIComponent(String(ref))}`);
  }

  /** Fetch a definition plus every space its branches reference. */
  async definitionTree(
    ref: string | number,
    depthLimit = 8,
  ): Promise<{ root: DefinitionJson; resolved: Map<string, DefinitionJson> }> {
    const rootInfo = await this.definition(ref);
    const resolved = new Map<string, DefinitionJson>();
    resolved.set(rootInfo.dsi, rootInfo.definition);
    const queue: Array<{ def: DefinitionJson; depth: number }> = [
      { def: rootInfo.definition, depth: depthLimit },
    ];
    while (queue.length) {
      const { def, depth } = queue.pop()!;
      if (depth <= 0) continue;
      for (const dim of def.dimensions) {
        const dsi = dim.content.branch?.dsi;
        if (dsi && !resolved.has(dsi)) {
          const info = await this.definition(dsi);
          resolved.set(dsi, info.definition);
          queue.push({ def: info.definition, depth: depth - 1 });
        }
      }
    }
    return { root: rootInfo.definition, resolved };
  }

  search(request: SearchRequestJson): Promise<SearchResponseJson> {
    return call(this.base, "/search", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(request),
    });
  }

  dvDetail(c: number): Promise<DvDetailJson> {
    return call(this.base, `/dv/${c}`);
  }

  buildIndex(): Promise<{ groups: number; records: number; rejected: number }> {
    return call(this.base, "/index/build", { method: "POST" });
  }
}
