// Thin typed client for /api/v1 with per-key request cancellation: when the
// filter changes, every panel refetches under the same key it used before,
// aborting its own in-flight predecessor.

import { Filters, filtersToQuery } from "./filters";
import {
  AggregationResponse,
  ApiErrorBody,
  DatasetList,
  DatasetSummary,
  NetworkResponse,
  PostsResponse,
  RenameResponse,
} from "./types";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export function isAbort(err: unknown): boolean {
  return err instanceof DOMException && err.name === "AbortError";
}

export class ApiClient {
  private controllers = new Map<string, AbortController>();

  constructor(
    private readonly base = "/api/v1",
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  /** Abort whatever request currently holds `key` and claim it. */
  private signalFor(key: string | undefined): AbortSignal | undefined {
    if (!key) return undefined;
    this.controllers.get(key)?.abort();
    const controller = new AbortController();
    this.controllers.set(key, controller);
    return controller.signal;
  }

  cancelAll(): void {
    for (const c of this.controllers.values()) c.abort();
    this.controllers.clear();
  }

  private async request<T>(
    method: "GET" | "PUT",
    path: string,
    opts: { key?: string; body?: unknown } = {},
  ): Promise<T> {
    const init: RequestInit = { method, signal: this.signalFor(opts.key) };
    if (opts.body !== undefined) {
      init.body = JSON.stringify(opts.body);
      init.headers = { "content-type": "application/json" };
    }
    const resp = await this.fetchFn(`${this.base}${path}`, init);
    const payload = await resp.json().catch(() => null);
    if (!resp.ok) {
      const detail = (payload as ApiErrorBody | null)?.error;
      throw new ApiError(
        resp.status,
        detail?.code ?? "unknown_error",
        detail?.message ?? `request failed with status ${resp.status}`,
      );
    }
    return payload as T;
  }

  private query(dataset: string, sub: string, filters: Filters | null, extra: Record<string, string>): string {
    const q = filters ? filtersToQuery(filters) : new URLSearchParams();
    for (const [k, v] of Object.entries(extra)) q.set(k, v);
    const qs = q.toString();
    return `/datasets/${encodeURIComponent(dataset)}${sub}${qs ? `?${qs}` : ""}`;
  }

  listDatasets(): Promise<DatasetList> {
    return this.request("GET", "/datasets");
  }

  datasetSummary(dataset: string): Promise<DatasetSummary> {
    return this.request("GET", `/datasets/${encodeURIComponent(dataset)}`);
  }

  /**
   * Fetch one analytics aggregation. `key` is the cancellation slot: a new
   * call with the same key aborts the previous one, so panels that issue
   * several concurrent aggregations (e.g. one per field) pass distinct keys.
   */
  aggregation(
    dataset: string,
    panel: string,
    filters: Filters,
    extra: Record<string, string> = {},
    key: string = panel,
  ): Promise<AggregationResponse> {
    return this.request("GET", this.query(dataset, `/analytics/${panel}`, filters, extra), {
      key: `${dataset}:${key}`,
    });
  }

  network(dataset: string, edgeCap?: number): Promise<NetworkResponse> {
    const extra: Record<string, string> = {};
    if (edgeCap !== undefined) extra.edge_cap = String(edgeCap);
    return this.request("GET", this.query(dataset, "/network", null, extra), {
      key: `${dataset}:network`,
    });
  }

  topicMap(dataset: string): Promise<import("./types").TopicMapResponse> {
    return this.request("GET", this.query(dataset, "/topics/map", null, {}), {
      key: `${dataset}:topicmap`,
    });
  }

  posts(dataset: string, filters: Filters, page: number, pageSize: number): Promise<PostsResponse> {
    return this.request(
      "GET",
      this.query(dataset, "/posts", filters, { page: String(page), page_size: String(pageSize) }),
      { key: `${dataset}:posts` },
    );
  }

  rename(dataset: string, kind: "community" | "topic", labelId: string, name: string): Promise<RenameResponse> {
    return this.request(
      "PUT",
      `/datasets/${encodeURIComponent(dataset)}/labels/${kind}/${encodeURIComponent(labelId)}`,
      { body: { name } },
    );
  }
}
