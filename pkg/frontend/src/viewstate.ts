// Everything the UI needs to reproduce a view, encoded in the URL so an
// analysis is a shareable link. Label-edit drafts are the one deliberate
// exception: half-typed names are ephemeral and stay out of the URL.

import { EMPTY_FILTERS, Filters, filtersFromQuery, filtersToQuery } from "./filters";

export type Granularity = "hour" | "day" | "week";
export type MatrixMode = "counts" | "proportions";
export type TopKind = "posts" | "urls" | "hashtags";

export interface ViewState {
  dataset: string | null;
  filters: Filters;
  granularity: Granularity;
  splitBySentiment: boolean;
  matrixMode: MatrixMode;
  topKind: TopKind;
  postsPage: number;
  // transient (not in the URL)
  labelDrafts: Record<string, string>; // "community:C1" -> text being typed
}

export const DEFAULT_STATE: ViewState = Object.freeze({
  dataset: null,
  filters: EMPTY_FILTERS,
  granularity: "day" as Granularity,
  splitBySentiment: true,
  matrixMode: "counts" as MatrixMode,
  topKind: "posts" as TopKind,
  postsPage: 1,
  labelDrafts: {},
});

export function stateToQuery(s: ViewState): URLSearchParams {
  const q = new URLSearchParams();
  if (s.dataset) q.set("dataset", s.dataset);
  filtersToQuery(s.filters, q);
  if (s.granularity !== DEFAULT_STATE.granularity) q.set("granularity", s.granularity);
  if (s.splitBySentiment !== DEFAULT_STATE.splitBySentiment)
    q.set("split", String(s.splitBySentiment));
  if (s.matrixMode !== DEFAULT_STATE.matrixMode) q.set("matrix_mode", s.matrixMode);
  if (s.topKind !== DEFAULT_STATE.topKind) q.set("top_kind", s.topKind);
  if (s.postsPage !== 1) q.set("page", String(s.postsPage));
  return q;
}

export function stateFromQuery(q: URLSearchParams): ViewState {
  const pick = <T extends string>(key: string, allowed: readonly T[], fallback: T): T => {
    const raw = q.get(key);
    return raw !== null && (allowed as readonly string[]).includes(raw) ? (raw as T) : fallback;
  };
  const page = Number.parseInt(q.get("page") ?? "1", 10);
  return {
    dataset: q.get("dataset"),
    filters: filtersFromQuery(q),
    granularity: pick("granularity", ["hour", "day", "week"], DEFAULT_STATE.granularity),
    splitBySentiment: q.get("split") !== null ? q.get("split") === "true" : DEFAULT_STATE.splitBySentiment,
    matrixMode: pick("matrix_mode", ["counts", "proportions"], DEFAULT_STATE.matrixMode),
    topKind: pick("top_kind", ["posts", "urls", "hashtags"], DEFAULT_STATE.topKind),
    postsPage: Number.isFinite(page) && page >= 1 ? page : 1,
    labelDrafts: {},
  };
}

export type Listener = (next: ViewState, prev: ViewState) => void;

/** Single observable state container; panels subscribe, actions update. */
export class Store {
  private state: ViewState;
  private listeners = new Set<Listener>();

  constructor(initial: ViewState = DEFAULT_STATE) {
    this.state = initial;
  }

  get(): ViewState {
    return this.state;
  }

  update(patch: Partial<ViewState>): void {
    const prev = this.state;
    this.state = { ...prev, ...patch };
    for (const fn of [...this.listeners]) fn(this.state, prev);
  }

  subscribe(fn: Listener): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }
}

/** Keep the address bar in sync without adding history entries. */
export function syncUrl(s: ViewState): void {
  if (typeof history === "undefined") return;
  const query = stateToQuery(s).toString();
  const url = query ? `?${query}` : location.pathname;
  history.replaceState(null, "", url);
}

export function stateFromLocation(): ViewState {
  if (typeof location === "undefined") return DEFAULT_STATE;
  return stateFromQuery(new URLSearchParams(location.search));
}
