import { describe, expect, it } from "vitest";
import { EMPTY_FILTERS } from "../src/filters";
import {
  DEFAULT_STATE,
  stateFromQuery,
  stateToQuery,
  Store,
  ViewState,
} from "../src/viewstate";

const roundTrip = (s: ViewState): ViewState =>
  stateFromQuery(new URLSearchParams(stateToQuery(s).toString()));

describe("view state URL encoding", () => {
  it("encodes only what differs from the defaults", () => {
    expect(stateToQuery(DEFAULT_STATE).toString()).toBe("");
    const q = stateToQuery({ ...DEFAULT_STATE, dataset: "demo", granularity: "hour" });
    expect(q.get("dataset")).toBe("demo");
    expect(q.get("granularity")).toBe("hour");
    expect(q.get("split")).toBeNull();
    expect(q.get("matrix_mode")).toBeNull();
  });

  it("round-trips a fully populated state", () => {
    const s: ViewState = {
      dataset: "campaign-2025",
      filters: {
        keywords: ["café"],
        dateFrom: "2025-03-01",
        dateTo: null,
        language: "fr",
        sentiment: "neutral",
        community: "C2",
        topic: null,
      },
      granularity: "week",
      splitBySentiment: false,
      matrixMode: "proportions",
      topKind: "urls",
      postsPage: 4,
      labelDrafts: {},
    };
    expect(roundTrip(s)).toEqual(s);
  });

  it("falls back to defaults on unknown enum values", () => {
    const s = stateFromQuery(
      new URLSearchParams("granularity=century&matrix_mode=sideways&top_kind=cats&page=-3"),
    );
    expect(s.granularity).toBe(DEFAULT_STATE.granularity);
    expect(s.matrixMode).toBe(DEFAULT_STATE.matrixMode);
    expect(s.topKind).toBe(DEFAULT_STATE.topKind);
    expect(s.postsPage).toBe(1);
  });

  it("keeps label drafts out of the URL", () => {
    const s: ViewState = {
      ...DEFAULT_STATE,
      dataset: "demo",
      labelDrafts: { "community:C1": "half-typed na" },
    };
    expect(stateToQuery(s).toString()).toBe("dataset=demo");
    expect(roundTrip(s).labelDrafts).toEqual({});
  });
});

describe("store", () => {
  it("notifies subscribers with next and previous state", () => {
    const store = new Store({ ...DEFAULT_STATE });
    const seen: Array<[string | null, string | null]> = [];
    store.subscribe((next, prev) => seen.push([next.dataset, prev.dataset]));
    store.update({ dataset: "a" });
    store.update({ dataset: "b" });
    expect(seen).toEqual([
      ["a", null],
      ["b", "a"],
    ]);
  });

  it("stops notifying after unsubscribe", () => {
    const store = new Store({ ...DEFAULT_STATE });
    let calls = 0;
    const off = store.subscribe(() => {
      calls += 1;
    });
    store.update({ postsPage: 2 });
    off();
    store.update({ postsPage: 3 });
    expect(calls).toBe(1);
  });

  it("merges patches without touching other fields", () => {
    const store = new Store({ ...DEFAULT_STATE, filters: { ...EMPTY_FILTERS, language: "en" } });
    store.update({ postsPage: 7 });
    expect(store.get().filters.language).toBe("en");
    expect(store.get().postsPage).toBe(7);
  });
});
