import { describe, expect, it } from "vitest";
import {
  EMPTY_FILTERS,
  Filters,
  filtersEqual,
  filtersFromQuery,
  filtersToQuery,
  withCommunity,
  withTopic,
} from "../src/filters";

const roundTrip = (f: Filters): Filters =>
  filtersFromQuery(new URLSearchParams(filtersToQuery(f).toString()));

describe("filter query codec", () => {
  it("round-trips every field losslessly", () => {
    const f: Filters = {
      keywords: ["vaccine", "mandate"],
      dateFrom: "2025-06-01",
      dateTo: "2025-06-30T23:59:59+00:00",
      language: "de",
      sentiment: "negative",
      community: "C3",
      topic: "T1",
    };
    expect(roundTrip(f)).toEqual(f);
  });

  it("round-trips unicode keywords and label names", () => {
    const f: Filters = {
      ...EMPTY_FILTERS,
      keywords: ["café", "zürich", "値得"],
      community: "Impfgegner & Skeptiker",
      topic: "énergie",
    };
    expect(roundTrip(f)).toEqual(f);
  });

  it("omits empty fields from the query entirely", () => {
    expect(filtersToQuery(EMPTY_FILTERS).toString()).toBe("");
  });

  it("drops blank keyword fragments when parsing", () => {
    const q = new URLSearchParams("keywords=a%2C%2C+%2Cb");
    expect(filtersFromQuery(q).keywords).toEqual(["a", "b"]);
  });

  it("uses the API's own parameter names", () => {
    const q = filtersToQuery({
      ...EMPTY_FILTERS,
      keywords: ["x"],
      dateFrom: "2025-01-01",
      dateTo: "2025-01-02",
      language: "en",
      sentiment: "positive",
      community: "C1",
      topic: "T2",
    });
    expect([...q.keys()].sort()).toEqual([
      "community",
      "date_from",
      "date_to",
      "keywords",
      "language",
      "sentiment",
      "topic",
    ]);
  });

  it("compares by encoded form", () => {
    expect(filtersEqual(EMPTY_FILTERS, { ...EMPTY_FILTERS, keywords: [] })).toBe(true);
    expect(filtersEqual(EMPTY_FILTERS, withCommunity(EMPTY_FILTERS, "C1"))).toBe(false);
    expect(filtersEqual(withTopic(EMPTY_FILTERS, "T1"), withTopic(EMPTY_FILTERS, "T1"))).toBe(true);
  });
});
