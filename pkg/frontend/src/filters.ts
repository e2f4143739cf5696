// The filter model shared by every panel, and its URL query encoding.
//
// The encoding is the API's own: the same parameter names and value syntax
// the service parses, so a dashboard URL fragment doubles as the API query
// and serialize -> parse is lossless. Keywords are comma-joined (the AND
// list the API expects), which is why the filter bar never lets a single
// keyword contain a comma.

export interface Filters {
  keywords: string[];
  dateFrom: string | null; // RFC-3339 timestamp or YYYY-MM-DD, as typed
  dateTo: string | null;
  language: string | null;
  sentiment: string | null;
  community: string | null; // label id or display name
  topic: string | null;
}

export const EMPTY_FILTERS: Filters = Object.freeze({
  keywords: [],
  dateFrom: null,
  dateTo: null,
  language: null,
  sentiment: null,
  community: null,
  topic: null,
});

export function filtersToQuery(f: Filters, into?: URLSearchParams): URLSearchParams {
  const q = into ?? new URLSearchParams();
  if (f.keywords.length) q.set("keywords", f.keywords.join(","));
  if (f.dateFrom) q.set("date_from", f.dateFrom);
  if (f.dateTo) q.set("date_to", f.dateTo);
  if (f.language) q.set("language", f.language);
  if (f.sentiment) q.set("sentiment", f.sentiment);
  if (f.community) q.set("community", f.community);
  if (f.topic) q.set("topic", f.topic);
  return q;
}

export function filtersFromQuery(q: URLSearchParams): Filters {
  const keywords = (q.get("keywords") ?? "")
    .split(",")
    .map((t) => t.trim())
    .filter((t) => t.length > 0);
  return {
    keywords,
    dateFrom: q.get("date_from"),
    dateTo: q.get("date_to"),
    language: q.get("language"),
    sentiment: q.get("sentiment"),
    community: q.get("community"),
    topic: q.get("topic"),
  };
}

export function filtersEqual(a: Filters, b: Filters): boolean {
  return filtersToQuery(a).toString() === filtersToQuery(b).toString();
}

export function withCommunity(f: Filters, community: string | null): Filters {
  return { ...f, community };
}

export function withTopic(f: Filters, topic: string | null): Filters {
  return { ...f, topic };
}
