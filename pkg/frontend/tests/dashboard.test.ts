// End-to-end dashboard behavior against a scripted in-memory API:
//   - clicking a community narrows every selection-driven request and the
//     geo panel renders exactly the totals the API returned
//   - the proportions toggle requests mode=proportions and every rendered
//     row sums to 1
//   - renaming a community shows the new name in at least two panels
//     without a page reload
//   - the full view state round-trips through the URL query

import { beforeEach, describe, expect, it, vi } from "vitest";
import { ApiClient } from "../src/api";
import { Dashboard } from "../src/dashboard";
import { stateFromLocation, Store } from "../src/viewstate";

interface World {
  fetchFn: typeof fetch;
  calls: string[];
  communityNames: Record<string, string>;
  topicNames: string[];
  geoEntries: (community: string | null) => [string, number][];
}

function makeWorld(): World {
  const world: World = {
    calls: [],
    communityNames: { C1: "Community C1", C2: "Community C2" },
    topicNames: ["topic one", "topic two"],
    geoEntries: (community) =>
      community === "C1"
        ? [
            ["US", 30],
            ["DE", 12],
          ]
        : [
            ["US", 100],
            ["DE", 50],
            ["FR", 7],
          ],
    fetchFn: undefined as unknown as typeof fetch,
  };

  const summary = () => ({
    dataset_id: "demo",
    platform: "twitter",
    version: 3,
    batch_count: 1,
    post_count: 157,
    user_count: 40,
    node_count: 5,
    edge_count: 4,
    community_count: 2,
    has_topics: true,
  });

  const matrix = (mode: string) => ({
    type: "matrix",
    mode,
    row_ids: ["C1", "C2"],
    row_names: [world.communityNames.C1, world.communityNames.C2],
    col_ids: ["T1", "T2"],
    col_names: world.topicNames,
    values:
      mode === "proportions"
        ? [
            [0.75, 0.25],
            [0.25, 0.75],
          ]
        : [
            [30, 10],
            [5, 15],
          ],
  });

  const network = () => ({
    version: 3,
    node_count: 5,
    edge_count: 4,
    edges_returned: 2,
    nodes: [
      { id: "alice", x: 0, y: 0, community: "C1", community_name: world.communityNames.C1, degree: 3 },
      { id: "bob", x: 1, y: 0.5, community: "C1", community_name: world.communityNames.C1, degree: 2 },
      { id: "carol", x: 0.5, y: 1, community: "C1", community_name: world.communityNames.C1, degree: 1 },
      { id: "dave", x: 4, y: 4, community: "C2", community_name: world.communityNames.C2, degree: 2 },
      { id: "erin", x: 5, y: 4.5, community: "C2", community_name: world.communityNames.C2, degree: 1 },
    ],
    edges: [
      { source: "alice", target: "bob", weight: 3 },
      { source: "dave", target: "erin", weight: 1 },
    ],
  });

  const topicMap = () => ({
    version: 3,
    points: [
      { post_id: "p1", x: 0, y: 0, topic_index: 0, topic_label: world.topicNames[0] },
      { post_id: "p2", x: 1, y: 1, topic_index: 0, topic_label: world.topicNames[0] },
      { post_id: "p3", x: 5, y: 5, topic_index: 1, topic_label: world.topicNames[1] },
    ],
  });

  const route = (url: URL, init?: RequestInit): { status: number; body: unknown } => {
    const p = url.pathname.replace(/^\/api\/v1/, "");
    const q = url.searchParams;
    const agg = (result: unknown) => ({ status: 200, body: { version: 3, result } });

    if (p === "/datasets") return { status: 200, body: { datasets: [summary()] } };
    if (p === "/datasets/demo") return { status: 200, body: summary() };
    if (p === "/datasets/demo/analytics/timeline") {
      const split = q.get("split_by_sentiment") === "true";
      return agg({
        type: "time_series",
        granularity: q.get("granularity") ?? "day",
        buckets: ["2025-06-01T00:00:00+00:00", "2025-06-02T00:00:00+00:00"],
        counts: [3, 5],
        by_sentiment: split
          ? { positive: [1, 2], negative: [1, 2], neutral: [1, 1], unknown: [0, 0] }
          : null,
      });
    }
    if (p === "/datasets/demo/analytics/distribution") {
      const field = q.get("field") ?? "language";
      return agg({
        type: "categorical",
        field,
        entries: field === "language" ? [["en", 120], ["de", 37]] : [["neutral", 90], ["negative", 67]],
      });
    }
    if (p === "/datasets/demo/analytics/geo") {
      return agg({ type: "categorical", field: "country", entries: world.geoEntries(q.get("community")) });
    }
    if (p === "/datasets/demo/analytics/top") {
      return agg({ type: "ranked_list", kind: q.get("kind") ?? "posts", entries: [["p9", 50], ["p4", 31]] });
    }
    if (p === "/datasets/demo/analytics/wordcloud") {
      return agg({ type: "ranked_list", kind: "terms", entries: [["vaccine", 12], ["mandate", 8]] });
    }
    if (p === "/datasets/demo/analytics/topics-per-community") {
      return agg(matrix(q.get("mode") ?? "counts"));
    }
    if (p === "/datasets/demo/network") return { status: 200, body: network() };
    if (p === "/datasets/demo/topics/map") return { status: 200, body: topicMap() };
    if (p === "/datasets/demo/posts") {
      return {
        status: 200,
        body: {
          version: 3,
          total: 2,
          page: Number(q.get("page") ?? "1"),
          page_size: Number(q.get("page_size") ?? "50"),
          posts: [
            {
              id: "p9",
              author_id: "alice",
              text: "hello world",
              created_at: "2025-06-02T10:00:00+00:00",
              language: "en",
              sentiment: "neutral",
              engagement: 50,
              urls: ["https://example.org/a"],
            },
            {
              id: "p4",
              author_id: "bob",
              text: "zweiter beitrag",
              created_at: "2025-06-01T09:00:00+00:00",
              language: "de",
              sentiment: "negative",
              engagement: 31,
            },
          ],
        },
      };
    }
    const rename = p.match(/^\/datasets\/demo\/labels\/(community|topic)\/(.+)$/);
    if (rename && init?.method === "PUT") {
      const kind = rename[1] as "community" | "topic";
      const ref = decodeURIComponent(rename[2]);
      const name = (JSON.parse(String(init.body)) as { name: string }).name;
      if (kind === "community") {
        if (!(ref in world.communityNames)) {
          return { status: 404, body: { error: { code: "unknown_label", message: ref } } };
        }
        world.communityNames[ref] = name;
        return { status: 200, body: { version: 4, kind, label_id: ref, name } };
      }
      const idx = world.topicNames.indexOf(ref);
      if (idx < 0) return { status: 404, body: { error: { code: "unknown_label", message: ref } } };
      world.topicNames[idx] = name;
      return { status: 200, body: { version: 4, kind, label_id: `T${idx + 1}`, name } };
    }
    return { status: 404, body: { error: { code: "unknown_route", message: p } } };
  };

  world.fetchFn = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = new URL(String(input), "http://local");
    world.calls.push(url.pathname + url.search);
    if (init?.signal?.aborted) throw new DOMException("aborted", "AbortError");
    const { status, body } = route(url, init);
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
  }) as typeof fetch;

  return world;
}

async function boot(path = "/") {
  history.replaceState(null, "", path);
  document.body.innerHTML = '<div id="app"></div>';
  const world = makeWorld();
  const api = new ApiClient("/api/v1", world.fetchFn);
  const store = new Store(stateFromLocation());
  const dash = new Dashboard(document.getElementById("app")!, store, api);
  await dash.init();
  await dash.idle();
  return { dash, world, store };
}

const lastCall = (world: World, needle: string): URL => {
  const hits = world.calls.filter((c) => c.includes(needle));
  expect(hits.length, `no request matched ${needle}`).toBeGreaterThan(0);
  return new URL(hits[hits.length - 1], "http://local");
};

beforeEach(() => {
  history.replaceState(null, "", "/");
});

describe("community click", () => {
  it("narrows the geo request and the rendered totals equal the API totals", async () => {
    const { dash, world } = await boot();

    const name = dash.network.panel.root.querySelector<HTMLButtonElement>(
      '.legend-row[data-label-id="C1"] .legend-name',
    );
    expect(name).not.toBeNull();
    name!.click();
    await dash.idle();

    const geoUrl = lastCall(world, "/analytics/geo");
    expect(geoUrl.searchParams.get("community")).toBe("C1");

    const served = world.geoEntries("C1");
    const servedTotal = served.reduce((a, [, n]) => a + n, 0);
    const rows = [...dash.geo.panel.body.querySelectorAll<HTMLElement>(".geo-row")];
    expect(rows.map((r) => [r.dataset.country, Number(r.dataset.count)])).toEqual(served);
    const renderedTotal = rows.reduce((a, r) => a + Number(r.dataset.count), 0);
    expect(renderedTotal).toBe(servedTotal);
    expect(dash.geo.panel.body.querySelector<HTMLElement>(".geo-list")!.dataset.total).toBe(
      String(servedTotal),
    );

    // every other selection-driven request carries the filter too
    expect(lastCall(world, "/analytics/timeline").searchParams.get("community")).toBe("C1");
    expect(lastCall(world, "/analytics/wordcloud").searchParams.get("community")).toBe("C1");
    expect(lastCall(world, "/posts").searchParams.get("community")).toBe("C1");

    // and the URL is shareable: it encodes the narrowed state
    const urlParams = new URLSearchParams(location.search);
    expect(urlParams.get("community")).toBe("C1");
    expect(urlParams.get("dataset")).toBe("demo");
  });
});

describe("proportions toggle", () => {
  it("requests mode=proportions and every rendered row sums to 1", async () => {
    const { dash, world } = await boot();

    const select = dash.matrix.panel.controls.querySelector<HTMLSelectElement>("select")!;
    select.value = "proportions";
    select.dispatchEvent(new Event("change"));
    await dash.idle();

    expect(lastCall(world, "/analytics/topics-per-community").searchParams.get("mode")).toBe(
      "proportions",
    );

    const rows = [...dash.matrix.panel.body.querySelectorAll<HTMLElement>(".mx-row")];
    expect(rows.length).toBe(2);
    for (const row of rows) {
      const sum = [...row.querySelectorAll<HTMLElement>(".mx-cell")].reduce(
        (a, cell) => a + Number(cell.dataset.value),
        0,
      );
      expect(sum).toBeCloseTo(1, 9);
    }
  });
});

describe("label rename", () => {
  it("shows the new community name in the network legend and the cross-tab without a reload", async () => {
    const { dash, world } = await boot();

    const before = dash.matrix.panel.body.querySelector<HTMLElement>(
      '.mx-row[data-row-id="C1"] .mx-rowname',
    );
    expect(before!.textContent).toBe("Community C1");

    dash.network.panel.root
      .querySelector<HTMLButtonElement>('.legend-row[data-label-id="C1"] .legend-edit')!
      .click();
    const input = dash.network.panel.root.querySelector<HTMLInputElement>(".legend-input")!;
    input.value = "Skeptics";
    input.dispatchEvent(new Event("input"));
    input.dispatchEvent(new KeyboardEvent("keydown", { key: "Enter" }));

    await vi.waitFor(() => expect(world.communityNames.C1).toBe("Skeptics"));
    await dash.idle();

    await vi.waitFor(() => {
      const legendName = dash.network.panel.root.querySelector<HTMLElement>(
        '.legend-row[data-label-id="C1"] .legend-name',
      );
      expect(legendName?.textContent).toBe("Skeptics");
      const rowName = dash.matrix.panel.body.querySelector<HTMLElement>(
        '.mx-row[data-row-id="C1"] .mx-rowname',
      );
      expect(rowName?.textContent).toBe("Skeptics");
    });
  });

  it("keeps the half-typed draft in the store and out of the URL", async () => {
    const { dash, store } = await boot();
    dash.network.panel.root
      .querySelector<HTMLButtonElement>('.legend-row[data-label-id="C2"] .legend-edit')!
      .click();
    const input = dash.network.panel.root.querySelector<HTMLInputElement>(".legend-input")!;
    input.value = "half a na";
    input.dispatchEvent(new Event("input"));
    expect(store.get().labelDrafts["community:C2"]).toBe("half a na");
    expect(location.search).not.toContain("half");
  });
});

describe("URL round-trip", () => {
  it("boots from a shared link and sends the same filters to the API", async () => {
    const { dash, world, store } = await boot(
      "/?dataset=demo&keywords=caf%C3%A9%2Cvax&language=de&community=C2&granularity=hour",
    );
    expect(store.get().filters).toMatchObject({
      keywords: ["café", "vax"],
      language: "de",
      community: "C2",
    });

    const tl = lastCall(world, "/analytics/timeline");
    expect(tl.searchParams.get("keywords")).toBe("café,vax");
    expect(tl.searchParams.get("language")).toBe("de");
    expect(tl.searchParams.get("community")).toBe("C2");
    expect(tl.searchParams.get("granularity")).toBe("hour");

    // the address bar still encodes the same state after boot
    const q = new URLSearchParams(location.search);
    expect(q.get("keywords")).toBe("café,vax");
    expect(q.get("community")).toBe("C2");
    expect(q.get("granularity")).toBe("hour");
    void dash;
  });

  it("hides the geo panel for youtube datasets", async () => {
    const { dash } = await boot();
    dash.geo.setPlatform("youtube");
    expect(dash.geo.panel.root.hidden).toBe(true);
    dash.geo.setPlatform("twitter");
    expect(dash.geo.panel.root.hidden).toBe(false);
  });
});
