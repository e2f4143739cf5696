// Wires the store, the API client, and every panel together.
//
// One rule drives refreshes: compare the previous and next view state and
// refetch exactly the panels whose inputs changed. Filter edits hit all the
// selection-driven panels (their in-flight requests are aborted by the
// client's per-panel cancellation); control tweaks hit only their own panel.
// Renames go through rename(): on success the panels that display label
// names refetch, so the new name shows up everywhere without a reload.

import { ApiClient } from "./api";
import { filtersEqual } from "./filters";
import { fmtInt } from "./format";
import { DistributionPanel } from "./panels/distribution";
import { FilterBar } from "./panels/filterbar";
import { GeoPanel } from "./panels/geo";
import { MatrixPanel } from "./panels/matrix";
import { NetworkPanel } from "./panels/network";
import { PostsPanel } from "./panels/posts";
import { TimelinePanel } from "./panels/timeline";
import { TopContentPanel } from "./panels/top";
import { TopicMapPanel } from "./panels/topicmap";
import { WordcloudPanel } from "./panels/wordcloud";
import { stateFromLocation, Store, syncUrl, ViewState } from "./viewstate";

export class Dashboard {
  readonly store: Store;
  readonly api: ApiClient;

  readonly filterBar: FilterBar;
  readonly timeline: TimelinePanel;
  readonly distribution: DistributionPanel;
  readonly geo: GeoPanel;
  readonly top: TopContentPanel;
  readonly wordcloud: WordcloudPanel;
  readonly matrix: MatrixPanel;
  readonly network: NetworkPanel;
  readonly topicmap: TopicMapPanel;
  readonly posts: PostsPanel;

  private datasetSelect: HTMLSelectElement;
  private summary: HTMLElement;
  private inflight = new Set<Promise<unknown>>();

  constructor(root: HTMLElement, store?: Store, api?: ApiClient) {
    this.store = store ?? new Store(stateFromLocation());
    this.api = api ?? new ApiClient();

    const rename = (kind: "community" | "topic", ref: string, name: string) =>
      this.rename(kind, ref, name);

    this.filterBar = new FilterBar(this.store);
    this.timeline = new TimelinePanel(this.api, this.store);
    this.distribution = new DistributionPanel(this.api, this.store);
    this.geo = new GeoPanel(this.api);
    this.top = new TopContentPanel(this.api, this.store);
    this.wordcloud = new WordcloudPanel(this.api, this.store);
    this.matrix = new MatrixPanel(this.api, this.store);
    this.network = new NetworkPanel(this.api, this.store, rename);
    this.topicmap = new TopicMapPanel(this.api, this.store, rename);
    this.posts = new PostsPanel(this.api, this.store);

    const topbar = document.createElement("div");
    topbar.className = "topbar";
    this.datasetSelect = document.createElement("select");
    this.datasetSelect.className = "dataset-select";
    this.datasetSelect.addEventListener("change", () => {
      this.store.update({
        dataset: this.datasetSelect.value,
        filters: { ...this.store.get().filters, community: null, topic: null },
        postsPage: 1,
      });
    });
    this.summary = document.createElement("div");
    this.summary.className = "summary";
    topbar.append(this.datasetSelect, this.summary);

    const grid = document.createElement("div");
    grid.className = "grid";
    grid.append(
      this.timeline.panel.root,
      this.distribution.panel.root,
      this.geo.panel.root,
      this.top.panel.root,
      this.wordcloud.panel.root,
      this.matrix.panel.root,
      this.network.panel.root,
      this.topicmap.panel.root,
      this.posts.panel.root,
    );

    root.replaceChildren(topbar, this.filterBar.root, grid);
    this.store.subscribe((next, prev) => this.onChange(next, prev));
  }

  /** Await every refresh the dashboard has started so far. */
  async idle(): Promise<void> {
    while (this.inflight.size > 0) {
      await Promise.all([...this.inflight]);
    }
  }

  private track(p: Promise<unknown> | void): void {
    if (!p) return;
    const tracked = p.catch(() => undefined).finally(() => this.inflight.delete(tracked));
    this.inflight.add(tracked);
  }

  async init(): Promise<void> {
    const list = await this.api.listDatasets();
    this.datasetSelect.replaceChildren();
    for (const d of list.datasets) {
      const opt = document.createElement("option");
      opt.value = d.dataset_id;
      opt.textContent = `${d.dataset_id} (${d.platform})`;
      this.datasetSelect.append(opt);
    }
    const state = this.store.get();
    const known = list.datasets.some((d) => d.dataset_id === state.dataset);
    if (!known) {
      if (list.datasets.length === 0) {
        this.summary.textContent = "no datasets — create one with the CLI, then reload";
        return;
      }
      // triggers onChange -> loadDataset
      this.store.update({ dataset: list.datasets[0].dataset_id });
      await this.idle();
      return;
    }
    this.datasetSelect.value = state.dataset!;
    this.track(this.loadDataset(state));
    await this.idle();
  }

  private onChange(next: ViewState, prev: ViewState): void {
    syncUrl(next);
    this.filterBar.render(next);

    if (next.dataset !== prev.dataset) {
      if (next.dataset) this.datasetSelect.value = next.dataset;
      this.track(this.loadDataset(next));
      return;
    }
    if (!filtersEqual(next.filters, prev.filters)) {
      this.refreshSelection(next);
      return;
    }
    if (next.granularity !== prev.granularity || next.splitBySentiment !== prev.splitBySentiment) {
      this.track(this.timeline.refresh(next));
    }
    if (next.matrixMode !== prev.matrixMode) {
      this.track(this.matrix.refresh(next));
    }
    if (next.topKind !== prev.topKind) {
      this.track(this.top.refresh(next));
    }
    if (next.postsPage !== prev.postsPage) {
      this.track(this.posts.refresh(next));
    }
  }

  /** Everything that depends on the current selection (filters). */
  private refreshSelection(state: ViewState): void {
    this.track(this.timeline.refresh(state));
    this.track(this.distribution.refresh(state));
    this.track(this.geo.refresh(state));
    this.track(this.top.refresh(state));
    this.track(this.wordcloud.refresh(state));
    this.track(this.matrix.refresh(state));
    this.track(this.posts.refresh(state));
    // full-graph panels only re-style for the new selection
    this.network.applySelection(state);
    this.topicmap.applySelection(state);
  }

  private async loadDataset(state: ViewState): Promise<void> {
    if (!state.dataset) return;
    try {
      const summary = await this.api.datasetSummary(state.dataset);
      this.summary.replaceChildren();
      const bits: [string, string][] = [
        ["platform", summary.platform],
        ["posts", fmtInt(summary.post_count)],
        ["users", fmtInt(summary.user_count)],
        ["nodes", fmtInt(summary.node_count)],
        ["edges", fmtInt(summary.edge_count)],
        ["communities", fmtInt(summary.community_count)],
        ["version", String(summary.version)],
      ];
      for (const [k, v] of bits) {
        const span = document.createElement("span");
        span.className = "summary-stat";
        span.dataset.stat = k;
        span.textContent = `${k} ${v}`;
        this.summary.append(span);
      }
      this.geo.setPlatform(summary.platform);
    } catch (err) {
      this.summary.textContent = err instanceof Error ? err.message : String(err);
      return;
    }
    this.refreshSelection(state);
    this.track(this.network.refresh(state));
    this.track(this.topicmap.refresh(state));
  }

  /**
   * Rename a community or topic, then refetch every panel that shows label
   * names (network legend, topic map legend, the cross-tab axes).
   */
  async rename(kind: "community" | "topic", ref: string, name: string): Promise<void> {
    const state = this.store.get();
    if (!state.dataset) return;
    await this.api.rename(state.dataset, kind, ref, name);
    const jobs: Promise<void>[] = [this.matrix.refresh(state)];
    if (kind === "community") jobs.push(this.network.refresh(state));
    else jobs.push(this.topicmap.refresh(state));
    for (const j of jobs) this.track(j);
    await Promise.all(jobs);
  }
}
