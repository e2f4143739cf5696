// Most frequent terms in the current selection (stopwords already removed
// server-side), sized by document frequency. Clicking a term adds it to the
// keyword filter.

import { ApiClient } from "../api";
import { fmtInt } from "../format";
import { Panel } from "../panel";
import { RankedListBody } from "../types";
import { Store, ViewState } from "../viewstate";

const K = 60;
const MIN_PX = 12;
const MAX_PX = 32;

export class WordcloudPanel {
  readonly panel = new Panel("wordcloud", "Frequent terms");

  constructor(
    private readonly api: ApiClient,
    private readonly store: Store,
  ) {}

  async refresh(state: ViewState): Promise<void> {
    if (!state.dataset) return;
    const dataset = state.dataset;
    await this.panel.load(
      () => this.api.aggregation(dataset, "wordcloud", state.filters, { k: String(K) }),
      (resp) => this.render(resp.result as RankedListBody),
    );
  }

  private render(body: RankedListBody): void {
    if (body.type !== "ranked_list" || body.entries.length === 0) {
      this.panel.showEmpty();
      return;
    }
    const lo = body.entries[body.entries.length - 1][1];
    const hi = body.entries[0][1];
    const cloud = document.createElement("div");
    cloud.className = "cloud";
    for (const [term, count] of body.entries) {
      const span = document.createElement("button");
      span.type = "button";
      span.className = "cloud-term";
      span.dataset.count = String(count);
      span.textContent = term;
      span.title = `${fmtInt(count)} posts; click to require this term`;
      const t = hi > lo ? (Math.sqrt(count) - Math.sqrt(lo)) / (Math.sqrt(hi) - Math.sqrt(lo)) : 1;
      span.style.fontSize = `${Math.round(MIN_PX + t * (MAX_PX - MIN_PX))}px`;
      span.addEventListener("click", () => this.requireTerm(term));
      cloud.append(span);
    }
    this.panel.body.replaceChildren(cloud);
  }

  private requireTerm(term: string): void {
    const filters = this.store.get().filters;
    if (filters.keywords.includes(term)) return;
    this.store.update({
      filters: { ...filters, keywords: [...filters.keywords, term] },
      postsPage: 1,
    });
  }
}
