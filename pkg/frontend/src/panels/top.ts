// Top content in the current selection: posts by engagement, or shared URLs
// and hashtags by document frequency. URL entries link out.

import { ApiClient } from "../api";
import { fmtInt } from "../format";
import { Panel } from "../panel";
import { RankedListBody } from "../types";
import { Store, TopKind, ViewState } from "../viewstate";

const K = 20;

export class TopContentPanel {
  readonly panel = new Panel("top", "Top content");
  private kind!: HTMLSelectElement;

  constructor(
    private readonly api: ApiClient,
    private readonly store: Store,
  ) {
    this.kind = document.createElement("select");
    for (const k of ["posts", "urls", "hashtags"]) {
      const opt = document.createElement("option");
      opt.value = k;
      opt.textContent = k;
      this.kind.append(opt);
    }
    this.kind.addEventListener("change", () => {
      this.store.update({ topKind: this.kind.value as TopKind });
    });
    this.panel.controls.append(this.kind);
  }

  async refresh(state: ViewState): Promise<void> {
    if (!state.dataset) return;
    this.kind.value = state.topKind;
    const dataset = state.dataset;
    await this.panel.load(
      () =>
        this.api.aggregation(dataset, "top", state.filters, {
          kind: state.topKind,
          k: String(K),
        }),
      (resp) => this.render(resp.result as RankedListBody, state.topKind),
    );
  }

  private render(body: RankedListBody, kind: TopKind): void {
    if (body.type !== "ranked_list" || body.entries.length === 0) {
      this.panel.showEmpty();
      return;
    }
    const list = document.createElement("ol");
    list.className = "top-list";
    for (const [key, score] of body.entries) {
      const item = document.createElement("li");
      item.dataset.key = key;
      item.dataset.score = String(score);
      const label = document.createElement("span");
      label.className = "top-key";
      if (kind === "urls") {
        const a = document.createElement("a");
        a.href = key;
        a.target = "_blank";
        a.rel = "noopener noreferrer";
        a.textContent = key;
        label.append(a);
      } else {
        label.textContent = key;
      }
      const n = document.createElement("span");
      n.className = "top-score";
      n.textContent = fmtInt(score);
      n.title = kind === "posts" ? "engagement" : "posts containing it";
      item.append(label, n);
      list.append(item);
    }
    this.panel.body.replaceChildren(list);
  }
}
