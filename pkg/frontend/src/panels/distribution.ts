// Language and sentiment breakdowns of the current selection, side by side.
// Clicking a row narrows the corresponding filter to that value.

import { ApiClient } from "../api";
import { fmtInt } from "../format";
import { Panel } from "../panel";
import { CategoricalBody } from "../types";
import { Store, ViewState } from "../viewstate";

const FIELDS = ["language", "sentiment"] as const;
type Field = (typeof FIELDS)[number];

export class DistributionPanel {
  readonly panel = new Panel("distribution", "Languages & sentiment");
  private readonly columns = new Map<Field, HTMLElement>();

  constructor(
    private readonly api: ApiClient,
    private readonly store: Store,
  ) {
    const wrap = document.createElement("div");
    wrap.className = "dist-wrap";
    for (const field of FIELDS) {
      const col = document.createElement("div");
      col.className = "dist-col";
      col.dataset.field = field;
      const h = document.createElement("h3");
      h.textContent = field;
      col.append(h);
      this.columns.set(field, col);
      wrap.append(col);
    }
    this.panel.body.append(wrap);
  }

  async refresh(state: ViewState): Promise<void> {
    if (!state.dataset) return;
    const dataset = state.dataset;
    await Promise.all(
      FIELDS.map((field) =>
        this.loadColumn(field, () =>
          this.api.aggregation(dataset, "distribution", state.filters, { field }, `distribution:${field}`),
        ),
      ),
    );
  }

  private async loadColumn(field: Field, fetcher: () => Promise<{ result: unknown }>): Promise<void> {
    const col = this.columns.get(field)!;
    try {
      const resp = await fetcher();
      this.renderColumn(col, field, resp.result as CategoricalBody);
    } catch (err) {
      if (err instanceof DOMException && err.name === "AbortError") return;
      const p = document.createElement("p");
      p.className = "panel-error";
      p.textContent = err instanceof Error ? err.message : String(err);
      this.resetColumn(col, field).append(p);
    }
  }

  private resetColumn(col: HTMLElement, field: Field): HTMLElement {
    col.replaceChildren();
    const h = document.createElement("h3");
    h.textContent = field;
    col.append(h);
    return col;
  }

  private renderColumn(col: HTMLElement, field: Field, body: CategoricalBody): void {
    this.resetColumn(col, field);
    if (body.type !== "categorical" || body.entries.length === 0) {
      const p = document.createElement("p");
      p.className = "panel-empty";
      p.textContent = "none";
      col.append(p);
      return;
    }
    const peak = body.entries[0][1] || 1;
    for (const [value, count] of body.entries) {
      const row = document.createElement("button");
      row.type = "button";
      row.className = "dist-row";
      row.dataset.value = value;
      row.dataset.count = String(count);
      row.title = `only ${field} = ${value}`;
      const name = document.createElement("span");
      name.className = "dist-name";
      name.textContent = value;
      const bar = document.createElement("span");
      bar.className = "dist-bar";
      bar.style.width = `${(count / peak) * 100}%`;
      const n = document.createElement("span");
      n.className = "dist-count";
      n.textContent = fmtInt(count);
      row.append(name, bar, n);
      row.addEventListener("click", () => {
        const filters = { ...this.store.get().filters, [field]: value };
        this.store.update({ filters, postsPage: 1 });
      });
      col.append(row);
    }
  }
}
