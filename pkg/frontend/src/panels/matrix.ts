// Topics-per-community cross-tab: one stacked bar per community, one segment
// per topic. Toggles between raw counts and within-community proportions.
// Clicking a community name or a topic swatch narrows the filter.

import { ApiClient } from "../api";
import { colorFor } from "../color";
import { fmtInt, fmtShare } from "../format";
import { Panel } from "../panel";
import { MatrixBody } from "../types";
import { MatrixMode, Store, ViewState } from "../viewstate";

export class MatrixPanel {
  readonly panel = new Panel("matrix", "Topics per community");
  private mode!: HTMLSelectElement;

  constructor(
    private readonly api: ApiClient,
    private readonly store: Store,
  ) {
    this.mode = document.createElement("select");
    for (const m of ["counts", "proportions"]) {
      const opt = document.createElement("option");
      opt.value = m;
      opt.textContent = m;
      this.mode.append(opt);
    }
    this.mode.addEventListener("change", () => {
      this.store.update({ matrixMode: this.mode.value as MatrixMode });
    });
    this.panel.controls.append(this.mode);
  }

  async refresh(state: ViewState): Promise<void> {
    if (!state.dataset) return;
    this.mode.value = state.matrixMode;
    const dataset = state.dataset;
    await this.panel.load(
      () =>
        this.api.aggregation(dataset, "topics-per-community", state.filters, {
          mode: state.matrixMode,
        }),
      (resp) => this.render(resp.result as MatrixBody, state.matrixMode),
    );
  }

  private render(body: MatrixBody, mode: MatrixMode): void {
    if (body.type !== "matrix") {
      this.panel.showNote(
        body.type === "capability_absent"
          ? ((body as unknown as { reason: string }).reason ?? "not available")
          : "unexpected response shape",
      );
      return;
    }
    if (body.row_ids.length === 0) {
      this.panel.showEmpty("no communities yet");
      return;
    }

    const table = document.createElement("div");
    table.className = "mx-table";
    for (let r = 0; r < body.row_ids.length; r++) {
      const row = document.createElement("div");
      row.className = "mx-row";
      row.dataset.rowId = body.row_ids[r];

      const head = document.createElement("button");
      head.type = "button";
      head.className = "mx-rowhead";
      head.title = `only community ${body.row_names[r]}`;
      const dot = document.createElement("span");
      dot.className = "dot";
      dot.style.background = colorFor(`community:${body.row_ids[r]}`);
      const name = document.createElement("span");
      name.className = "mx-rowname";
      name.textContent = body.row_names[r];
      head.append(dot, name);
      head.addEventListener("click", () => this.filterCommunity(body.row_ids[r]));

      const bar = document.createElement("div");
      bar.className = "mx-bar";
      const rowTotal = body.values[r].reduce((a, b) => a + b, 0);
      for (let c = 0; c < body.col_ids.length; c++) {
        const value = body.values[r][c];
        const cell = document.createElement("span");
        cell.className = "mx-cell";
        cell.dataset.colId = body.col_ids[c];
        cell.dataset.value = String(value);
        if (value > 0 && rowTotal > 0) {
          cell.style.width = `${(value / rowTotal) * 100}%`;
          cell.style.background = colorFor(`topic:${c}`);
        }
        cell.title =
          `${body.row_names[r]} × ${body.col_names[c]}: ` +
          (mode === "proportions" ? fmtShare(value) : fmtInt(value));
        bar.append(cell);
      }
      row.append(head, bar);
      table.append(row);
    }

    const legend = document.createElement("div");
    legend.className = "mx-legend";
    for (let c = 0; c < body.col_ids.length; c++) {
      const entry = document.createElement("button");
      entry.type = "button";
      entry.className = "mx-topic";
      entry.dataset.colId = body.col_ids[c];
      entry.title = `only topic ${body.col_names[c]}`;
      const dot = document.createElement("span");
      dot.className = "dot";
      dot.style.background = colorFor(`topic:${c}`);
      const name = document.createElement("span");
      name.textContent = body.col_names[c];
      entry.append(dot, name);
      entry.addEventListener("click", () => this.filterTopic(body.col_ids[c]));
      legend.append(entry);
    }

    this.panel.body.replaceChildren(table, legend);
  }

  private filterCommunity(labelId: string): void {
    const filters = { ...this.store.get().filters, community: labelId };
    this.store.update({ filters, postsPage: 1 });
  }

  private filterTopic(labelId: string): void {
    const filters = { ...this.store.get().filters, topic: labelId };
    this.store.update({ filters, postsPage: 1 });
  }
}
