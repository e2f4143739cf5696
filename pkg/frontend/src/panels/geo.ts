// Country distribution of the current selection. The whole panel is hidden
// for platforms without geolocation (the service reports the capability as
// absent; youtube datasets are also hidden up front from the summary).

import { ApiClient } from "../api";
import { fmtInt } from "../format";
import { Panel } from "../panel";
import { CapabilityAbsentBody, CategoricalBody } from "../types";
import { ViewState } from "../viewstate";

export class GeoPanel {
  readonly panel = new Panel("geo", "Countries");

  constructor(private readonly api: ApiClient) {}

  setPlatform(platform: string): void {
    if (platform === "youtube") this.panel.hide();
    else this.panel.show();
  }

  async refresh(state: ViewState): Promise<void> {
    if (!state.dataset || this.panel.root.hidden) return;
    const dataset = state.dataset;
    await this.panel.load(
      () => this.api.aggregation(dataset, "geo", state.filters),
      (resp) => this.render(resp.result as CategoricalBody | CapabilityAbsentBody),
    );
  }

  private render(body: CategoricalBody | CapabilityAbsentBody): void {
    if (body.type === "capability_absent") {
      this.panel.hide();
      return;
    }
    if (body.entries.length === 0) {
      this.panel.showEmpty("no geolocated posts in selection");
      return;
    }
    const list = document.createElement("div");
    list.className = "geo-list";
    const peak = body.entries[0][1] || 1;
    let total = 0;
    for (const [country, count] of body.entries) {
      total += count;
      const row = document.createElement("div");
      row.className = "geo-row";
      row.dataset.country = country;
      row.dataset.count = String(count);
      const name = document.createElement("span");
      name.className = "geo-name";
      name.textContent = country;
      const bar = document.createElement("span");
      bar.className = "geo-bar";
      bar.style.width = `${(count / peak) * 100}%`;
      const n = document.createElement("span");
      n.className = "geo-count";
      n.textContent = fmtInt(count);
      row.append(name, bar, n);
      list.append(row);
    }
    list.dataset.total = String(total);
    const caption = document.createElement("p");
    caption.className = "geo-total";
    caption.textContent = `${fmtInt(total)} geolocated posts`;
    this.panel.body.replaceChildren(list, caption);
  }
}
