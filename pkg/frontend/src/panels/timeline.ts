// Posting volume over time as stacked bars, optionally split by sentiment.
// Clicking a bar narrows the date filter to that bucket.

import { ApiClient } from "../api";
import { SENTIMENT_COLORS, SENTIMENT_ORDER } from "../color";
import { fmtBucket, fmtInt } from "../format";
import { Panel } from "../panel";
import { TimeSeriesBody } from "../types";
import { Granularity, Store, ViewState } from "../viewstate";

const BUCKET_SECONDS: Record<Granularity, number> = {
  hour: 3600,
  day: 86400,
  week: 7 * 86400,
};

export class TimelinePanel {
  readonly panel = new Panel("timeline", "Timeline");
  private granularity!: HTMLSelectElement;
  private split!: HTMLInputElement;

  constructor(
    private readonly api: ApiClient,
    private readonly store: Store,
  ) {
    this.buildControls();
  }

  private buildControls(): void {
    this.granularity = document.createElement("select");
    for (const g of ["hour", "day", "week"]) {
      const opt = document.createElement("option");
      opt.value = g;
      opt.textContent = `per ${g}`;
      this.granularity.append(opt);
    }
    this.granularity.addEventListener("change", () => {
      this.store.update({ granularity: this.granularity.value as Granularity });
    });

    const splitLabel = document.createElement("label");
    this.split = document.createElement("input");
    this.split.type = "checkbox";
    this.split.addEventListener("change", () => {
      this.store.update({ splitBySentiment: this.split.checked });
    });
    splitLabel.append(this.split, document.createTextNode(" sentiment"));

    this.panel.controls.append(this.granularity, splitLabel);
  }

  async refresh(state: ViewState): Promise<void> {
    if (!state.dataset) return;
    this.granularity.value = state.granularity;
    this.split.checked = state.splitBySentiment;
    const dataset = state.dataset;
    await this.panel.load(
      () =>
        this.api.aggregation(dataset, "timeline", state.filters, {
          granularity: state.granularity,
          split_by_sentiment: String(state.splitBySentiment),
        }),
      (resp) => this.render(resp.result as TimeSeriesBody, state),
    );
  }

  private render(body: TimeSeriesBody, state: ViewState): void {
    if (body.type !== "time_series") {
      this.panel.showNote("unexpected response shape");
      return;
    }
    if (body.buckets.length === 0) {
      this.panel.showEmpty();
      return;
    }
    const total = body.counts.reduce((a, b) => a + b, 0);
    const peak = Math.max(...body.counts, 1);

    const chart = document.createElement("div");
    chart.className = "tl-chart";
    chart.dataset.total = String(total);

    for (let i = 0; i < body.buckets.length; i++) {
      const bar = document.createElement("button");
      bar.type = "button";
      bar.className = "tl-bar";
      bar.dataset.bucket = body.buckets[i];
      bar.dataset.count = String(body.counts[i]);
      const height = (body.counts[i] / peak) * 100;
      if (body.by_sentiment) {
        for (const s of SENTIMENT_ORDER) {
          const series = body.by_sentiment[s];
          const n = series ? series[i] : 0;
          if (!n) continue;
          const seg = document.createElement("span");
          seg.className = "tl-seg";
          seg.style.height = `${(n / peak) * 100}%`;
          seg.style.background = SENTIMENT_COLORS[s];
          bar.append(seg);
        }
      } else {
        const seg = document.createElement("span");
        seg.className = "tl-seg";
        seg.style.height = `${height}%`;
        bar.append(seg);
      }
      bar.title = `${fmtBucket(body.buckets[i], state.granularity)}: ${fmtInt(body.counts[i])}`;
      bar.addEventListener("click", () => this.zoomTo(body.buckets[i], state));
      chart.append(bar);
    }

    const caption = document.createElement("p");
    caption.className = "tl-caption";
    caption.textContent =
      `${fmtInt(total)} posts in ${fmtInt(body.buckets.length)} ${state.granularity} buckets ` +
      `(${fmtBucket(body.buckets[0], state.granularity)} – ` +
      `${fmtBucket(body.buckets[body.buckets.length - 1], state.granularity)})`;

    this.panel.body.replaceChildren(chart, caption);
  }

  /** Narrow the date filter to one bucket (date_to is inclusive). */
  private zoomTo(bucket: string, state: ViewState): void {
    const start = Date.parse(bucket);
    if (Number.isNaN(start)) return;
    const end = new Date(start + (BUCKET_SECONDS[state.granularity] - 1) * 1000);
    this.store.update({
      filters: { ...state.filters, dateFrom: bucket, dateTo: end.toISOString() },
      postsPage: 1,
    });
  }
}
