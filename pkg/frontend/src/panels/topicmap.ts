// Topic scatter: every clustered post as a point in the 2-d projection,
// colored by topic. Hover highlights the nearest point and names the claim
// it was assigned to; click narrows the topic filter. Topic names can be
// renamed from the legend.

import { ApiClient } from "../api";
import { colorFor } from "../color";
import { fmtInt } from "../format";
import { Panel } from "../panel";
import { fitView, nearestIndex, Pt, toScreen, Viewport } from "../scatter";
import { TopicMapResponse, TopicPoint } from "../types";
import { Store, ViewState } from "../viewstate";
import { RenameFn } from "./network";

interface TopicRow {
  index: number;
  label: string;
  points: number;
}

export function topicRows(points: readonly TopicPoint[]): TopicRow[] {
  const byIndex = new Map<number, TopicRow>();
  for (const p of points) {
    const row = byIndex.get(p.topic_index);
    if (row) {
      row.points += 1;
      row.label = p.topic_label;
    } else {
      byIndex.set(p.topic_index, { index: p.topic_index, label: p.topic_label, points: 1 });
    }
  }
  return [...byIndex.values()].sort((a, b) => a.index - b.index);
}

export class TopicMapPanel {
  readonly panel = new Panel("topicmap", "Topic map");
  private canvas: HTMLCanvasElement;
  private legend: HTMLElement;
  private tooltip: HTMLElement;

  private data: TopicMapResponse | null = null;
  private view: Viewport = { ox: 0, oy: 0, scale: 1 };
  private screen: Pt[] = [];
  private hover = -1;
  private activeTopic: string | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly store: Store,
    private readonly rename: RenameFn,
  ) {
    this.canvas = document.createElement("canvas");
    this.canvas.className = "topic-canvas";
    this.canvas.height = 320;
    this.legend = document.createElement("div");
    this.legend.className = "topic-legend";
    this.tooltip = document.createElement("div");
    this.tooltip.className = "topic-tooltip";
    this.tooltip.hidden = true;
    this.panel.body.append(this.canvas, this.tooltip, this.legend);

    this.canvas.addEventListener("mousemove", (ev) => {
      const box = this.canvas.getBoundingClientRect();
      const i = this.pick(ev.clientX - box.left, ev.clientY - box.top);
      if (i === this.hover) return;
      this.hover = i;
      this.draw();
      if (i >= 0 && this.data) {
        const p = this.data.points[i];
        this.tooltip.hidden = false;
        this.tooltip.textContent = `${p.topic_label} · ${p.post_id}`;
        this.tooltip.style.left = `${this.screen[i].x + 12}px`;
        this.tooltip.style.top = `${this.screen[i].y - 8}px`;
      } else {
        this.tooltip.hidden = true;
      }
    });
    this.canvas.addEventListener("mouseleave", () => {
      this.hover = -1;
      this.tooltip.hidden = true;
      this.draw();
    });
    this.canvas.addEventListener("click", (ev) => {
      const box = this.canvas.getBoundingClientRect();
      const i = this.pick(ev.clientX - box.left, ev.clientY - box.top);
      if (i >= 0 && this.data) this.filterTopic(this.data.points[i].topic_label);
    });
  }

  /** Nearest point within 12 px, or -1. */
  pick(x: number, y: number): number {
    return nearestIndex(this.screen, x, y, 12);
  }

  async refresh(state: ViewState): Promise<void> {
    if (!state.dataset) return;
    this.activeTopic = state.filters.topic;
    const dataset = state.dataset;
    await this.panel.load(
      () => this.api.topicMap(dataset),
      (resp) => {
        this.data = resp;
        this.panel.body.replaceChildren(this.canvas, this.tooltip, this.legend);
        if (resp.points.length === 0) {
          this.panel.showNote("no topic model yet — run topic clustering first");
          return;
        }
        const w = this.canvas.clientWidth || 600;
        this.canvas.width = w;
        this.view = fitView(resp.points, w, this.canvas.height);
        this.screen = resp.points.map((p) => toScreen(p, this.view));
        this.hover = -1;
        this.renderLegend(resp.points);
        this.draw();
      },
    );
  }

  applySelection(state: ViewState): void {
    if (this.activeTopic === state.filters.topic) return;
    this.activeTopic = state.filters.topic;
    this.draw();
  }

  private matchesSelection(p: TopicPoint): boolean {
    if (!this.activeTopic) return true;
    return p.topic_label === this.activeTopic;
  }

  private draw(): void {
    if (!this.data) return;
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    const points = this.data.points;
    for (let i = 0; i < points.length; i++) {
      const s = this.screen[i];
      ctx.globalAlpha = this.matchesSelection(points[i]) ? 0.85 : 0.12;
      ctx.fillStyle = colorFor(`topic:${points[i].topic_index}`);
      ctx.beginPath();
      ctx.arc(s.x, s.y, 3, 0, 2 * Math.PI);
      ctx.fill();
    }
    ctx.globalAlpha = 1;
    if (this.hover >= 0) {
      const s = this.screen[this.hover];
      ctx.strokeStyle = "#2b3036";
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      ctx.arc(s.x, s.y, 6, 0, 2 * Math.PI);
      ctx.stroke();
    }
  }

  private renderLegend(points: readonly TopicPoint[]): void {
    this.legend.replaceChildren();
    for (const row of topicRows(points)) {
      const entry = document.createElement("div");
      entry.className = "legend-row";
      entry.dataset.topicIndex = String(row.index);

      const dot = document.createElement("span");
      dot.className = "dot";
      dot.style.background = colorFor(`topic:${row.index}`);

      const name = document.createElement("button");
      name.type = "button";
      name.className = "legend-name";
      name.textContent = row.label;
      name.title = `only ${row.label} (${fmtInt(row.points)} posts)`;
      name.addEventListener("click", () => this.filterTopic(row.label));

      const count = document.createElement("span");
      count.className = "legend-count";
      count.textContent = fmtInt(row.points);

      const edit = document.createElement("button");
      edit.type = "button";
      edit.className = "legend-edit";
      edit.textContent = "✎";
      edit.title = "rename topic";
      edit.addEventListener("click", () => this.startRename(entry, row));

      entry.append(dot, name, count, edit);
      this.legend.append(entry);
    }
  }

  private startRename(entry: HTMLElement, row: TopicRow): void {
    const draftKey = `topic:${row.label}`;
    const input = document.createElement("input");
    input.type = "text";
    input.className = "legend-input";
    input.value = this.store.get().labelDrafts[draftKey] ?? row.label;
    input.addEventListener("input", () => {
      const drafts = { ...this.store.get().labelDrafts, [draftKey]: input.value };
      this.store.update({ labelDrafts: drafts });
    });
    input.addEventListener("keydown", async (ev) => {
      if (ev.key === "Escape") {
        this.clearDraft(draftKey);
        input.replaceWith();
        return;
      }
      if (ev.key !== "Enter") return;
      const value = input.value.trim();
      if (!value) return;
      input.disabled = true;
      try {
        // the service resolves either a label id or the current name
        await this.rename("topic", row.label, value);
        this.clearDraft(draftKey);
      } catch (err) {
        input.disabled = false;
        input.setCustomValidity(err instanceof Error ? err.message : String(err));
        input.reportValidity();
      }
    });
    entry.querySelector(".legend-name")?.replaceWith(input);
    input.focus();
  }

  private clearDraft(key: string): void {
    const drafts = { ...this.store.get().labelDrafts };
    delete drafts[key];
    this.store.update({ labelDrafts: drafts });
  }

  private filterTopic(label: string): void {
    const filters = { ...this.store.get().filters, topic: label };
    this.store.update({ filters, postsPage: 1 });
  }
}
