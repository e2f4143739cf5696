// The interaction graph: canvas points colored by community, with pan/zoom
// and level-of-detail labels (high-degree nodes first, budget grows as you
// zoom in). The legend lists communities; clicking one narrows the filter,
// and names can be renamed inline.
//
// All drawing is guarded on the 2d context so the panel still builds its
// DOM (legend, stats) in environments without canvas rasterization.

import { ApiClient } from "../api";
import { colorFor } from "../color";
import { fmtInt } from "../format";
import { Panel } from "../panel";
import {
  fitView,
  labelBudget,
  nearestIndex,
  panBy,
  Pt,
  toScreen,
  Viewport,
  zoomAt,
} from "../scatter";
import { NetworkNode, NetworkResponse } from "../types";
import { Store, ViewState } from "../viewstate";

export type RenameFn = (kind: "community" | "topic", ref: string, name: string) => Promise<void>;

interface CommunityRow {
  id: string;
  name: string;
  nodes: number;
}

export function communityRows(nodes: readonly NetworkNode[]): CommunityRow[] {
  const byId = new Map<string, CommunityRow>();
  for (const node of nodes) {
    if (!node.community) continue;
    const row = byId.get(node.community);
    if (row) {
      row.nodes += 1;
    } else {
      byId.set(node.community, {
        id: node.community,
        name: node.community_name ?? node.community,
        nodes: 1,
      });
    }
  }
  return [...byId.values()].sort((a, b) => b.nodes - a.nodes || a.id.localeCompare(b.id));
}

export class NetworkPanel {
  readonly panel = new Panel("network", "Interaction network");
  private canvas: HTMLCanvasElement;
  private legend: HTMLElement;
  private stats: HTMLElement;

  private data: NetworkResponse | null = null;
  private view: Viewport = { ox: 0, oy: 0, scale: 1 };
  private fitScale = 1;
  private screen: Pt[] = [];
  private dragFrom: Pt | null = null;
  private activeCommunity: string | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly store: Store,
    private readonly rename: RenameFn,
  ) {
    this.canvas = document.createElement("canvas");
    this.canvas.className = "net-canvas";
    this.canvas.height = 420;
    this.legend = document.createElement("div");
    this.legend.className = "net-legend";
    this.stats = document.createElement("p");
    this.stats.className = "net-stats";
    this.panel.body.append(this.canvas, this.stats, this.legend);

    const reset = document.createElement("button");
    reset.type = "button";
    reset.textContent = "fit";
    reset.title = "reset pan/zoom";
    reset.addEventListener("click", () => {
      this.fit();
      this.draw();
    });
    this.panel.controls.append(reset);

    this.canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const box = this.canvas.getBoundingClientRect();
      const factor = Math.exp(-ev.deltaY * 0.0015);
      this.view = zoomAt(this.view, ev.clientX - box.left, ev.clientY - box.top, factor);
      this.draw();
    });
    this.canvas.addEventListener("mousedown", (ev) => {
      this.dragFrom = { x: ev.clientX, y: ev.clientY };
    });
    this.canvas.addEventListener("mousemove", (ev) => {
      if (!this.dragFrom) return;
      this.view = panBy(this.view, ev.clientX - this.dragFrom.x, ev.clientY - this.dragFrom.y);
      this.dragFrom = { x: ev.clientX, y: ev.clientY };
      this.draw();
    });
    const endDrag = () => {
      this.dragFrom = null;
    };
    this.canvas.addEventListener("mouseup", endDrag);
    this.canvas.addEventListener("mouseleave", endDrag);
    this.canvas.addEventListener("click", (ev) => {
      const box = this.canvas.getBoundingClientRect();
      const hit = this.pick(ev.clientX - box.left, ev.clientY - box.top);
      if (hit === null) return;
      const node = this.data!.nodes[hit];
      if (node.community) this.filterCommunity(node.community);
    });
  }

  /** Nearest node within 8 px of the given canvas point, or null. */
  pick(x: number, y: number): number | null {
    if (!this.data) return null;
    const i = nearestIndex(this.screen, x, y, 8);
    return i >= 0 ? i : null;
  }

  async refresh(state: ViewState): Promise<void> {
    if (!state.dataset) return;
    this.activeCommunity = state.filters.community;
    const dataset = state.dataset;
    await this.panel.load(
      () => this.api.network(dataset),
      (resp) => {
        this.data = resp;
        // keep body children (replaced by load/showError paths otherwise)
        this.panel.body.replaceChildren(this.canvas, this.stats, this.legend);
        this.fit();
        this.renderLegend(resp);
        this.stats.textContent =
          `${fmtInt(resp.node_count)} nodes, ${fmtInt(resp.edge_count)} edges` +
          (resp.edges_returned < resp.edge_count
            ? ` (${fmtInt(resp.edges_returned)} drawn)`
            : "");
        this.draw();
      },
    );
  }

  /** Re-dim for a changed community selection without refetching. */
  applySelection(state: ViewState): void {
    if (this.activeCommunity === state.filters.community) return;
    this.activeCommunity = state.filters.community;
    this.draw();
  }

  private fit(): void {
    if (!this.data) return;
    const w = this.canvas.clientWidth || 800;
    this.canvas.width = w;
    this.view = fitView(this.data.nodes, w, this.canvas.height);
    this.fitScale = this.view.scale;
  }

  private matchesSelection(node: NetworkNode): boolean {
    if (!this.activeCommunity) return true;
    return node.community === this.activeCommunity || node.community_name === this.activeCommunity;
  }

  private draw(): void {
    if (!this.data) return;
    const nodes = this.data.nodes;
    this.screen = nodes.map((n) => toScreen(n, this.view));

    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const w = this.canvas.width;
    const h = this.canvas.height;
    ctx.clearRect(0, 0, w, h);

    // edges: skip when zoomed far out on a big graph -- they read as noise
    const zoom = this.view.scale / this.fitScale;
    const index = new Map<string, number>();
    nodes.forEach((n, i) => index.set(n.id, i));
    if (this.data.edges_returned <= 20_000 || zoom > 2) {
      ctx.globalAlpha = 0.15;
      ctx.strokeStyle = "#7a8794";
      ctx.lineWidth = 0.5;
      ctx.beginPath();
      for (const e of this.data.edges) {
        const a = index.get(e.source);
        const b = index.get(e.target);
        if (a === undefined || b === undefined) continue;
        ctx.moveTo(this.screen[a].x, this.screen[a].y);
        ctx.lineTo(this.screen[b].x, this.screen[b].y);
      }
      ctx.stroke();
      ctx.globalAlpha = 1;
    }

    let maxDegree = 1;
    for (const n of nodes) if (n.degree > maxDegree) maxDegree = n.degree;

    for (let i = 0; i < nodes.length; i++) {
      const n = nodes[i];
      const s = this.screen[i];
      if (s.x < -10 || s.y < -10 || s.x > w + 10 || s.y > h + 10) continue;
      const r = 1.5 + 4 * Math.sqrt(n.degree / maxDegree);
      ctx.globalAlpha = this.matchesSelection(n) ? 0.9 : 0.12;
      ctx.fillStyle = n.community ? colorFor(`community:${n.community}`) : "#9aa3ab";
      ctx.beginPath();
      ctx.arc(s.x, s.y, r, 0, 2 * Math.PI);
      ctx.fill();
    }
    ctx.globalAlpha = 1;

    // labels: highest-degree visible nodes first, budget set by zoom level
    const budget = labelBudget(zoom, nodes.length);
    if (budget > 0) {
      const visible: number[] = [];
      for (let i = 0; i < nodes.length; i++) {
        const s = this.screen[i];
        if (s.x >= 0 && s.y >= 0 && s.x <= w && s.y <= h) visible.push(i);
      }
      visible.sort((a, b) => nodes[b].degree - nodes[a].degree);
      ctx.font = "11px system-ui, sans-serif";
      ctx.fillStyle = "#2b3036";
      for (const i of visible.slice(0, budget)) {
        ctx.fillText(nodes[i].id, this.screen[i].x + 5, this.screen[i].y - 4);
      }
    }
  }

  private renderLegend(resp: NetworkResponse): void {
    this.legend.replaceChildren();
    for (const row of communityRows(resp.nodes)) {
      const entry = document.createElement("div");
      entry.className = "legend-row";
      entry.dataset.labelId = row.id;

      const dot = document.createElement("span");
      dot.className = "dot";
      dot.style.background = colorFor(`community:${row.id}`);

      const name = document.createElement("button");
      name.type = "button";
      name.className = "legend-name";
      name.textContent = row.name;
      name.title = `only ${row.name} (${fmtInt(row.nodes)} members)`;
      name.addEventListener("click", () => this.filterCommunity(row.id));

      const count = document.createElement("span");
      count.className = "legend-count";
      count.textContent = fmtInt(row.nodes);

      const edit = document.createElement("button");
      edit.type = "button";
      edit.className = "legend-edit";
      edit.textContent = "✎";
      edit.title = "rename community";
      edit.addEventListener("click", () => this.startRename(entry, row));

      entry.append(dot, name, count, edit);
      this.legend.append(entry);
    }
  }

  /** Swap the legend row into an input; Enter commits, Escape cancels. */
  private startRename(entry: HTMLElement, row: CommunityRow): void {
    const draftKey = `community:${row.id}`;
    const input = document.createElement("input");
    input.type = "text";
    input.className = "legend-input";
    input.value = this.store.get().labelDrafts[draftKey] ?? row.name;
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
        await this.rename("community", row.id, value);
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

  private filterCommunity(labelId: string): void {
    const filters = { ...this.store.get().filters, community: labelId };
    this.store.update({ filters, postsPage: 1 });
  }
}
