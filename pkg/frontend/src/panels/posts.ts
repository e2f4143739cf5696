// Paged drill-down into the posts matching the current selection, newest
// first (the service's ordering). Outbound links from each post are shown
// as-is.

import { ApiClient } from "../api";
import { fmtInt } from "../format";
import { Panel } from "../panel";
import { PostsResponse } from "../types";
import { Store, ViewState } from "../viewstate";

const PAGE_SIZE = 25;

export class PostsPanel {
  readonly panel = new Panel("posts", "Matching posts");
  private prev: HTMLButtonElement;
  private next: HTMLButtonElement;
  private where: HTMLElement;

  constructor(
    private readonly api: ApiClient,
    private readonly store: Store,
  ) {
    this.prev = document.createElement("button");
    this.prev.type = "button";
    this.prev.textContent = "‹ prev";
    this.prev.addEventListener("click", () => this.flip(-1));
    this.next = document.createElement("button");
    this.next.type = "button";
    this.next.textContent = "next ›";
    this.next.addEventListener("click", () => this.flip(1));
    this.where = document.createElement("span");
    this.where.className = "posts-where";
    this.panel.controls.append(this.prev, this.where, this.next);
  }

  private flip(delta: number): void {
    const page = Math.max(1, this.store.get().postsPage + delta);
    this.store.update({ postsPage: page });
  }

  async refresh(state: ViewState): Promise<void> {
    if (!state.dataset) return;
    const dataset = state.dataset;
    await this.panel.load(
      () => this.api.posts(dataset, state.filters, state.postsPage, PAGE_SIZE),
      (resp) => this.render(resp),
    );
  }

  private render(resp: PostsResponse): void {
    const pages = Math.max(1, Math.ceil(resp.total / resp.page_size));
    this.where.textContent = `page ${fmtInt(resp.page)} / ${fmtInt(pages)} · ${fmtInt(resp.total)} posts`;
    this.prev.disabled = resp.page <= 1;
    this.next.disabled = resp.page >= pages;

    if (resp.posts.length === 0) {
      this.panel.showEmpty();
      return;
    }
    const list = document.createElement("ul");
    list.className = "post-list";
    for (const post of resp.posts) {
      const item = document.createElement("li");
      item.className = "post";
      item.dataset.postId = post.id;

      const meta = document.createElement("div");
      meta.className = "post-meta";
      const bits = [
        post.created_at,
        post.author_id,
        post.language,
        post.sentiment,
        post.engagement !== undefined ? `♥ ${fmtInt(post.engagement)}` : undefined,
      ].filter((b): b is string => b !== undefined && b !== null);
      meta.textContent = bits.join(" · ");

      const text = document.createElement("p");
      text.className = "post-text";
      text.textContent = post.text;

      item.append(meta, text);
      if (post.urls && post.urls.length) {
        const links = document.createElement("div");
        links.className = "post-links";
        for (const url of post.urls) {
          const a = document.createElement("a");
          a.href = url;
          a.target = "_blank";
          a.rel = "noopener noreferrer";
          a.textContent = url;
          links.append(a);
        }
        item.append(links);
      }
      list.append(item);
    }
    this.panel.body.replaceChildren(list);
  }
}
