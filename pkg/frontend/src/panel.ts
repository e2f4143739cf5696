// Shared panel shell. Every panel owns one of these and funnels its fetch
// lifecycle through load(): spinner while pending, content on success, an
// inline message on failure or absent capability. A panel is never blanked
// by an error -- the shell always shows *something* in its body.

import { ApiError, isAbort } from "./api";
import { escapeHtml } from "./format";

export class Panel {
  readonly root: HTMLElement;
  readonly body: HTMLElement;
  private readonly heading: HTMLElement;
  readonly controls: HTMLElement;

  constructor(id: string, title: string) {
    this.root = document.createElement("section");
    this.root.className = "panel";
    this.root.id = `panel-${id}`;
    const head = document.createElement("header");
    this.heading = document.createElement("h2");
    this.heading.textContent = title;
    this.controls = document.createElement("div");
    this.controls.className = "panel-controls";
    head.append(this.heading, this.controls);
    this.body = document.createElement("div");
    this.body.className = "panel-body";
    this.root.append(head, this.body);
  }

  setTitle(title: string): void {
    this.heading.textContent = title;
  }

  show(): void {
    this.root.hidden = false;
  }

  hide(): void {
    this.root.hidden = true;
  }

  /**
   * Run one fetch-and-render cycle. Aborted requests leave the panel
   * untouched (a newer cycle owns it now); errors render inline.
   */
  async load<T>(fetcher: () => Promise<T>, render: (data: T) => void): Promise<void> {
    this.root.classList.add("loading");
    try {
      const data = await fetcher();
      render(data);
      this.root.classList.remove("loading");
    } catch (err) {
      if (isAbort(err)) return;
      this.root.classList.remove("loading");
      this.showError(err);
    }
  }

  showError(err: unknown): void {
    const message =
      err instanceof ApiError
        ? `${err.code}: ${err.message}`
        : err instanceof Error
          ? err.message
          : String(err);
    this.body.innerHTML = `<p class="panel-error">${escapeHtml(message)}</p>`;
  }

  showNote(message: string): void {
    this.body.innerHTML = `<p class="panel-note">${escapeHtml(message)}</p>`;
  }

  showEmpty(message = "no matching posts"): void {
    this.body.innerHTML = `<p class="panel-empty">${escapeHtml(message)}</p>`;
  }
}
