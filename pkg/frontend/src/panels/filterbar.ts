// The filter bar: free inputs for keywords/dates/language/sentiment plus
// read-only chips for the community/topic selections that other panels set
// by click. Every commit resets the posts page -- a new filter is a new list.

import { EMPTY_FILTERS, Filters } from "../filters";
import { Store, ViewState } from "../viewstate";

const SENTIMENTS = ["", "positive", "negative", "neutral", "unknown"];

export class FilterBar {
  readonly root: HTMLElement;
  private keywords!: HTMLInputElement;
  private dateFrom!: HTMLInputElement;
  private dateTo!: HTMLInputElement;
  private language!: HTMLInputElement;
  private sentiment!: HTMLSelectElement;
  private chips!: HTMLElement;

  constructor(private readonly store: Store) {
    this.root = document.createElement("form");
    this.root.className = "filter-bar";
    this.root.addEventListener("submit", (ev) => ev.preventDefault());
    this.build();
    this.render(store.get());
  }

  private build(): void {
    this.keywords = this.textInput("keywords", "keywords (all must match)");
    this.dateFrom = this.textInput("date-from", "from (YYYY-MM-DD)");
    this.dateTo = this.textInput("date-to", "to (YYYY-MM-DD)");
    this.language = this.textInput("language", "language");
    this.language.size = 6;

    this.sentiment = document.createElement("select");
    this.sentiment.className = "filter-input";
    this.sentiment.dataset.field = "sentiment";
    for (const value of SENTIMENTS) {
      const opt = document.createElement("option");
      opt.value = value;
      opt.textContent = value || "any sentiment";
      this.sentiment.append(opt);
    }
    this.sentiment.addEventListener("change", () => this.commit());

    this.chips = document.createElement("div");
    this.chips.className = "filter-chips";

    const clear = document.createElement("button");
    clear.type = "button";
    clear.className = "filter-clear";
    clear.textContent = "clear";
    clear.addEventListener("click", () => {
      this.store.update({ filters: EMPTY_FILTERS, postsPage: 1 });
    });

    this.root.append(
      this.keywords,
      this.dateFrom,
      this.dateTo,
      this.language,
      this.sentiment,
      this.chips,
      clear,
    );
  }

  private textInput(field: string, placeholder: string): HTMLInputElement {
    const input = document.createElement("input");
    input.type = "text";
    input.className = "filter-input";
    input.placeholder = placeholder;
    input.dataset.field = field;
    input.addEventListener("change", () => this.commit());
    input.addEventListener("keydown", (ev) => {
      if (ev.key === "Enter") this.commit();
    });
    return input;
  }

  /** Read the inputs and push one combined filter update. */
  private commit(): void {
    const prev = this.store.get().filters;
    const next: Filters = {
      keywords: this.keywords.value
        .split(",")
        .map((t) => t.trim())
        .filter((t) => t.length > 0),
      dateFrom: this.dateFrom.value.trim() || null,
      dateTo: this.dateTo.value.trim() || null,
      language: this.language.value.trim() || null,
      sentiment: this.sentiment.value || null,
      community: prev.community,
      topic: prev.topic,
    };
    this.store.update({ filters: next, postsPage: 1 });
  }

  /** Reflect external state changes without clobbering a focused input. */
  render(state: ViewState): void {
    const f = state.filters;
    const set = (el: HTMLInputElement, value: string) => {
      if (document.activeElement !== el) el.value = value;
    };
    set(this.keywords, f.keywords.join(", "));
    set(this.dateFrom, f.dateFrom ?? "");
    set(this.dateTo, f.dateTo ?? "");
    set(this.language, f.language ?? "");
    if (document.activeElement !== this.sentiment) this.sentiment.value = f.sentiment ?? "";

    this.chips.replaceChildren();
    this.chip("community", f.community);
    this.chip("topic", f.topic);
  }

  private chip(kind: "community" | "topic", value: string | null): void {
    if (!value) return;
    const chip = document.createElement("span");
    chip.className = "filter-chip";
    chip.dataset.kind = kind;
    const label = document.createElement("span");
    label.textContent = `${kind}: ${value}`;
    const remove = document.createElement("button");
    remove.type = "button";
    remove.textContent = "×";
    remove.title = `clear ${kind} filter`;
    remove.addEventListener("click", () => {
      const filters = { ...this.store.get().filters, [kind]: null };
      this.store.update({ filters, postsPage: 1 });
    });
    chip.append(label, remove);
    this.chips.append(chip);
  }
}
