// Stable colors: the same community/topic id gets the same color in every
// panel and across reloads, so cross-panel reading stays coherent.

const PALETTE = [
  "#4e79a7",
  "#f28e2b",
  "#e15759",
  "#76b7b2",
  "#59a14f",
  "#edc948",
  "#b07aa1",
  "#ff9da7",
  "#9c755f",
  "#bab0ac",
  "#86bcb6",
  "#d37295",
];

/** FNV-1a over the id keeps the id -> color mapping order-independent. */
export function colorFor(id: string): string {
  let h = 0x811c9dc5;
  for (let i = 0; i < id.length; i++) {
    h ^= id.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return PALETTE[(h >>> 0) % PALETTE.length];
}

export const SENTIMENT_COLORS: Record<string, string> = {
  positive: "#59a14f",
  negative: "#e15759",
  neutral: "#9aa3ab",
  unknown: "#d5dade",
};

export const SENTIMENT_ORDER = ["positive", "negative", "neutral", "unknown"];
