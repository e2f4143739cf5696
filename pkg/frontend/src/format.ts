// Small display helpers shared by the panels.

const intFmt = new Intl.NumberFormat("en-US");

export function fmtInt(n: number): string {
  return intFmt.format(n);
}

export function fmtShare(x: number): string {
  return `${(x * 100).toFixed(1)}%`;
}

/** Trim an RFC-3339 bucket label to what the granularity needs. */
export function fmtBucket(label: string, granularity: "hour" | "day" | "week"): string {
  if (granularity === "hour") return label.slice(0, 16).replace("T", " ");
  return label.slice(0, 10);
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function clamp(x: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, x));
}
