// Pure geometry for the canvas panels: world -> screen mapping, nearest-point
// lookup, and the label level-of-detail budget. No DOM access here, so the
// behavior is unit-testable without a rendering context.

export interface Pt {
  x: number;
  y: number;
}

export interface Viewport {
  ox: number; // world x at screen x=0
  oy: number;
  scale: number; // screen px per world unit
}

/** Fit all points into w x h with a uniform scale, centered, padded. */
export function fitView(points: readonly Pt[], w: number, h: number, pad = 20): Viewport {
  if (points.length === 0 || w <= 0 || h <= 0) return { ox: 0, oy: 0, scale: 1 };
  let minX = Infinity;
  let maxX = -Infinity;
  let minY = Infinity;
  let maxY = -Infinity;
  for (const p of points) {
    if (p.x < minX) minX = p.x;
    if (p.x > maxX) maxX = p.x;
    if (p.y < minY) minY = p.y;
    if (p.y > maxY) maxY = p.y;
  }
  const spanX = maxX - minX || 1;
  const spanY = maxY - minY || 1;
  const scale = Math.min((w - 2 * pad) / spanX, (h - 2 * pad) / spanY);
  // center the content
  const cx = (minX + maxX) / 2;
  const cy = (minY + maxY) / 2;
  return { ox: cx - w / 2 / scale, oy: cy - h / 2 / scale, scale };
}

export function toScreen(p: Pt, view: Viewport): Pt {
  return { x: (p.x - view.ox) * view.scale, y: (p.y - view.oy) * view.scale };
}

export function toWorld(p: Pt, view: Viewport): Pt {
  return { x: p.x / view.scale + view.ox, y: p.y / view.scale + view.oy };
}

/** Zoom by `factor` keeping the screen point (sx, sy) fixed. */
export function zoomAt(view: Viewport, sx: number, sy: number, factor: number): Viewport {
  const scale = view.scale * factor;
  return {
    ox: view.ox + sx / view.scale - sx / scale,
    oy: view.oy + sy / view.scale - sy / scale,
    scale,
  };
}

export function panBy(view: Viewport, dxScreen: number, dyScreen: number): Viewport {
  return {
    ox: view.ox - dxScreen / view.scale,
    oy: view.oy - dyScreen / view.scale,
    scale: view.scale,
  };
}

/**
 * Index of the point nearest to (x, y) within maxDist screen px, or -1.
 * Linear scan: even at 1e5 points this is a per-event hover cost, not a
 * per-frame one.
 */
export function nearestIndex(points: readonly Pt[], x: number, y: number, maxDist: number): number {
  let best = -1;
  let bestD2 = maxDist * maxDist;
  for (let i = 0; i < points.length; i++) {
    const dx = points[i].x - x;
    const dy = points[i].y - y;
    const d2 = dx * dx + dy * dy;
    if (d2 <= bestD2) {
      bestD2 = d2;
      best = i;
    }
  }
  return best;
}

/**
 * How many node labels to draw at a given zoom. `ratio` is the current scale
 * over the fitted-view scale (1 = fully zoomed out). The budget grows with
 * zoom and is capped so a 1e5-node graph never drowns in text.
 */
export function labelBudget(ratio: number, nodeCount: number, cap = 150): number {
  if (ratio <= 0 || nodeCount === 0) return 0;
  const budget = Math.round(12 * ratio * ratio);
  return Math.min(budget, cap, nodeCount);
}
