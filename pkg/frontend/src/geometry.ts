/** Lasso geometry: point-in-polygon tests over screen coordinates. */

export interface Pt {
  x: number;
  y: number;
}

/** Ray-casting point-in-polygon; boundary points count as inside. */
export function pointInPolygon(p: Pt, polygon: Pt[]): boolean {
  if (polygon.length < 3) return false;
  let inside = false;
  for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
    const a = polygon[i]!;
    const b = polygon[j]!;
    if (onSegment(p, a, b)) return true;
    const crosses =
      a.y > p.y !== b.y > p.y &&
      p.x < ((b.x - a.x) * (p.y - a.y)) / (b.y - a.y) + a.x;
    if (crosses) inside = !inside;
  }
  return inside;
}

function onSegment(p: Pt, a: Pt, b: Pt): boolean {
  const cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
  if (Math.abs(cross) > 1e-9) return false;
  const dot = (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y);
  const len2 = (b.x - a.x) ** 2 + (b.y - a.y) ** 2;
  return dot >= 0 && dot <= len2;
}

/** Labels of the points enclosed by a lasso polygon. */
export function lassoSelect<T extends { label: string }>(
  points: (T & Pt)[],
  polygon: Pt[],
): string[] {
  return points.filter((p) => pointInPolygon(p, polygon)).map((p) => p.label);
}

/** Linear data->screen scale with padded range. */
export function makeScale(
  values: number[],
  rangeLo: number,
  rangeHi: number,
): (v: number) => number {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (!isFinite(lo) || !isFinite(hi)) {
    lo = 0;
    hi = 1;
  }
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const pad = (hi - lo) * 0.05;
  lo -= pad;
  hi += pad;
  return (v: number) => rangeLo + ((v - lo) / (hi - lo)) * (rangeHi - rangeLo);
}
