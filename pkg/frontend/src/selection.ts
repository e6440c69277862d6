/** Selection geometry: rectangles and free-drawn lasso polygons, in data
 * coordinates. Pure functions so they test without a DOM. */

export interface XY {
  x: number;
  y: number;
}

export interface Rect {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export function normalizeRect(r: Rect): Rect {
  return {
    x0: Math.min(r.x0, r.x1),
    y0: Math.min(r.y0, r.y1),
    x1: Math.max(r.x0, r.x1),
    y1: Math.max(r.y0, r.y1),
  };
}

export function inRect(p: XY, r: Rect): boolean {
  const n = normalizeRect(r);
  return p.x >= n.x0 && p.x <= n.x1 && p.y >= n.y0 && p.y <= n.y1;
}

/** Ray-casting point-in-polygon; vertices in order, implicit closure. */
export function inPolygon(p: XY, polygon: XY[]): boolean {
  if (polygon.length < 3) return false;
  let inside = false;
  for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
    const a = polygon[i];
    const b = polygon[j];
    const crosses =
      a.y > p.y !== b.y > p.y &&
      p.x < ((b.x - a.x) * (p.y - a.y)) / (b.y - a.y) + a.x;
    if (crosses) inside = !inside;
  }
  return inside;
}

export function selectInRect<T extends XY>(points: T[], r: Rect): T[] {
  return points.filter((p) => inRect(p, r));
}

export function selectInPolygon<T extends XY>(points: T[], polygon: XY[]): T[] {
  return points.filter((p) => inPolygon(p, polygon));
}
