/**
 * Canvas scatter plot: draws every point (no decimation), pan/zoom, and
 * selection overlays. The world<->screen transform is pure for testing;
 * the render loop is the only DOM-coupled part.
 */

import { colorFor, SELECTED_STROKE } from "./colors.js";
import { Point } from "./api.js";
import { XY } from "./selection.js";

export interface Viewport {
  centerX: number;
  centerY: number;
  scale: number; // screen pixels per data unit
  width: number;
  height: number;
}

export function fitViewport(points: XY[], width: number, height: number): Viewport {
  if (points.length === 0) {
    return { centerX: 0, centerY: 0, scale: 1, width, height };
  }
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const spanX = Math.max(maxX - minX, 1e-9);
  const spanY = Math.max(maxY - minY, 1e-9);
  const scale = 0.9 * Math.min(width / spanX, height / spanY);
  return {
    centerX: (minX + maxX) / 2,
    centerY: (minY + maxY) / 2,
    scale,
    width,
    height,
  };
}

export function toScreen(p: XY, vp: Viewport): XY {
  return {
    x: vp.width / 2 + (p.x - vp.centerX) * vp.scale,
    y: vp.height / 2 - (p.y - vp.centerY) * vp.scale,
  };
}

export function toWorld(p: XY, vp: Viewport): XY {
  return {
    x: vp.centerX + (p.x - vp.width / 2) / vp.scale,
    y: vp.centerY - (p.y - vp.height / 2) / vp.scale,
  };
}

export function zoomAt(vp: Viewport, screenPoint: XY, factor: number): Viewport {
  const anchor = toWorld(screenPoint, vp);
  const scale = vp.scale * factor;
  return {
    ...vp,
    scale,
    centerX: anchor.x - (screenPoint.x - vp.width / 2) / scale,
    centerY: anchor.y + (screenPoint.y - vp.height / 2) / scale,
  };
}

export function panBy(vp: Viewport, dxScreen: number, dyScreen: number): Viewport {
  return {
    ...vp,
    centerX: vp.centerX - dxScreen / vp.scale,
    centerY: vp.centerY + dyScreen / vp.scale,
  };
}

export class ScatterRenderer {
  viewport: Viewport;
  pointRadius = 3;

  constructor(
    private canvas: HTMLCanvasElement,
    points: Point[],
  ) {
    this.viewport = fitViewport(points, canvas.width, canvas.height);
  }

  refit(points: Point[]): void {
    this.viewport = fitViewport(points, this.canvas.width, this.canvas.height);
  }

  draw(
    points: Point[],
    selection: Set<string>,
    overlay?: { lasso?: XY[]; rect?: { a: XY; b: XY }; playingId?: string | null },
  ): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const vp = this.viewport;
    ctx.clearRect(0, 0, vp.width, vp.height);

    for (const p of points) {
      const s = toScreen(p, vp);
      ctx.beginPath();
      ctx.arc(s.x, s.y, this.pointRadius, 0, Math.PI * 2);
      ctx.fillStyle = colorFor(p.label);
      ctx.fill();
      if (selection.has(p.id)) {
        ctx.strokeStyle = SELECTED_STROKE;
        ctx.lineWidth = 1.5;
        ctx.stroke();
      }
      if (overlay?.playingId === p.id) {
        ctx.beginPath();
        ctx.arc(s.x, s.y, this.pointRadius + 4, 0, Math.PI * 2);
        ctx.strokeStyle = "#ff7f00";
        ctx.lineWidth = 2;
        ctx.stroke();
      }
    }

    if (overlay?.rect) {
      const a = overlay.rect.a;
      const b = overlay.rect.b;
      ctx.strokeStyle = "#555";
      ctx.setLineDash([4, 3]);
      ctx.strokeRect(Math.min(a.x, b.x), Math.min(a.y, b.y),
                     Math.abs(b.x - a.x), Math.abs(b.y - a.y));
      ctx.setLineDash([]);
    }
    if (overlay?.lasso && overlay.lasso.length > 1) {
      ctx.strokeStyle = "#555";
      ctx.setLineDash([4, 3]);
      ctx.beginPath();
      ctx.moveTo(overlay.lasso[0].x, overlay.lasso[0].y);
      for (const v of overlay.lasso.slice(1)) ctx.lineTo(v.x, v.y);
      ctx.closePath();
      ctx.stroke();
      ctx.setLineDash([]);
    }
  }
}
