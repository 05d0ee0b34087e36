// Playability path overlay: converts server paths into canvas points,
// dropping anything outside the grid bounds, with one style per
// direction.

import type { PathStep, PlayabilityResponse } from "./api.js";

export interface OverlayPoint {
  row: number;
  col: number;
  x: number;
  y: number;
  action: string;
}

export const DIRECTION_STYLES: Record<string, { color: string; dash: number[] }> = {
  "left-to-right": { color: "#ffd400", dash: [] },
  "bottom-to-top": { color: "#00e5ff", dash: [6, 4] },
};

/** Path steps clipped to the grid; cell centers in pixel coordinates. */
export function overlayPoints(path: PathStep[], rows: number, cols: number,
                              cellSize: number): OverlayPoint[] {
  const points: OverlayPoint[] = [];
  for (const [row, col, action] of path) {
    if (row < 0 || row >= rows || col < 0 || col >= cols) continue;
    points.push({
      row,
      col,
      x: col * cellSize + cellSize / 2,
      y: row * cellSize + cellSize / 2,
      action,
    });
  }
  return points;
}

export function unplayableBadge(result: PlayabilityResponse): boolean {
  return !result.playable;
}

export function drawOverlay(ctx: CanvasRenderingContext2D,
                            result: PlayabilityResponse,
                            rows: number, cols: number, cellSize: number): void {
  for (const [direction, verdict] of Object.entries(result.directions)) {
    if (!verdict.playable || !verdict.path) continue;
    const style = DIRECTION_STYLES[direction] ?? { color: "#ffffff", dash: [] };
    const points = overlayPoints(verdict.path, rows, cols, cellSize);
    if (points.length === 0) continue;
    ctx.strokeStyle = style.color;
    ctx.setLineDash(style.dash);
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(points[0].x, points[0].y);
    for (const p of points.slice(1)) ctx.lineTo(p.x, p.y);
    ctx.stroke();
    ctx.setLineDash([]);
  }
}
