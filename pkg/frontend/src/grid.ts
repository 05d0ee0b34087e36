// Tile grid geometry and canvas painting. The geometry is pure so it
// can be tested without a DOM; the canvas calls are a thin shell.

import type { Palette } from "./palette.js";

export interface CellRect {
  row: number;
  col: number;
  x: number;
  y: number;
  size: number;
  color: string;
}

export class MalformedGrid extends Error {}

export function validateGrid(grid: unknown): number[][] {
  if (!Array.isArray(grid) || grid.length === 0) {
    throw new MalformedGrid("grid must be a non-empty array of rows");
  }
  const width = (grid[0] as unknown[]).length;
  for (const row of grid) {
    if (!Array.isArray(row) || row.length !== width) {
      throw new MalformedGrid("grid rows must all have the same length");
    }
    for (const v of row) {
      if (typeof v !== "number" || !Number.isInteger(v)) {
        throw new MalformedGrid("grid cells must be integer tile ids");
      }
    }
  }
  return grid as number[][];
}

export function cellRects(grid: number[][], palette: Palette, cellSize: number): CellRect[] {
  const rects: CellRect[] = [];
  grid.forEach((row, r) => {
    row.forEach((id, c) => {
      rects.push({
        row: r,
        col: c,
        x: c * cellSize,
        y: r * cellSize,
        size: cellSize,
        color: palette.colorOf(id),
      });
    });
  });
  return rects;
}

export function renderGrid(ctx: CanvasRenderingContext2D, grid: number[][],
                           palette: Palette, cellSize: number): void {
  for (const rect of cellRects(grid, palette, cellSize)) {
    ctx.fillStyle = rect.color;
    ctx.fillRect(rect.x, rect.y, rect.size, rect.size);
  }
}
