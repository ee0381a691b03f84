// Drag-rectangle selection over grid cells, clamped to bounds.

import type { Region } from './types.js';

export interface CellPoint {
  row: number;
  col: number;
}

export function clampPoint(p: CellPoint, h: number, w: number): CellPoint {
  return {
    row: Math.max(0, Math.min(h - 1, p.row)),
    col: Math.max(0, Math.min(w - 1, p.col)),
  };
}

/** Rectangle spanned by two corner cells (inclusive), always in-bounds. */
export function dragRegion(a: CellPoint, b: CellPoint, h: number, w: number): Region {
  const p = clampPoint(a, h, w);
  const q = clampPoint(b, h, w);
  const row = Math.min(p.row, q.row);
  const col = Math.min(p.col, q.col);
  return {
    row,
    col,
    height: Math.abs(p.row - q.row) + 1,
    width: Math.abs(p.col - q.col) + 1,
  };
}

export function emptyRegion(): Region {
  return { row: 0, col: 0, height: 0, width: 0 };
}

export function regionIsEmpty(r: Region): boolean {
  return r.height === 0 || r.width === 0;
}

export function regionContains(r: Region, row: number, col: number): boolean {
  return row >= r.row && row < r.row + r.height && col >= r.col && col < r.col + r.width;
}
