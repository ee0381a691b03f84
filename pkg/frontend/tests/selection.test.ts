import { describe, expect, it } from 'vitest';

import { dragRegion, emptyRegion, regionContains, regionIsEmpty } from '../src/selection.js';

describe('drag selection', () => {
  it('spans the rectangle between two corners inclusively', () => {
    const r = dragRegion({ row: 2, col: 3 }, { row: 5, col: 1 }, 10, 8);
    expect(r).toEqual({ row: 2, col: 1, height: 4, width: 3 });
  });

  it('single-cell drag selects one cell', () => {
    expect(dragRegion({ row: 4, col: 4 }, { row: 4, col: 4 }, 10, 8)).toEqual({
      row: 4,
      col: 4,
      height: 1,
      width: 1,
    });
  });

  it('clamps out-of-bounds corners', () => {
    const r = dragRegion({ row: -3, col: 2 }, { row: 99, col: 99 }, 10, 8);
    expect(r).toEqual({ row: 0, col: 2, height: 10, width: 6 });
  });

  it('containment matches bounds', () => {
    const r = dragRegion({ row: 1, col: 1 }, { row: 2, col: 2 }, 5, 5);
    expect(regionContains(r, 1, 1)).toBe(true);
    expect(regionContains(r, 2, 2)).toBe(true);
    expect(regionContains(r, 3, 2)).toBe(false);
    expect(regionContains(r, 0, 1)).toBe(false);
  });

  it('empty region helper', () => {
    expect(regionIsEmpty(emptyRegion())).toBe(true);
    expect(regionIsEmpty({ row: 0, col: 0, height: 1, width: 1 })).toBe(false);
  });
});
