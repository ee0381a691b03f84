// DOM grid renderer: one colored cell per tile, category legend, tile
// tooltips from the catalog, and a selection overlay.

import { regionContains } from './selection.js';
import type { CatalogResponse, GenerationResponse, Region } from './types.js';

export interface RenderOptions {
  onCellDown?: (row: number, col: number) => void;
  onCellEnter?: (row: number, col: number) => void;
  onCellUp?: (row: number, col: number) => void;
}

export function renderGrid(
  container: HTMLElement,
  result: GenerationResponse,
  catalog: CatalogResponse,
  region: Region,
  opts: RenderOptions = {},
): void {
  const byId = new Map(catalog.tiles.map((t) => [t.id, t]));
  const colors = new Map(catalog.categories.map((c, i) => [i, c.color]));
  container.textContent = '';
  const h = result.coarse.length;
  const w = h > 0 ? result.coarse[0].length : 0;
  container.style.display = 'grid';
  container.style.gridTemplateColumns = `repeat(${w}, 22px)`;

  for (let r = 0; r < h; r++) {
    for (let c = 0; c < w; c++) {
      const cell = document.createElement('div');
      cell.className = 'cell';
      cell.dataset.row = String(r);
      cell.dataset.col = String(c);
      const catIndex = Number(result.coarse[r][c]);
      cell.style.background = colors.get(catIndex) ?? '#000';
      cell.style.width = '22px';
      cell.style.height = '22px';
      if (result.detailed) {
        const tileId = result.detailed.tiles[r][c];
        const tile = byId.get(tileId);
        cell.title = tile ? `${tile.name} (#${tile.id})` : `tile #${tileId}`;
        cell.dataset.tileId = String(tileId);
      } else {
        cell.title = 'unresolved';
      }
      if (regionContains(region, r, c)) {
        cell.classList.add('selected');
        cell.style.outline = '2px solid #1452ee';
        cell.style.outlineOffset = '-2px';
      }
      cell.addEventListener('mousedown', () => opts.onCellDown?.(r, c));
      cell.addEventListener('mouseenter', () => opts.onCellEnter?.(r, c));
      cell.addEventListener('mouseup', () => opts.onCellUp?.(r, c));
      container.appendChild(cell);
    }
  }
}

export function renderLegend(container: HTMLElement, catalog: CatalogResponse): void {
  container.textContent = '';
  for (const cat of catalog.categories) {
    const item = document.createElement('span');
    item.className = 'legend-item';
    const swatch = document.createElement('span');
    swatch.style.background = cat.color;
    swatch.style.display = 'inline-block';
    swatch.style.width = '12px';
    swatch.style.height = '12px';
    swatch.style.marginRight = '4px';
    item.appendChild(swatch);
    item.appendChild(document.createTextNode(cat.name));
    item.style.marginRight = '10px';
    container.appendChild(item);
  }
}

export function renderFeatures(container: HTMLElement, result: GenerationResponse): void {
  container.textContent = '';
  if (!result.features) {
    container.textContent = 'no features (invalid layout)';
    return;
  }
  const f = result.features;
  const fidelity = result.fidelity;
  const rows: [string, string, boolean | null][] = [
    ['parks', String(f.num_parks), fidelity?.num_parks ?? null],
    ['largest park', String(f.largest_park), fidelity?.largest_park ?? null],
    ['units', String(f.total_units), fidelity?.total_units ?? null],
    ['carbon', f.carbon.toFixed(0), fidelity?.carbon ?? null],
    ['privacy', f.privacy.toFixed(2), fidelity?.privacy ?? null],
  ];
  const dl = document.createElement('dl');
  for (const [name, value, hit] of rows) {
    const dt = document.createElement('dt');
    dt.textContent = name;
    const dd = document.createElement('dd');
    dd.textContent = hit === null ? value : `${value} ${hit ? '✓' : '✗'}`;
    dl.appendChild(dt);
    dl.appendChild(dd);
  }
  container.appendChild(dl);
}
