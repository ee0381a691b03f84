// Studio wiring: prompt toggles, generate/erase+regenerate/undo buttons,
// grid with drag selection, legend, and feature readouts.

import { StudioApi } from './api.js';
import { renderFeatures, renderGrid, renderLegend } from './grid.js';
import { FEATURE_TITLES } from './prompts.js';
import { dragRegion, emptyRegion } from './selection.js';
import { StudioState } from './state.js';
import { FEATURES, LEVELS, type CatalogResponse, type Feature, type Level } from './types.js';

const api = new StudioApi('');
let catalog: CatalogResponse | null = null;
let dragStart: { row: number; col: number } | null = null;

const state = new StudioState(api, {
  onChange: () => render(),
  onNotice: (msg) => {
    const el = document.getElementById('notice');
    if (el) el.textContent = msg;
  },
});

function render(): void {
  const gridEl = document.getElementById('grid');
  const featEl = document.getElementById('features');
  const undoBtn = document.getElementById('undo') as HTMLButtonElement | null;
  const genBtn = document.getElementById('generate') as HTMLButtonElement | null;
  const regenBtn = document.getElementById('regenerate') as HTMLButtonElement | null;
  if (undoBtn) undoBtn.disabled = !state.canUndo || state.busy;
  if (genBtn) genBtn.disabled = state.busy;
  if (regenBtn) regenBtn.disabled = state.busy || !state.current;
  if (gridEl && state.current && catalog) {
    renderGrid(gridEl, state.current, catalog, state.region, {
      onCellDown: (row, col) => {
        dragStart = { row, col };
        state.setRegion(dragRegion(dragStart, { row, col }, catalog!.grid.h, catalog!.grid.w));
      },
      onCellEnter: (row, col) => {
        if (dragStart) {
          state.setRegion(dragRegion(dragStart, { row, col }, catalog!.grid.h, catalog!.grid.w));
        }
      },
      onCellUp: () => {
        dragStart = null;
      },
    });
  }
  if (featEl && state.current) renderFeatures(featEl, state.current);
}

function buildToggles(): void {
  const host = document.getElementById('toggles');
  if (!host) return;
  for (const feature of FEATURES) {
    const row = document.createElement('div');
    row.className = 'toggle-row';
    const label = document.createElement('span');
    label.textContent = FEATURE_TITLES[feature as Feature];
    label.style.display = 'inline-block';
    label.style.width = '160px';
    row.appendChild(label);
    for (const level of [...LEVELS, 'any'] as (Level | 'any')[]) {
      const btn = document.createElement('button');
      btn.textContent = level;
      btn.dataset.feature = feature;
      btn.dataset.level = level;
      btn.addEventListener('click', () => {
        if (level === 'any') state.clearToggle(feature as Feature);
        else state.setToggle({ [feature]: level } as Record<Feature, Level>);
        for (const other of row.querySelectorAll('button')) {
          other.classList.toggle('active', other === btn);
        }
      });
      row.appendChild(btn);
    }
    host.appendChild(row);
  }
}

async function init(): Promise<void> {
  catalog = await api.catalog();
  const legend = document.getElementById('legend');
  if (legend) renderLegend(legend, catalog);
  buildToggles();
  document.getElementById('generate')?.addEventListener('click', () => void state.generate());
  document.getElementById('regenerate')?.addEventListener('click', () => {
    void state.regenerateSelection();
  });
  document.getElementById('undo')?.addEventListener('click', () => {
    state.undo();
    render();
  });
  document.getElementById('clear-selection')?.addEventListener('click', () => {
    state.setRegion(emptyRegion());
  });
  const health = await api.health();
  const el = document.getElementById('notice');
  if (el) el.textContent = `Connected (${health.grid.h}x${health.grid.w}, model ${health.checkpoint_hash.slice(0, 8)}).`;
}

void init();
