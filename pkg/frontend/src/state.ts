// Studio state: current generation result, region selection, prompt toggles,
// and a history stack supporting undo to any prior valid state. Layouts are
// never mutated locally; every change comes from a service response.

import type { StudioApi } from './api.js';
import { toLabels, type ToggleState } from './prompts.js';
import { emptyRegion, regionIsEmpty } from './selection.js';
import type { GenerationResponse, Region } from './types.js';

export interface StudioEvents {
  onChange?: () => void;
  onNotice?: (message: string) => void;
}

export class StudioState {
  current: GenerationResponse | null = null;
  history: GenerationResponse[] = [];
  region: Region = emptyRegion();
  toggles: ToggleState = {};
  busy = false;
  lastNotice = '';

  constructor(
    private readonly api: StudioApi,
    private readonly events: StudioEvents = {},
  ) {}

  private notify() {
    this.events.onChange?.();
  }

  private notice(message: string) {
    this.lastNotice = message;
    this.events.onNotice?.(message);
    this.notify();
  }

  setToggle(toggle: ToggleState) {
    this.toggles = { ...this.toggles, ...toggle };
    this.notify();
  }

  clearToggle(feature: keyof ToggleState) {
    const next = { ...this.toggles };
    delete next[feature];
    this.toggles = next;
    this.notify();
  }

  setRegion(region: Region) {
    this.region = region;
    this.notify();
  }

  clearRegion() {
    this.region = emptyRegion();
    this.notify();
  }

  /** Generate a fresh layout from the current prompt toggles. */
  async generate(seed?: number): Promise<boolean> {
    if (this.busy) return false;
    this.busy = true;
    this.notify();
    try {
      const res = await this.api.generate({ labels: toLabels(this.toggles), seed });
      if (!res.validity) {
        this.notice('Generation was not solvable; state kept.');
        return false;
      }
      if (this.current) this.history.push(this.current);
      this.current = res;
      this.notice('Generated.');
      return true;
    } catch (e) {
      this.notice(`Service error: ${(e as Error).message}`);
      return false;
    } finally {
      this.busy = false;
      this.notify();
    }
  }

  /** Erase the selected region and regenerate it under the current prompt. */
  async regenerateSelection(seed?: number): Promise<boolean> {
    if (this.busy) return false;
    if (!this.current?.detailed) {
      this.notice('Nothing to regenerate; generate a layout first.');
      return false;
    }
    if (regionIsEmpty(this.region)) {
      this.notice('Empty selection; nothing regenerated.');
      return false;
    }
    this.busy = true;
    this.notify();
    try {
      const res = await this.api.regenerate({
        base_layout: this.current.detailed,
        region: this.region,
        labels: toLabels(this.toggles),
        seed,
      });
      if (!res.validity) {
        this.notice(
          `Regeneration hit a contradiction at the seam (relaxations ${res.relaxations}); layout kept.`,
        );
        return false;
      }
      this.history.push(this.current);
      this.current = res;
      this.notice('Region regenerated.');
      return true;
    } catch (e) {
      this.notice(`Service error: ${(e as Error).message}`);
      return false;
    } finally {
      this.busy = false;
      this.notify();
    }
  }

  get canUndo(): boolean {
    return this.history.length > 0;
  }

  /** Restore the previous valid state exactly. */
  undo(): boolean {
    const prev = this.history.pop();
    if (!prev) {
      this.notice('Nothing to undo.');
      return false;
    }
    this.current = prev;
    this.notice('Undone.');
    return true;
  }
}
