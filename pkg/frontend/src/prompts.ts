// Prompt toggle state: five three-way selectors, each optionally unset
// ("any" lets the service pick randomly). Set toggles always encode to one
// of the 243 canonical label tuples.

import { FEATURES, LEVELS, type Feature, type Level } from './types.js';

export type ToggleState = Partial<Record<Feature, Level>>;

export function toLabels(toggles: ToggleState): Partial<Record<Feature, Level>> {
  const out: Partial<Record<Feature, Level>> = {};
  for (const f of FEATURES) {
    const lv = toggles[f];
    if (lv !== undefined) {
      if (!LEVELS.includes(lv)) throw new Error(`bad level ${lv} for ${f}`);
      out[f] = lv;
    }
  }
  return out;
}

/** Every fully specified toggle combination, in lexicographic level order. */
export function allLabelTuples(): Level[][] {
  const out: Level[][] = [];
  const rec = (prefix: Level[]) => {
    if (prefix.length === FEATURES.length) {
      out.push([...prefix]);
      return;
    }
    for (const lv of LEVELS) rec([...prefix, lv]);
  };
  rec([]);
  return out;
}

export function tupleToToggles(tuple: Level[]): ToggleState {
  if (tuple.length !== FEATURES.length) throw new Error('need five levels');
  const out: ToggleState = {};
  FEATURES.forEach((f, i) => {
    out[f] = tuple[i];
  });
  return out;
}

export const FEATURE_TITLES: Record<Feature, string> = {
  num_parks: 'Number of parks',
  largest_park: 'Largest park',
  total_units: 'Total units',
  carbon: 'Sequestered carbon',
  privacy: 'Privacy',
};
