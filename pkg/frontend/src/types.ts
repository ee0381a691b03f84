// Wire types for the generation service (schema_version 1).

export type Level = 'low' | 'mid' | 'high';

export const FEATURES = [
  'num_parks',
  'largest_park',
  'total_units',
  'carbon',
  'privacy',
] as const;
export type Feature = (typeof FEATURES)[number];

export const LEVELS: Level[] = ['low', 'mid', 'high'];

export interface DetailedLayout {
  h: number;
  w: number;
  tiles: number[][];
}

export interface FeatureValues {
  num_parks: number;
  largest_park: number;
  total_units: number;
  carbon: number;
  privacy: number;
}

export interface GenerationResponse {
  schema_version: number;
  labels: Level[];
  coarse: string[]; // one digit string per row, category indices 0..6
  detailed: DetailedLayout | null;
  features: FeatureValues | null;
  validity: boolean;
  fidelity: Record<Feature, boolean> | null;
  relaxations: number;
  early_end: boolean;
  seed: number;
}

export interface CategoryInfo {
  name: string;
  char: string;
  color: string;
}

export interface TileInfo {
  id: number;
  name: string;
  category: string;
  orientation: number;
  reflected: boolean;
  variant: number;
}

export interface CatalogResponse {
  schema_version: number;
  grid: { h: number; w: number };
  categories: CategoryInfo[];
  tiles: TileInfo[];
}

export interface HealthResponse {
  schema_version: number;
  status: string;
  checkpoint_hash: string;
  catalog_hash: string;
  schema_hash: string;
  grid: { h: number; w: number };
}

export interface Region {
  row: number;
  col: number;
  height: number;
  width: number;
}

export interface GenerateRequest {
  labels?: Partial<Record<Feature, Level>>;
  seed?: number;
  temperature?: number;
}

export interface RegenerateRequest extends GenerateRequest {
  base_layout: DetailedLayout;
  region: Region;
}
