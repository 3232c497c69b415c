// JSON shapes of the engine's HTTP API. The console is a pure client: it
// renders these objects verbatim and never computes distances itself.

export interface KeywordJson {
  text: string;
  url?: string;
}

export interface KeycommentJson {
  keywords: KeywordJson[];
  comment: string;
}

export interface PairJson {
  fixed: KeycommentJson;
  changeable: KeycommentJson;
  state: string;
}

export interface IntervalJson {
  label: string;
  lower?: number;
  upper?: number;
}

export interface LeafContentJson {
  kind: string;
  min?: number;
  max?: number;
  dateFormat?: string;
  intervals?: IntervalJson[];
}

export interface ContentJson {
  leaf?: LeafContentJson;
  branch?: { dsi: string };
  external?: { url: string };
  computed?: { expr: string };
}

export interface DimensionJson {
  di: string;
  rank?: number;
  pair: PairJson;
  weight: number;
  content: ContentJson;
}

export interface DefinitionJson {
  dsi: string;
  pair: PairJson;
  owner: number;
  metric?: string;
  attributes: string[];
  dimensions: DimensionJson[];
}

export interface DefinitionInfo {
  id: number;
  dsi: string;
  version: number;
  checksum: string;
  definition: DefinitionJson;
}

export interface DsSummary {
  id: number;
  dsi: string;
  kw0: string;
  comment: string;
  s: number;
  r: number;
}

export interface DimRequestJson {
  path: string;
  sim?: number;
  min?: number;
  max?: number;
  g?: boolean;
  word?: string;
  tux?: string;
}

export interface SearchRequestJson {
  dsi: string;
  dims: DimRequestJson[];
  offered?: boolean;
  wanted?: boolean;
  pcnt: number;
}

export interface HitJson {
  c: number;
  d: number;
  a: number;
  values: Record<string, number | string>;
  vl?: string;
  resource?: string;
  keycomment?: { kw0: string; comment: string };
}

export interface DimStatsJson {
  av: number;
  sd: number;
  min: number;
  max: number;
}

export interface SearchResponseJson {
  hits: HitJson[];
  stats: Record<string, DimStatsJson>;
  scatter?: [number, number][];
  total: number;
}

export interface DvDetailMember {
  dsi: string;
  values: Record<string, string>;
  owner?: number;
}

export interface DvDetailJson {
  c: number;
  members: DvDetailMember[];
  a: number;
  resource?: string;
  vl?: string;
  keycomment?: { kw0: string; comment: string };
  offered?: boolean;
  wanted?: boolean;
}

export interface ApiError {
  code: string;
  message: string;
}
