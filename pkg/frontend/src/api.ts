// Typed client for the workbench HTTP API. The UI only ever reads from
// the server; every draw is reproducible from (model, weights, seed).

export interface ModelInfo {
  id: string;
  family: string;
  game_count: number;
  latent_dim: number;
  games: string[];
}

export interface TileInfo {
  tile_id: number;
  game: string;
  char: string;
  affordance: "passable" | "solid" | "hazard" | "climbable";
  color: string;
}

export interface VocabResponse {
  tiles: TileInfo[];
  games: string[];
}

export interface SampledSegment {
  grid: number[][];
  percentages: Record<string, number> | null;
}

export interface SampleResponse {
  segments: SampledSegment[];
  weights: number[];
  seed: number;
  model: string;
}

export type PathStep = [number, number, string];

export interface DirectionResult {
  playable: boolean;
  path: PathStep[] | null;
}

export interface PlayabilityResponse {
  directions: Record<string, DirectionResult>;
  playable: boolean;
}

export interface LayoutLocation {
  coord: [number, number];
  open_sides: number[];
  grid: number[][];
  playable: boolean | null;
}

export interface LayoutResponse {
  kind: string;
  grid: number[][];
  locations: LayoutLocation[];
  seed: number;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

async function parseResponse<T>(resp: Response): Promise<T> {
  const body = await resp.json().catch(() => ({ error: resp.statusText }));
  if (!resp.ok) {
    throw new ApiError(resp.status, (body as { error?: string }).error ?? resp.statusText);
  }
  return body as T;
}

export class WorkbenchClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async models(): Promise<ModelInfo[]> {
    const resp = await fetch(this.url("/models"));
    const payload = await parseResponse<{ models: ModelInfo[] }>(resp);
    return payload.models;
  }

  async vocab(): Promise<VocabResponse> {
    const resp = await fetch(this.url("/vocab"));
    return parseResponse<VocabResponse>(resp);
  }

  async sample(model: string, weights: number[], count: number, seed: number,
               dir?: number[]): Promise<SampleResponse> {
    const resp = await fetch(this.url("/sample"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ model, weights, count, seed, ...(dir ? { dir } : {}) }),
    });
    return parseResponse<SampleResponse>(resp);
  }

  async playability(grid: number[][], weights: number[]): Promise<PlayabilityResponse> {
    const resp = await fetch(this.url("/playability"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ grid, weights }),
    });
    return parseResponse<PlayabilityResponse>(resp);
  }

  async layout(model: string, kind: string, n: number, weights: number[],
               seed: number): Promise<LayoutResponse> {
    const resp = await fetch(this.url("/layout"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ model, kind, n, weights, seed }),
    });
    return parseResponse<LayoutResponse>(resp);
  }
}
