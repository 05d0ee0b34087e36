// Studio state and the pure transitions behind the controls. Sliders
// clamp to [0, 1]; sampling is disabled while every weight is zero; a
// pinned seed reproduces the exact previous draw, otherwise each
// sample advances the seed. Stale responses are dropped by token.

import type { SampledSegment } from "./api.js";

export interface StudioState {
  modelId: string | null;
  weights: number[];
  dirBits: [number, number, number, number];
  useDir: boolean;
  seed: number;
  pinSeed: boolean;
  gallery: SampledSegment[];
  gallerySeed: number | null;
  selected: number | null;
  overlayOn: boolean;
  requestToken: number;
  inFlight: boolean;
  error: string | null;
}

export function initialState(gameCount: number): StudioState {
  const weights = new Array(gameCount).fill(0);
  if (gameCount > 0) weights[0] = 1;
  return {
    modelId: null,
    weights,
    dirBits: [0, 0, 0, 1],
    useDir: false,
    seed: 1,
    pinSeed: false,
    gallery: [],
    gallerySeed: null,
    selected: null,
    overlayOn: true,
    requestToken: 0,
    inFlight: false,
    error: null,
  };
}

export function clampWeight(value: number): number {
  if (Number.isNaN(value)) return 0;
  return Math.min(1, Math.max(0, value));
}

export function setWeight(state: StudioState, index: number, value: number): StudioState {
  const weights = state.weights.slice();
  weights[index] = clampWeight(value);
  return { ...state, weights };
}

export function canSample(state: StudioState): boolean {
  return state.modelId !== null && state.weights.some((w) => w > 0) && !state.inFlight;
}

/** Raw values go to the server; the display shows normalized shares. */
export function displayPercentages(weights: number[]): number[] {
  const total = weights.reduce((a, b) => a + b, 0);
  if (total <= 0) return weights.map(() => 0);
  return weights.map((w) => Math.round((w / total) * 1000) / 10);
}

/** Seed for the next draw: pinned repeats, unpinned advances. */
export function nextSeed(state: StudioState): number {
  if (state.pinSeed && state.gallerySeed !== null) return state.gallerySeed;
  return state.gallerySeed === null ? state.seed : state.gallerySeed + 1;
}

export function beginRequest(state: StudioState): StudioState {
  return { ...state, requestToken: state.requestToken + 1, inFlight: true, error: null };
}

/** Apply a response only when it matches the newest request token. */
export function applyGallery(state: StudioState, token: number,
                             segments: SampledSegment[], seed: number): StudioState {
  if (token !== state.requestToken) return state; // stale response
  return {
    ...state,
    gallery: segments,
    gallerySeed: seed,
    selected: segments.length ? 0 : null,
    inFlight: false,
  };
}

export function applyError(state: StudioState, token: number, message: string): StudioState {
  if (token !== state.requestToken) return state;
  return { ...state, inFlight: false, error: message };
}

/** Badge text for a sampled segment: highest classifier share first. */
export function badgeEntries(segment: SampledSegment): [string, number][] {
  if (!segment.percentages) return [];
  return Object.entries(segment.percentages).sort((a, b) => b[1] - a[1]);
}

export function majorityGame(segment: SampledSegment): string | null {
  const entries = badgeEntries(segment);
  return entries.length ? entries[0][0] : null;
}
