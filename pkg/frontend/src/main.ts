// Browser wiring: sliders drive blend weights, the gallery shows seeded
// draws with classifier badges, and the detail view overlays
// playability paths. All server interaction goes through the typed
// client; the page never mutates server state.

import { ApiError, ModelInfo, SampledSegment, WorkbenchClient } from "./api.js";
import { MalformedGrid, renderGrid, validateGrid } from "./grid.js";
import { DIRECTION_STYLES, drawOverlay } from "./overlay.js";
import { buildPalette, Palette } from "./palette.js";
import {
  applyError,
  applyGallery,
  badgeEntries,
  beginRequest,
  canSample,
  displayPercentages,
  initialState,
  nextSeed,
  setWeight,
  StudioState,
} from "./state.js";

const CELL = 14;
const GALLERY_CELL = 6;
const GALLERY_COUNT = 12;

const baseUrl = new URLSearchParams(location.search).get("api")
  ?? "http://127.0.0.1:8787";
const client = new WorkbenchClient(baseUrl);

let state: StudioState = initialState(0);
let models: ModelInfo[] = [];
let palette: Palette | null = null;

const el = {
  models: document.getElementById("models") as HTMLSelectElement,
  sliders: document.getElementById("sliders") as HTMLDivElement,
  dirRow: document.getElementById("dir-row") as HTMLDivElement,
  sampleBtn: document.getElementById("sample") as HTMLButtonElement,
  pinSeed: document.getElementById("pin-seed") as HTMLInputElement,
  seedLabel: document.getElementById("seed-label") as HTMLSpanElement,
  gallery: document.getElementById("gallery") as HTMLDivElement,
  detail: document.getElementById("detail") as HTMLCanvasElement,
  detailInfo: document.getElementById("detail-info") as HTMLDivElement,
  overlayToggle: document.getElementById("overlay-toggle") as HTMLInputElement,
  legend: document.getElementById("legend") as HTMLDivElement,
  error: document.getElementById("error") as HTMLDivElement,
  layoutBtn: document.getElementById("layout") as HTMLButtonElement,
  layoutView: document.getElementById("layout-view") as HTMLCanvasElement,
};

function currentModel(): ModelInfo | undefined {
  return models.find((m) => m.id === state.modelId);
}

function renderError(message: string | null): void {
  el.error.textContent = message ?? "";
  el.error.style.display = message ? "block" : "none";
}

function renderSliders(): void {
  const model = currentModel();
  el.sliders.innerHTML = "";
  if (!model) return;
  const shares = displayPercentages(state.weights);
  model.games.forEach((game, i) => {
    const row = document.createElement("div");
    row.className = "slider-row";
    const label = document.createElement("label");
    label.textContent = game;
    const input = document.createElement("input");
    input.type = "range";
    input.min = "0";
    input.max = "1";
    input.step = "0.05";
    input.value = String(state.weights[i]);
    input.addEventListener("input", () => {
      state = setWeight(state, i, Number(input.value));
      renderSliders();
      el.sampleBtn.disabled = !canSample(state);
    });
    const share = document.createElement("span");
    share.className = "share";
    share.textContent = `${state.weights[i].toFixed(2)} (${shares[i]}%)`;
    row.append(label, input, share);
    el.sliders.append(row);
  });
}

function renderDirRow(): void {
  const model = currentModel();
  const directional = model?.family === "cgmvae" || model?.family === "ccvae";
  el.dirRow.style.display = directional ? "flex" : "none";
  state = { ...state, useDir: Boolean(directional) };
  if (!directional) return;
  el.dirRow.innerHTML = "<span>open sides:</span>";
  ["up", "down", "left", "right"].forEach((name, i) => {
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = state.dirBits[i] === 1;
    box.addEventListener("change", () => {
      const bits = [...state.dirBits] as StudioState["dirBits"];
      bits[i] = box.checked ? 1 : 0;
      state = { ...state, dirBits: bits };
    });
    label.append(box, document.createTextNode(name));
    el.dirRow.append(label);
  });
}

function renderLegend(): void {
  if (!palette) return;
  el.legend.innerHTML = "";
  for (const group of palette.legend) {
    const div = document.createElement("div");
    div.className = "legend-game";
    const title = document.createElement("strong");
    title.textContent = group.game;
    div.append(title);
    for (const tile of group.tiles) {
      const chip = document.createElement("span");
      chip.className = "chip";
      chip.style.background = tile.color;
      chip.title = `${tile.char} (${tile.affordance})`;
      div.append(chip);
    }
    el.legend.append(div);
  }
}

function paintSegment(canvas: HTMLCanvasElement, grid: number[][], cell: number): void {
  if (!palette) return;
  canvas.width = grid[0].length * cell;
  canvas.height = grid.length * cell;
  const ctx = canvas.getContext("2d");
  if (ctx) renderGrid(ctx, grid, palette, cell);
}

function renderGallery(): void {
  el.gallery.innerHTML = "";
  el.seedLabel.textContent = state.gallerySeed === null
    ? "" : `seed ${state.gallerySeed}`;
  state.gallery.forEach((segment, i) => {
    const card = document.createElement("div");
    card.className = "card" + (state.selected === i ? " selected" : "");
    const canvas = document.createElement("canvas");
    try {
      paintSegment(canvas, validateGrid(segment.grid), GALLERY_CELL);
    } catch (err) {
      if (err instanceof MalformedGrid) {
        renderError(`segment ${i}: ${err.message}`);
        return;
      }
      throw err;
    }
    card.append(canvas);
    const badges = badgeEntries(segment).slice(0, 2);
    if (badges.length) {
      const badge = document.createElement("div");
      badge.className = "badge";
      badge.textContent = badges.map(([g, p]) => `${g} ${p.toFixed(0)}%`).join(" ");
      card.append(badge);
    }
    card.addEventListener("click", () => {
      state = { ...state, selected: i };
      renderGallery();
      void renderDetail();
    });
    el.gallery.append(card);
  });
}

async function renderDetail(): Promise<void> {
  const index = state.selected;
  el.detailInfo.textContent = "";
  const ctx = el.detail.getContext("2d");
  if (index === null || !state.gallery[index] || !ctx) return;
  const segment = state.gallery[index];
  const grid = validateGrid(segment.grid);
  paintSegment(el.detail, grid, CELL);
  el.detailInfo.textContent =
    `model ${state.modelId}, weights [${state.weights.join(", ")}], ` +
    `seed ${state.gallerySeed}, segment ${index}`;
  if (!state.overlayOn) return;
  try {
    const verdict = await client.playability(grid, state.weights);
    if (verdict.playable) {
      drawOverlay(ctx, verdict, grid.length, grid[0].length, CELL);
      const open = Object.entries(verdict.directions)
        .filter(([, v]) => v.playable).map(([d]) => d);
      el.detailInfo.textContent += ` | playable: ${open.join(", ")}`;
    } else {
      el.detailInfo.textContent += " | unplayable";
    }
  } catch (err) {
    if (err instanceof ApiError) {
      el.detailInfo.textContent += ` | playability unavailable (${err.message})`;
    } else {
      throw err;
    }
  }
}

async function sample(): Promise<void> {
  const model = currentModel();
  if (!model || !canSample(state)) return;
  const seed = nextSeed(state);
  state = beginRequest(state);
  const token = state.requestToken;
  el.sampleBtn.disabled = true;
  try {
    const dir = state.useDir ? [...state.dirBits] : undefined;
    const resp = await client.sample(model.id, state.weights, GALLERY_COUNT,
                                     seed, dir);
    state = applyGallery(state, token, resp.segments, resp.seed);
  } catch (err) {
    const message = err instanceof ApiError
      ? `${err.status}: ${err.message}` : String(err);
    state = applyError(state, token, message);
  }
  renderError(state.error);
  renderGallery();
  await renderDetail();
  el.sampleBtn.disabled = !canSample(state);
}

async function previewLayout(): Promise<void> {
  const model = currentModel();
  if (!model) return;
  try {
    const resp = await client.layout(model.id, "dungeon", 4, state.weights,
                                     nextSeed(state));
    paintSegment(el.layoutView, validateGrid(resp.grid), 6);
    renderError(null);
  } catch (err) {
    renderError(err instanceof ApiError
      ? `layout: ${err.status}: ${err.message}` : String(err));
  }
}

async function start(): Promise<void> {
  try {
    models = await client.models();
    palette = buildPalette(await client.vocab());
  } catch (err) {
    renderError(`cannot reach workbench at ${baseUrl}: ${String(err)}`);
    return;
  }
  renderLegend();
  el.models.innerHTML = "";
  for (const m of models) {
    const option = document.createElement("option");
    option.value = m.id;
    option.textContent = `${m.id} (${m.family}, z=${m.latent_dim})`;
    el.models.append(option);
  }
  const first = models[0];
  state = initialState(first ? first.game_count : 0);
  state = { ...state, modelId: first ? first.id : null };
  el.models.addEventListener("change", () => {
    const model = models.find((m) => m.id === el.models.value);
    state = initialState(model ? model.game_count : 0);
    state = { ...state, modelId: model ? model.id : null };
    renderSliders();
    renderDirRow();
  });
  el.sampleBtn.addEventListener("click", () => void sample());
  el.pinSeed.addEventListener("change", () => {
    state = { ...state, pinSeed: el.pinSeed.checked };
  });
  el.overlayToggle.addEventListener("change", () => {
    state = { ...state, overlayOn: el.overlayToggle.checked };
    void renderDetail();
  });
  el.layoutBtn.addEventListener("click", () => void previewLayout());
  renderSliders();
  renderDirRow();
  el.sampleBtn.disabled = !canSample(state);

  const styleNote = Object.entries(DIRECTION_STYLES)
    .map(([d, s]) => `${d}: ${s.color}`).join(", ");
  el.detailInfo.textContent = `path styles: ${styleNote}`;
}

void start();
