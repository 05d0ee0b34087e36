// Vocabulary palette: tile id -> color plus a per-game legend. Unknown
// tiles render in a loud warning color instead of crashing.

import type { TileInfo, VocabResponse } from "./api.js";

export const WARNING_COLOR = "#ff00ff";

export interface Palette {
  colorOf(tileId: number): string;
  tileOf(tileId: number): TileInfo | undefined;
  legend: { game: string; tiles: TileInfo[] }[];
}

export function buildPalette(vocab: VocabResponse): Palette {
  const byId = new Map<number, TileInfo>();
  for (const tile of vocab.tiles) byId.set(tile.tile_id, tile);
  const legend = vocab.games.map((game) => ({
    game,
    tiles: vocab.tiles.filter((t) => t.game === game),
  }));
  return {
    colorOf: (tileId) => byId.get(tileId)?.color ?? WARNING_COLOR,
    tileOf: (tileId) => byId.get(tileId),
    legend,
  };
}

/** Distinct palette groups present in a grid (for the legend footer). */
export function gamesInGrid(grid: number[][], palette: Palette): string[] {
  const games = new Set<string>();
  for (const row of grid) {
    for (const id of row) {
      const tile = palette.tileOf(id);
      if (tile) games.add(tile.game);
    }
  }
  return [...games].sort();
}
