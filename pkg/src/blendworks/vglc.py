"""Loaders for real text-level corpora laid out like the public VGLC
checkout (plus DungeonGrams for the dungeon blend).

The exact tile charsets and file layout vary between corpus revisions,
so everything routes through a JSON corpus config (see
configs/vglc_corpus.cfg): per game a glob of level files, a pad policy,
an orientation hint, and the vocabulary file. Verify the charset
against your checkout; parse errors name the offending character and
position.
"""

from __future__ import annotations

import glob as globlib
import json
from pathlib import Path

import numpy as np

from .corpus import (
    SEGMENT_COLS,
    SEGMENT_ROWS,
    Corpus,
    Segment,
    TileGrid,
    TileVocab,
    extract_segments,
    filter_solid,
    pad_grid,
    parse_level,
    upsample,
)


def _flips(grid: TileGrid) -> list[TileGrid]:
    arr = grid.as_array()
    return [TileGrid.from_array(np.flipud(arr)), TileGrid.from_array(np.fliplr(arr))]


def with_flipped_variants(grids: list[TileGrid]) -> list[TileGrid]:
    """Append vertically and horizontally flipped copies of each grid
    unless an identical grid is already present."""
    seen = {g.cells for g in grids}
    out = list(grids)
    for grid in grids:
        for flipped in _flips(grid):
            if flipped.cells not in seen:
                seen.add(flipped.cells)
                out.append(flipped)
    return out


def load_corpus_from_config(config_path: str | Path, data_root: str | Path) -> Corpus:
    """Build a balanced corpus per the corpus config.

    Per-game options: levels (globs under data_root), pad policy,
    filter_solid, add_flips. Games appear in config order.
    """
    cfg_text = Path(config_path).read_text()
    cfg = json.loads("\n".join(l for l in cfg_text.splitlines()
                               if not l.lstrip().startswith("#")))
    root = Path(data_root)
    vocab_path = Path(config_path).parent / cfg["vocab"]
    vocab = TileVocab.load(vocab_path)
    per_game: dict[str, list[Segment]] = {}
    for game, spec in cfg["games"].items():
        grids: list[TileGrid] = []
        for pattern in spec["levels"]:
            paths = sorted(globlib.glob(str(root / pattern)))
            if not paths:
                raise FileNotFoundError(f"no files match {pattern!r} under {root}")
            for path in paths:
                grid = parse_level(Path(path).read_text(), vocab, game)
                if grid.rows < SEGMENT_ROWS:
                    grid = pad_grid(grid, spec.get("pad", "top-background-row"),
                                    SEGMENT_ROWS, vocab, game)
                grids.append(grid)
        if spec.get("add_flips", False):
            grids = with_flipped_variants(grids)
        segments: list[Segment] = []
        for grid in grids:
            if (grid.rows, grid.cols) == (SEGMENT_ROWS, SEGMENT_COLS):
                windows = [grid]
            else:
                windows = extract_segments(grid)
            segments.extend(Segment(w, game) for w in windows)
        if spec.get("filter_solid", False):
            segments = filter_solid(segments, vocab)
        per_game[game] = segments
    return upsample(per_game, vocab)


def find_data_root(env_var: str = "BLENDWORKS_VGLC") -> Path | None:
    """Locate a corpus checkout: $BLENDWORKS_VGLC or ./vglc."""
    import os

    candidate = os.environ.get(env_var)
    if candidate and Path(candidate).is_dir():
        return Path(candidate)
    local = Path("vglc")
    if local.is_dir():
        return local
    return None
