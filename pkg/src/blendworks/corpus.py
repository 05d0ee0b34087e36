"""Tile-level corpus pipeline.

Parses text-encoded levels into namespaced tile grids, pads them to the
15x16 segment height, slices non-overlapping segments, filters and
upsamples per game, and one-hot encodes segments for model training.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

SEGMENT_ROWS = 15
SEGMENT_COLS = 16
CELLS_PER_SEGMENT = SEGMENT_ROWS * SEGMENT_COLS

AFFORDANCES = ("passable", "solid", "hazard", "climbable")

PAD_TOP_BACKGROUND = "top-background-row"
PAD_DUPLICATE_OUTERMOST = "duplicate-outermost-rows"

# (up, down, left, right) bit order for directional labels.
DIRECTION_NAMES = ("up", "down", "left", "right")


class CorpusError(Exception):
    """Base class for corpus-level data errors."""


class UnknownTile(CorpusError):
    def __init__(self, char: str, line: int, col: int):
        super().__init__(f"unknown tile {char!r} at line {line}, col {col}")
        self.char = char
        self.line = line
        self.col = col


class RaggedRows(CorpusError):
    def __init__(self, line: int):
        super().__init__(f"line {line} has a different length than line 0")
        self.line = line


class GridTooTall(CorpusError):
    pass


class BadShape(CorpusError):
    pass


class EmptyGame(CorpusError):
    def __init__(self, game: str):
        super().__init__(f"game {game!r} has no segments")
        self.game = game


@dataclass(frozen=True)
class TileInfo:
    tile_id: int
    game: str
    char: str
    affordance: str
    is_door: bool = False


class TileVocab:
    """Union tile vocabulary across games.

    Tile ids are namespaced by (game, char) so the same character in two
    games maps to two distinct ids. Each game declares a background char
    and an affordance per tile; door tiles may be flagged for the
    directional auto-labeler.
    """

    def __init__(self, entries: Sequence[TileInfo], backgrounds: Mapping[str, str]):
        self._entries = tuple(entries)
        self._by_key: dict[tuple[str, str], TileInfo] = {}
        for info in self._entries:
            if info.affordance not in AFFORDANCES:
                raise ValueError(f"bad affordance {info.affordance!r} for {info.game}/{info.char}")
            key = (info.game, info.char)
            if key in self._by_key:
                raise ValueError(f"duplicate tile {info.char!r} in game {info.game!r}")
            self._by_key[key] = info
        ids = [info.tile_id for info in self._entries]
        if len(set(ids)) != len(ids):
            raise ValueError("tile ids are not unique across games")
        self._by_id = {info.tile_id: info for info in self._entries}
        self._games = tuple(dict.fromkeys(info.game for info in self._entries))
        self._background: dict[str, int] = {}
        for game, char in backgrounds.items():
            if (game, char) not in self._by_key:
                raise ValueError(f"background char {char!r} not a tile of game {game!r}")
            self._background[game] = self._by_key[(game, char)].tile_id

    @classmethod
    def from_config(cls, config: Mapping) -> "TileVocab":
        """Build from a key-value tree: per game a background char, a
        char -> affordance map, and an optional door char list."""
        entries: list[TileInfo] = []
        backgrounds: dict[str, str] = {}
        next_id = 0
        for game, spec in config["games"].items():
            doors = set(spec.get("doors", ()))
            for char, affordance in spec["tiles"].items():
                entries.append(TileInfo(next_id, game, char, affordance, char in doors))
                next_id += 1
            backgrounds[game] = spec["background"]
        return cls(entries, backgrounds)

    @classmethod
    def load(cls, path: str | Path) -> "TileVocab":
        return cls.from_config(json.loads(_strip_comment_lines(Path(path).read_text())))

    def to_config(self) -> dict:
        games: dict[str, dict] = {}
        for info in self._entries:
            spec = games.setdefault(info.game, {"background": "", "tiles": {}, "doors": []})
            spec["tiles"][info.char] = info.affordance
            if info.is_door:
                spec["doors"].append(info.char)
        for game, bg_id in self._background.items():
            games[game]["background"] = self._by_id[bg_id].char
        return {"games": games}

    @property
    def games(self) -> tuple[str, ...]:
        return self._games

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def tile_id(self, game: str, char: str) -> int:
        info = self._by_key.get((game, char))
        if info is None:
            raise KeyError(f"no tile {char!r} in game {game!r}")
        return info.tile_id

    def has_tile(self, game: str, char: str) -> bool:
        return (game, char) in self._by_key

    def info(self, tile_id: int) -> TileInfo:
        return self._by_id[tile_id]

    def char(self, tile_id: int) -> str:
        return self._by_id[tile_id].char

    def affordance(self, tile_id: int) -> str:
        return self._by_id[tile_id].affordance

    def is_door(self, tile_id: int) -> bool:
        return self._by_id[tile_id].is_door

    def background_id(self, game: str) -> int:
        return self._background[game]

    def game_tiles(self, game: str) -> tuple[TileInfo, ...]:
        return tuple(info for info in self._entries if info.game == game)


@dataclass(frozen=True)
class TileGrid:
    rows: int
    cols: int
    cells: tuple[int, ...]

    def __post_init__(self):
        if len(self.cells) != self.rows * self.cols:
            raise ValueError(f"cell count {len(self.cells)} != {self.rows}x{self.cols}")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "TileGrid":
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise ValueError("expected a 2-D array")
        return cls(arr.shape[0], arr.shape[1], tuple(int(v) for v in arr.ravel()))

    def as_array(self) -> np.ndarray:
        return np.array(self.cells, dtype=np.int64).reshape(self.rows, self.cols)

    def cell(self, row: int, col: int) -> int:
        return self.cells[row * self.cols + col]

    def row(self, row: int) -> tuple[int, ...]:
        return self.cells[row * self.cols : (row + 1) * self.cols]


@dataclass(frozen=True)
class Segment:
    """A 15x16 window of a level, optionally labeled for training.

    game_label is a one-hot over the corpus game order; dir_label is the
    (up, down, left, right) open-side bit vector.
    """

    grid: TileGrid
    game: str
    game_label: tuple[int, ...] | None = None
    dir_label: tuple[int, int, int, int] | None = None

    def __post_init__(self):
        if (self.grid.rows, self.grid.cols) != (SEGMENT_ROWS, SEGMENT_COLS):
            raise ValueError(f"segment grid must be {SEGMENT_ROWS}x{SEGMENT_COLS}")
        if self.game_label is not None and sum(self.game_label) != 1:
            raise ValueError("game_label must be one-hot")
        if self.dir_label is not None:
            if len(self.dir_label) != 4 or any(b not in (0, 1) for b in self.dir_label):
                raise ValueError("dir_label must be four 0/1 bits")

    def with_dir_label(self, bits: Sequence[int]) -> "Segment":
        return Segment(self.grid, self.game, self.game_label, tuple(int(b) for b in bits))


@dataclass
class Corpus:
    segments: list[Segment]
    vocab: TileVocab
    games: tuple[str, ...]
    counts_before: dict[str, int]
    counts_after: dict[str, int]

    def per_game(self, game: str) -> list[Segment]:
        return [s for s in self.segments if s.game == game]


def _strip_comment_lines(text: str) -> str:
    # Config files allow full-line comments starting with '#'.
    return "\n".join(line for line in text.splitlines() if not line.lstrip().startswith("#"))


def parse_level(text: str, vocab: TileVocab, game: str) -> TileGrid:
    """Parse a text level (one char per tile, newline rows) into a grid."""
    lines = [line for line in text.splitlines() if line != ""]
    if not lines:
        raise BadShape("empty level text")
    width = len(lines[0])
    cells: list[int] = []
    for r, line in enumerate(lines):
        if len(line) != width:
            raise RaggedRows(r)
        for c, char in enumerate(line):
            if not vocab.has_tile(game, char):
                raise UnknownTile(char, r, c)
            cells.append(vocab.tile_id(game, char))
    return TileGrid(len(lines), width, tuple(cells))


def render_level(grid: TileGrid, vocab: TileVocab) -> str:
    """Inverse of parse_level: one character per tile, newline rows."""
    lines = []
    for r in range(grid.rows):
        lines.append("".join(vocab.char(t) for t in grid.row(r)))
    return "\n".join(lines)


def pad_grid(grid: TileGrid, policy: str, target_rows: int, vocab: TileVocab | None = None,
             game: str | None = None) -> TileGrid:
    """Grow a grid to target_rows.

    top-background-row prepends rows of the game's background tile;
    duplicate-outermost-rows alternately copies the current first and
    last rows until the target height is reached.
    """
    if grid.rows > target_rows:
        raise GridTooTall(f"{grid.rows} rows > target {target_rows}")
    if grid.rows == target_rows:
        return grid
    rows = [list(grid.row(r)) for r in range(grid.rows)]
    if policy == PAD_TOP_BACKGROUND:
        if vocab is None or game is None:
            raise ValueError("top-background-row padding needs vocab and game")
        bg = vocab.background_id(game)
        while len(rows) < target_rows:
            rows.insert(0, [bg] * grid.cols)
    elif policy == PAD_DUPLICATE_OUTERMOST:
        duplicate_top = True
        while len(rows) < target_rows:
            if duplicate_top:
                rows.insert(0, list(rows[0]))
            else:
                rows.append(list(rows[-1]))
            duplicate_top = not duplicate_top
    else:
        raise ValueError(f"unknown pad policy {policy!r}")
    cells = tuple(t for row in rows for t in row)
    return TileGrid(target_rows, grid.cols, cells)


def extract_segments(grid: TileGrid) -> list[TileGrid]:
    """Slice non-overlapping 15x16 windows from a padded level.

    Horizontal strips (15 rows) are scanned left to right, vertical
    strips (16 cols) bottom to top to match play direction. Larger maps
    must tile exactly into 15x16 blocks and are scanned row-major.
    Trailing remainders smaller than a window are dropped.
    """
    arr = grid.as_array()
    windows: list[np.ndarray] = []
    if grid.rows == SEGMENT_ROWS:
        for c0 in range(0, grid.cols - SEGMENT_COLS + 1, SEGMENT_COLS):
            windows.append(arr[:, c0 : c0 + SEGMENT_COLS])
    elif grid.cols == SEGMENT_COLS:
        starts = list(range(0, grid.rows - SEGMENT_ROWS + 1, SEGMENT_ROWS))
        offset = grid.rows - (len(starts) * SEGMENT_ROWS)
        # Bottom-to-top scan: anchor windows to the bottom edge so the
        # remainder is dropped at the top.
        for r0 in reversed([s + offset for s in starts]):
            windows.append(arr[r0 : r0 + SEGMENT_ROWS, :])
    elif grid.rows % SEGMENT_ROWS == 0 and grid.cols % SEGMENT_COLS == 0:
        for r0 in range(0, grid.rows, SEGMENT_ROWS):
            for c0 in range(0, grid.cols, SEGMENT_COLS):
                windows.append(arr[r0 : r0 + SEGMENT_ROWS, c0 : c0 + SEGMENT_COLS])
    else:
        raise BadShape(f"cannot segment a {grid.rows}x{grid.cols} grid")
    if not windows:
        raise BadShape(f"grid {grid.rows}x{grid.cols} smaller than one segment")
    return [TileGrid.from_array(w) for w in windows]


def filter_solid(segments: Iterable[Segment], vocab: TileVocab) -> list[Segment]:
    """Drop segments whose every cell has the solid affordance."""
    kept = []
    for seg in segments:
        if any(vocab.affordance(t) != "solid" for t in seg.grid.cells):
            kept.append(seg)
    return kept


def game_one_hot(games: Sequence[str], game: str) -> tuple[int, ...]:
    if game not in games:
        raise ValueError(f"game {game!r} not in corpus game order {games}")
    return tuple(1 if g == game else 0 for g in games)


def upsample(per_game: Mapping[str, Sequence[Segment]], vocab: TileVocab) -> Corpus:
    """Balance games by cyclic repetition up to the largest per-game count."""
    games = tuple(per_game.keys())
    for game, segs in per_game.items():
        if len(segs) == 0:
            raise EmptyGame(game)
    counts_before = {game: len(segs) for game, segs in per_game.items()}
    target = max(counts_before.values())
    segments: list[Segment] = []
    for game in games:
        segs = list(per_game[game])
        label = game_one_hot(games, game)
        for i in range(target):
            src = segs[i % len(segs)]
            segments.append(Segment(src.grid, game, label, src.dir_label))
    counts_after = {game: target for game in games}
    return Corpus(segments, vocab, games, counts_before, counts_after)


def encode_grid(grid: TileGrid, vocab: TileVocab) -> np.ndarray:
    """Flatten a grid to a per-cell one-hot vector of length cells * |vocab|."""
    size = len(vocab)
    out = np.zeros(grid.rows * grid.cols * size, dtype=np.float64)
    for i, t in enumerate(grid.cells):
        out[i * size + t] = 1.0
    return out


def encode_onehot(segment: Segment, vocab: TileVocab) -> np.ndarray:
    return encode_grid(segment.grid, vocab)


def decode_onehot(vec: np.ndarray, vocab: TileVocab, rows: int = SEGMENT_ROWS,
                  cols: int = SEGMENT_COLS) -> TileGrid:
    """Per-cell argmax decode of a flat one-hot (or logit) vector."""
    size = len(vocab)
    vec = np.asarray(vec).reshape(rows * cols, size)
    cells = tuple(int(i) for i in np.argmax(vec, axis=1))
    return TileGrid(rows, cols, cells)


def auto_dir_label(grid: TileGrid, vocab: TileVocab) -> tuple[int, int, int, int]:
    """Heuristic open-side detection for synthetic fixtures.

    An edge counts as open when its border row/column contains a run of
    at least 2 passable tiles, or any door tile.
    """
    arr = grid.as_array()
    borders = {
        "up": arr[0, :],
        "down": arr[-1, :],
        "left": arr[:, 0],
        "right": arr[:, -1],
    }
    bits = []
    for name in DIRECTION_NAMES:
        line = borders[name]
        open_edge = any(vocab.is_door(int(t)) for t in line)
        if not open_edge:
            run = 0
            for t in line:
                if vocab.affordance(int(t)) == "passable":
                    run += 1
                    if run >= 2:
                        open_edge = True
                        break
                else:
                    run = 0
        bits.append(1 if open_edge else 0)
    return tuple(bits)  # type: ignore[return-value]


def load_annotations(path: str | Path) -> dict[int, tuple[int, int, int, int]]:
    """Read a sidecar file of per-segment directional labels.

    Format: one line per segment, "index<TAB>UDLR" with UDLR four 0/1
    characters in up, down, left, right order.
    """
    labels: dict[int, tuple[int, int, int, int]] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        idx_str, bits_str = line.split("\t")
        bits = tuple(int(b) for b in bits_str.strip())
        if len(bits) != 4 or any(b not in (0, 1) for b in bits):
            raise ValueError(f"bad directional bits {bits_str!r} for segment {idx_str}")
        labels[int(idx_str)] = bits  # type: ignore[assignment]
    return labels


def save_annotations(labels: Mapping[int, Sequence[int]], path: str | Path) -> None:
    lines = [f"{idx}\t{''.join(str(int(b)) for b in bits)}" for idx, bits in sorted(labels.items())]
    Path(path).write_text("\n".join(lines) + "\n")
