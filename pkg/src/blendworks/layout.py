"""Whole-level layouts.

Dungeon layouts grow by a random walk: starting from a single closed
location, each step opens a random closed side of the most recently
placed location and attaches a new location there. Platformer layouts
are chains that only ever progress upward or rightward. Assembly
samples one segment per location, conditioned on the location's
open-side label, and stitches the bounding box into a single grid.

Grid coordinates: gx grows rightward, gy grows upward, so platformer
progress is monotone in gx + gy. Side bits are (up, down, left, right).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .blending import BlendWeights, FamilyMismatch, sample_blend
from .corpus import SEGMENT_COLS, SEGMENT_ROWS, Segment, TileGrid, render_level
from .models import DIRECTIONAL_FAMILIES, ModelCheckpoint

DUNGEON = "dungeon"
PLATFORMER = "platformer"

# side index -> (dgx, dgy); order matches the (up, down, left, right) label
SIDE_OFFSETS = ((0, 1), (0, -1), (-1, 0), (1, 0))
OPPOSITE = (1, 0, 3, 2)


@dataclass
class Layout:
    locations: dict[tuple[int, int], list[int]]  # coord -> 4 open-side bits
    kind: str
    order: list[tuple[int, int]] = field(default_factory=list)

    def open_sides(self, coord: tuple[int, int]) -> tuple[int, int, int, int]:
        return tuple(self.locations[coord])  # type: ignore[return-value]

    def edges(self) -> set[frozenset[tuple[int, int]]]:
        """Pairs of adjacent locations whose facing sides are both open."""
        out = set()
        for coord, sides in self.locations.items():
            for side, bit in enumerate(sides):
                if not bit:
                    continue
                dx, dy = SIDE_OFFSETS[side]
                neighbor = (coord[0] + dx, coord[1] + dy)
                if neighbor in self.locations and \
                        self.locations[neighbor][OPPOSITE[side]]:
                    out.add(frozenset((coord, neighbor)))
        return out

    def is_connected(self) -> bool:
        if not self.locations:
            return False
        adjacency: dict[tuple[int, int], list[tuple[int, int]]] = \
            {coord: [] for coord in self.locations}
        for edge in self.edges():
            a, b = tuple(edge)
            adjacency[a].append(b)
            adjacency[b].append(a)
        seen = set()
        stack = [next(iter(self.locations))]
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            stack.extend(adjacency[node])
        return len(seen) == len(self.locations)

    def mirrored(self) -> bool:
        """Every open side facing an occupied neighbor is mirrored back."""
        for coord, sides in self.locations.items():
            for side, bit in enumerate(sides):
                dx, dy = SIDE_OFFSETS[side]
                neighbor = (coord[0] + dx, coord[1] + dy)
                if bit and neighbor in self.locations:
                    if not self.locations[neighbor][OPPOSITE[side]]:
                        return False
        return True


MAX_SIDE_REDRAWS = 100


def gen_dungeon_layout(n: int, rng: np.random.Generator,
                       walk_from_any: bool = False) -> Layout:
    """Random-walk dungeon of exactly n connected locations.

    The walk continues from the most recently placed location; with
    walk_from_any it instead continues from a random existing location.
    A closed side is redrawn when its neighbor cell is already occupied
    (bounded, then any free side is taken; if the current location has
    no free side the walk backtracks through older locations).
    """
    if n < 1:
        raise ValueError("need at least one location")
    layout = Layout({(0, 0): [0, 0, 0, 0]}, DUNGEON, [(0, 0)])
    current = (0, 0)
    while len(layout.locations) < n:
        if walk_from_any:
            current = layout.order[int(rng.integers(0, len(layout.order)))]
        side = _pick_free_side(layout, current, rng)
        while side is None:
            # every neighbor taken: back up to an older location with space
            current = _latest_with_free_side(layout)
            side = _pick_free_side(layout, current, rng)
        dx, dy = SIDE_OFFSETS[side]
        new_coord = (current[0] + dx, current[1] + dy)
        layout.locations[current][side] = 1
        layout.locations[new_coord] = [0, 0, 0, 0]
        layout.locations[new_coord][OPPOSITE[side]] = 1
        layout.order.append(new_coord)
        current = new_coord
    return layout


def _pick_free_side(layout: Layout, coord: tuple[int, int],
                    rng: np.random.Generator):
    closed = [s for s, bit in enumerate(layout.locations[coord]) if not bit]
    for _ in range(MAX_SIDE_REDRAWS):
        if not closed:
            return None
        side = closed[int(rng.integers(0, len(closed)))]
        dx, dy = SIDE_OFFSETS[side]
        if (coord[0] + dx, coord[1] + dy) not in layout.locations:
            return side
        closed.remove(side)
    return None


def _latest_with_free_side(layout: Layout) -> tuple[int, int]:
    for coord in reversed(layout.order):
        for side in range(4):
            dx, dy = SIDE_OFFSETS[side]
            if (coord[0] + dx, coord[1] + dy) not in layout.locations:
                return coord
    raise RuntimeError("no location with a free side")  # unreachable on a plane


def gen_platformer_layout(n: int, rng: np.random.Generator) -> Layout:
    """Chain of n locations, each step moving up or right; each location
    opens toward its predecessor and successor so progress is possible
    from start to finish."""
    if n < 1:
        raise ValueError("need at least one location")
    layout = Layout({(0, 0): [0, 0, 0, 0]}, PLATFORMER, [(0, 0)])
    coord = (0, 0)
    if n == 1:
        exit_side = 0 if rng.random() < 0.5 else 3  # up or right
        layout.locations[coord][exit_side] = 1
        return layout
    for _ in range(n - 1):
        exit_side = 0 if rng.random() < 0.5 else 3  # up or right
        layout.locations[coord][exit_side] = 1
        dx, dy = SIDE_OFFSETS[exit_side]
        nxt = (coord[0] + dx, coord[1] + dy)
        layout.locations[nxt] = [0, 0, 0, 0]
        layout.locations[nxt][OPPOSITE[exit_side]] = 1
        layout.order.append(nxt)
        coord = nxt
    return layout


@dataclass
class WholeLevel:
    layout: Layout
    segments: dict[tuple[int, int], Segment]
    stitched: TileGrid
    room_seeds: dict[tuple[int, int], int] | None = None


def assemble(layout: Layout, ckpt: ModelCheckpoint, weights: BlendWeights,
             rng: np.random.Generator) -> WholeLevel:
    """Sample one segment per location (conditioned on its open sides)
    and stitch the bounding box; absent cells are filled with solid.

    Each room gets its own seed drawn from rng, recorded on the level so
    single rooms can be resampled or reproduced in isolation."""
    if ckpt.family not in DIRECTIONAL_FAMILIES:
        raise FamilyMismatch("assembling whole levels needs a directional family")
    segments: dict[tuple[int, int], Segment] = {}
    room_seeds: dict[tuple[int, int], int] = {}
    for coord in layout.order:
        label = layout.open_sides(coord)
        seed = int(rng.integers(0, 2**63 - 1))
        room_seeds[coord] = seed
        seg = sample_blend(ckpt, weights, 1, dir_label=label,
                           rng=np.random.default_rng(seed))[0]
        segments[coord] = seg

    xs = [c[0] for c in layout.locations]
    ys = [c[1] for c in layout.locations]
    width = (max(xs) - min(xs) + 1) * SEGMENT_COLS
    height = (max(ys) - min(ys) + 1) * SEGMENT_ROWS
    filler = _solid_filler(ckpt)
    stitched = np.full((height, width), filler, dtype=np.int64)
    for coord, seg in segments.items():
        col0 = (coord[0] - min(xs)) * SEGMENT_COLS
        # gy grows upward; stitched row 0 is the top of the level
        row0 = (max(ys) - coord[1]) * SEGMENT_ROWS
        stitched[row0 : row0 + SEGMENT_ROWS, col0 : col0 + SEGMENT_COLS] = \
            seg.grid.as_array()
    return WholeLevel(layout, segments, TileGrid.from_array(stitched), room_seeds)


def _solid_filler(ckpt: ModelCheckpoint) -> int:
    for info in ckpt.vocab:
        if info.affordance == "solid":
            return info.tile_id
    raise ValueError("vocabulary has no solid tile to fill with")


def save_whole_level(level: WholeLevel, ckpt: ModelCheckpoint,
                     path_prefix: str | Path) -> tuple[Path, Path]:
    """Write the stitched text grid and a layout sidecar (locations,
    open sides, per-location seeds)."""
    prefix = Path(path_prefix)
    text_path = prefix.with_suffix(".txt")
    text_path.write_text(render_level(level.stitched, ckpt.vocab) + "\n")
    sidecar = {
        "kind": level.layout.kind,
        "locations": [
            {
                "coord": list(coord),
                "open_sides": level.layout.locations[coord],
                "seed": None if level.room_seeds is None
                else level.room_seeds[coord],
            }
            for coord in level.layout.order
        ],
    }
    sidecar_path = prefix.with_suffix(".layout.json")
    sidecar_path.write_text(json.dumps(sidecar, indent=2) + "\n")
    return text_path, sidecar_path
