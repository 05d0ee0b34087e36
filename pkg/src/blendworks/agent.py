"""Affordance-level playability agent.

Segments reduce to a 15x16 grid of four affordances; a multi-source A*
searches for a left-to-right or a bottom-to-top path using walk, climb,
fall and jump-arc moves. The move relation is deliberately simple so a
brute-force breadth-first search over the same relation can serve as an
oracle.

Movement rules (conventions, not inherited from any external agent):
- the agent occupies passable or climbable cells, never solids or hazards
- a cell is supported when it is climbable, sits on the bottom edge, or
  the cell beneath is solid or climbable
- walking moves one column sideways from a supported cell
- climbing moves one row up or down from a climbable cell
- an unsupported agent can only fall: straight down or one column diagonal
- jumping follows a jump arc's per-frame offsets from a supported cell,
  mirrored for leftward motion; solid collision truncates the arc (head
  bumps turn into falls from the last clear cell), hazards and grid exits
  truncate it outright; every clear visited cell is a landing candidate
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import SEGMENT_COLS, SEGMENT_ROWS, Segment, TileGrid, TileVocab
from .jumps import JumpArc

PASSABLE, SOLID, HAZARD, CLIMBABLE = 0, 1, 2, 3
AFFORDANCE_CODES = {"passable": PASSABLE, "solid": SOLID, "hazard": HAZARD,
                    "climbable": CLIMBABLE}

LEFT_TO_RIGHT = "left-to-right"
BOTTOM_TO_TOP = "bottom-to-top"
DIRECTIONS = (LEFT_TO_RIGHT, BOTTOM_TO_TOP)


@dataclass(frozen=True)
class AffordanceGrid:
    cells: tuple[tuple[int, ...], ...]  # rows of affordance codes

    def __post_init__(self):
        if len(self.cells) != SEGMENT_ROWS or any(len(r) != SEGMENT_COLS for r in self.cells):
            raise ValueError(f"affordance grid must be {SEGMENT_ROWS}x{SEGMENT_COLS}")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "AffordanceGrid":
        return cls(tuple(tuple(int(v) for v in row) for row in np.asarray(arr)))

    def at(self, row: int, col: int) -> int:
        return self.cells[row][col]


@dataclass(frozen=True)
class PathResult:
    playable: bool
    path: tuple[tuple[int, int, str], ...] | None
    direction: str


def to_affordances(segment: Segment | TileGrid, vocab: TileVocab) -> AffordanceGrid:
    grid = segment.grid if isinstance(segment, Segment) else segment
    rows = []
    for r in range(grid.rows):
        rows.append(tuple(AFFORDANCE_CODES[vocab.affordance(t)] for t in grid.row(r)))
    return AffordanceGrid(tuple(rows))


def _enterable(grid: AffordanceGrid, row: int, col: int) -> bool:
    a = grid.at(row, col)
    return a == PASSABLE or a == CLIMBABLE


def _supported(grid: AffordanceGrid, row: int, col: int) -> bool:
    if grid.at(row, col) == CLIMBABLE:
        return True
    if row == SEGMENT_ROWS - 1:
        return True
    below = grid.at(row + 1, col)
    return below == SOLID or below == CLIMBABLE


def find_start_goal(grid: AffordanceGrid, direction: str):
    """Start/goal cell sets on the entry and exit edges; None when either is empty."""
    if direction == LEFT_TO_RIGHT:
        start_cells = [(r, 0) for r in range(SEGMENT_ROWS)]
        goal_cells = [(r, SEGMENT_COLS - 1) for r in range(SEGMENT_ROWS)]
    elif direction == BOTTOM_TO_TOP:
        start_cells = [(SEGMENT_ROWS - 1, c) for c in range(SEGMENT_COLS)]
        goal_cells = [(0, c) for c in range(SEGMENT_COLS)]
    else:
        raise ValueError(f"unknown direction {direction!r}")
    starts = {cell for cell in start_cells
              if _enterable(grid, *cell) and _supported(grid, *cell)}
    goals = {cell for cell in goal_cells
             if _enterable(grid, *cell) and _supported(grid, *cell)}
    if not starts or not goals:
        return None
    return starts, goals


def _jump_landings(grid: AffordanceGrid, row: int, col: int, arc: JumpArc,
                   direction: int) -> list[tuple[int, int, int]]:
    """Clear cells visited along one arc, as (row, col, frame) with 1-based frames."""
    landings = []
    for frame, (dx, dy) in enumerate(arc.offsets, start=1):
        r = row - dy
        c = col + direction * dx
        if r < 0 or r >= SEGMENT_ROWS or c < 0 or c >= SEGMENT_COLS:
            break
        a = grid.at(r, c)
        if a == SOLID or a == HAZARD:
            break
        if (r, c) != (row, col):
            landings.append((r, c, frame))
    return landings


def successors(grid: AffordanceGrid, state: tuple[int, int],
               arcs: Sequence[JumpArc]) -> list[tuple[tuple[int, int], str, int]]:
    """Legal moves from a cell: (next state, action, cost in frames)."""
    row, col = state
    moves: dict[tuple[int, int], tuple[str, int]] = {}

    def offer(r, c, action, cost):
        key = (r, c)
        if key not in moves or cost < moves[key][1]:
            moves[key] = (action, cost)

    if _supported(grid, row, col):
        for dc in (-1, 1):
            c = col + dc
            if 0 <= c < SEGMENT_COLS and _enterable(grid, row, c):
                offer(row, c, "walk", 1)
        if grid.at(row, col) == CLIMBABLE:
            for dr in (-1, 1):
                r = row + dr
                if 0 <= r < SEGMENT_ROWS and _enterable(grid, r, col):
                    offer(r, col, "climb", 1)
        for arc in arcs:
            for direction in (1, -1):
                for r, c, frame in _jump_landings(grid, row, col, arc, direction):
                    offer(r, c, "jump", frame)
    else:
        r = row + 1
        if r < SEGMENT_ROWS:
            for dc in (-1, 0, 1):
                c = col + dc
                if 0 <= c < SEGMENT_COLS and _enterable(grid, r, c):
                    offer(r, c, "fall", 1)
    return [(cell, action, cost) for cell, (action, cost) in moves.items()]


def _heuristic_scale(arcs: Sequence[JumpArc]) -> int:
    """Largest per-frame displacement; keeps the heuristic admissible
    against frame-counted move costs."""
    scale = 1
    for arc in arcs:
        prev = (0, 0)
        for off in arc.offsets:
            scale = max(scale, abs(off[0] - prev[0]), abs(off[1] - prev[1]))
            prev = off
    return scale


def astar(grid: AffordanceGrid, arcs: Sequence[JumpArc], direction: str) -> PathResult:
    """Multi-source A* from the entry edge to the exit edge."""
    if not arcs:
        raise ValueError("need at least one jump arc")
    endpoints = find_start_goal(grid, direction)
    if endpoints is None:
        return PathResult(False, None, direction)
    starts, goals = endpoints
    scale = _heuristic_scale(arcs)

    def h(state: tuple[int, int]) -> int:
        if direction == LEFT_TO_RIGHT:
            dist = SEGMENT_COLS - 1 - state[1]
        else:
            dist = state[0]
        return -(-dist // scale)  # ceil division

    counter = 0
    open_heap: list[tuple[int, int, tuple[int, int]]] = []
    best_cost: dict[tuple[int, int], int] = {}
    parents: dict[tuple[int, int], tuple[tuple[int, int] | None, str]] = {}
    for s in sorted(starts):
        best_cost[s] = 0
        parents[s] = (None, "start")
        heapq.heappush(open_heap, (h(s), counter, s))
        counter += 1
    closed: set[tuple[int, int]] = set()
    while open_heap:
        _, _, state = heapq.heappop(open_heap)
        if state in closed:
            continue
        closed.add(state)
        if state in goals:
            path: list[tuple[int, int, str]] = []
            cur: tuple[int, int] | None = state
            while cur is not None:
                prev, action = parents[cur]
                path.append((cur[0], cur[1], action))
                cur = prev
            path.reverse()
            return PathResult(True, tuple(path), direction)
        cost_here = best_cost[state]
        for nxt, action, cost in successors(grid, state, arcs):
            tentative = cost_here + cost
            if nxt not in best_cost or tentative < best_cost[nxt]:
                best_cost[nxt] = tentative
                parents[nxt] = (state, action)
                heapq.heappush(open_heap, (tentative + h(nxt), counter, nxt))
                counter += 1
    return PathResult(False, None, direction)


def bfs_reachable(grid: AffordanceGrid, arcs: Sequence[JumpArc], direction: str) -> bool:
    """Brute-force reachability over the identical move relation."""
    endpoints = find_start_goal(grid, direction)
    if endpoints is None:
        return False
    starts, goals = endpoints
    seen = set(starts)
    queue = deque(sorted(starts))
    while queue:
        state = queue.popleft()
        if state in goals:
            return True
        for nxt, _, _ in successors(grid, state, arcs):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return False


def playability(segment: Segment | TileGrid, vocab: TileVocab,
                arcs: Sequence[JumpArc]) -> bool:
    """A segment is playable when either direction admits a path."""
    grid = to_affordances(segment, vocab)
    if astar(grid, arcs, LEFT_TO_RIGHT).playable:
        return True
    return astar(grid, arcs, BOTTOM_TO_TOP).playable


def path_results(segment: Segment | TileGrid, vocab: TileVocab,
                 arcs: Sequence[JumpArc]) -> dict[str, PathResult]:
    grid = to_affordances(segment, vocab)
    return {direction: astar(grid, arcs, direction) for direction in DIRECTIONS}


def dump_path(result: PathResult) -> str:
    """Ordered (row,col) list as one structured text line per state."""
    if not result.playable or result.path is None:
        return ""
    return "\n".join(f"{r}\t{c}\t{action}" for r, c, action in result.path)
