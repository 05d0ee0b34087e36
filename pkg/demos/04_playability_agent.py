"""Playability testing: the affordance A* agent walks, climbs, falls and
jumps through a segment, looking for left-to-right and bottom-to-top
paths.

Run: python demos/04_playability_agent.py
"""

from blendworks import JumpModel, TileVocab, derive_arc, parse_level
from blendworks.agent import BOTTOM_TO_TOP, LEFT_TO_RIGHT, astar, to_affordances

vocab = TileVocab.from_config({
    "games": {"demo": {"background": "-",
                       "tiles": {"-": "passable", "X": "solid",
                                 "^": "hazard", "H": "climbable"}}}
})

segment_text = "\n".join([
    "----------------",
    "----------------",
    "----------------",
    "----------------",
    "----------------",
    "-------XXX------",
    "-------H--------",
    "-------H--------",
    "-------H--------",
    "XXX----H--------",
    "--------------XX",
    "----XX----------",
    "----------^^----",
    "----------------",
    "XXXXXXX--XXXXXXX",
])

grid = parse_level(segment_text, vocab, "demo")
affordances = to_affordances(grid, vocab)
arc = derive_arc(JumpModel(2.0, 0.5, 0.5, 1, 1.0))

for direction in (LEFT_TO_RIGHT, BOTTOM_TO_TOP):
    result = astar(affordances, [arc], direction)
    print(f"{direction}: {'playable' if result.playable else 'unplayable'}")
    if result.playable:
        overlay = [list(row) for row in segment_text.splitlines()]
        for r, c, _ in result.path:
            if overlay[r][c] == "-":
                overlay[r][c] = "o"
        print("\n".join("".join(row) for row in overlay))
        actions = [action for _, _, action in result.path]
        print(f"moves: {' '.join(actions)}\n")
