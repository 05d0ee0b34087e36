"""Corpus pipeline walkthrough: parse text levels, pad, slice segments,
filter, upsample, and encode.

Run: python demos/01_corpus_pipeline.py
"""

from blendworks import (
    Segment,
    TileVocab,
    encode_onehot,
    extract_segments,
    filter_solid,
    pad_grid,
    parse_level,
    render_level,
    upsample,
)

vocab = TileVocab.from_config({
    "games": {
        "skyrun": {"background": "-", "tiles": {"-": "passable", "X": "solid",
                                                "^": "hazard"}},
        "deepway": {"background": ".", "tiles": {".": "passable", "#": "solid",
                                                 "L": "climbable"}},
    }
})

# a 14-row level, like a classic sidescroller dump: one row short
level_text = "\n".join(
    ["-" * 48] * 10
    + ["-" * 20 + "XXXX" + "-" * 24]
    + ["-" * 48] * 2
    + ["X" * 48]
)
grid = parse_level(level_text, vocab, "skyrun")
print(f"parsed {grid.rows}x{grid.cols} level")

padded = pad_grid(grid, "top-background-row", 15, vocab, "skyrun")
print(f"padded to {padded.rows}x{padded.cols} with a background row on top")
assert render_level(grid, vocab) == level_text  # parsing is lossless

windows = extract_segments(padded)
print(f"extracted {len(windows)} non-overlapping 15x16 segments")

segments = [Segment(w, "skyrun") for w in windows]
solid_block = Segment(parse_level("\n".join(["X" * 16] * 15), vocab, "skyrun"),
                      "skyrun")
kept = filter_solid(segments + [solid_block], vocab)
print(f"filter_solid dropped {len(segments) + 1 - len(kept)} all-solid segment")

# a second game with a different palette, then balance the two
deep_text = "\n".join(["." * 16] * 30)
deep_windows = extract_segments(parse_level(deep_text, vocab, "deepway"))
deep_segments = [Segment(w, "deepway") for w in deep_windows]

corpus = upsample({"skyrun": kept, "deepway": deep_segments}, vocab)
print(f"counts before upsampling: {corpus.counts_before}")
print(f"counts after upsampling:  {corpus.counts_after}")

vec = encode_onehot(corpus.segments[0], vocab)
print(f"one-hot encoding: length {vec.shape[0]}, {int(vec.sum())} ones "
      f"(one per cell)")

print()
print("first segment rendered back to text:")
print(render_level(corpus.segments[0].grid, vocab))
