"""Whole-level assembly: train a direction-conditioned model, walk a
dungeon layout, and stitch sampled rooms whose openings mirror the
layout's doors.

Run: python demos/05_whole_levels.py   (about a minute of CPU)
"""

import numpy as np

from blendworks import BlendWeights, gen_dungeon_layout, gen_platformer_layout, render_level
from blendworks.layout import assemble
from blendworks.models import train_conditional_directional
from blendworks.synth import quick_model_config, synthetic_corpus

corpus = synthetic_corpus(num_games=2, per_game=40, seed=3, with_dirs=True)
print(f"training a direction-conditioned mixture model on {len(corpus.segments)} "
      f"rooms with open-side labels")
config = quick_model_config("cgmvae", 2, seed=4, epochs=250)
ckpt = train_conditional_directional(corpus, config)
print(f"final loss {ckpt.extra['loss_history'][-1]:.2f}")

rng = np.random.default_rng(11)
layout = gen_dungeon_layout(5, rng)
print(f"\ndungeon walk placed rooms at: {layout.order}")
for coord in layout.order:
    print(f"  {coord}: open sides (U,D,L,R) = {layout.open_sides(coord)}")
print(f"connected: {layout.is_connected()}, doors mirrored: {layout.mirrored()}")

level = assemble(layout, ckpt, BlendWeights((0.5, 0.5)), rng)
print(f"\nstitched level is {level.stitched.rows}x{level.stitched.cols}:")
print(render_level(level.stitched, corpus.vocab))

chain = gen_platformer_layout(4, rng)
print(f"\nplatformer chain: {chain.order} "
      f"(progress is monotone up/right)")
