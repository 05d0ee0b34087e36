"""Train a mixture-prior model on two synthetic games, then steer the
blend: one-hot weights reproduce a single game, mixed weights combine
the latent components.

Run: python demos/02_train_and_blend.py   (about a minute of CPU)
"""

import numpy as np

from blendworks import BlendWeights, blend_components, render_level
from blendworks.blending import sample_blend_gm
from blendworks.models import train_gmvae
from blendworks.synth import quick_model_config, synthetic_corpus

corpus = synthetic_corpus(num_games=2, per_game=30, seed=1)
print(f"training on {len(corpus.segments)} segments of {corpus.games}")

config = quick_model_config("gmvae", 2, seed=2, epochs=250)
ckpt = train_gmvae(corpus, config)
history = ckpt.extra["loss_history"]
print(f"loss: {history[0]:.1f} -> {history[-1]:.2f} over {len(history)} epochs")

comps = ckpt.components
print(f"\nlearned components (first 4 latent dims):")
for i, game in enumerate(corpus.games):
    print(f"  {game}: mean {np.round(comps.means[i][:4], 2)}  "
          f"var {np.round(comps.variances[i][:4], 2)}")

blended = blend_components(comps, BlendWeights((0.5, 0.5)))
print(f"\n50/50 blended distribution: mean {np.round(blended.mean[:4], 2)}  "
      f"var {np.round(blended.var[:4], 2)}")

for label, bits in [("pure alpha", [1, 0]), ("pure beta", [0, 1])]:
    segs = sample_blend_gm(ckpt, BlendWeights.binary(bits), 1,
                           rng=np.random.default_rng(7))
    print(f"\nsample at {label} {bits}:")
    print(render_level(segs[0].grid, corpus.vocab))
