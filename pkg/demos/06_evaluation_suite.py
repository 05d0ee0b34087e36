"""The three blend evaluations end to end: classifier score per weight,
playability under the blended jump, and tile-pattern KL against each
source game.

Run: python demos/06_evaluation_suite.py   (a few minutes of CPU)
"""

import numpy as np

from blendworks import BlendWeights, blend_score
from blendworks.evaluation import ExperimentConfig, run_experiment
from blendworks.forest import ForestHyper, train_game_classifier
from blendworks.models import train_gmvae
from blendworks.synth import (
    quick_model_config,
    synthetic_corpus,
    synthetic_jump_models,
)

# the score is a squared gap between scaled weights and classifier output
perfect = blend_score(BlendWeights.binary([1, 0, 1, 0]), [50, 0, 50, 0])
drifted = blend_score(BlendWeights.binary([1, 0, 1, 0]), [80, 0, 20, 0])
print(f"score when predictions match a 1010 blend exactly: {perfect.score}")
print(f"score when the blend drifts toward game 1:          {drifted.score}\n")

corpus = synthetic_corpus(num_games=2, per_game=30, seed=5)
ckpt = train_gmvae(corpus, quick_model_config("gmvae", 2, seed=6, epochs=250))
classifier = train_game_classifier(corpus.segments, corpus.vocab, corpus.games,
                                   ForestHyper(tree_count=40, seed=7))
print(f"game classifier holdout accuracy: {classifier.holdout_accuracy:.2%}\n")

report = run_experiment(
    ckpt,
    classifier,
    {g: corpus.per_game(g) for g in corpus.games},
    synthetic_jump_models(corpus.games),
    ExperimentConfig(n_samples=60, seed=8, fractional=((0.7, 0.3), (0.3, 0.7))),
    model_name="demo-gmvae-8",
)
print(report.render_text())
