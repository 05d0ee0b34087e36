"""Game-blending workbench.

Learns per-game latent distributions from tile-based levels, generates
blended games as weighted combinations of those distributions, blends
the games' jump physics with the same weights, and evaluates blend
fidelity and playability.
"""

from .agent import AffordanceGrid, PathResult, astar, playability, to_affordances
from .blending import (
    BlendWeights,
    blend_components,
    enumerate_binary_weights,
    sample_blend,
    sample_blend_conditional,
    sample_blend_gm,
)
from .corpus import (
    Corpus,
    Segment,
    TileGrid,
    TileVocab,
    encode_onehot,
    extract_segments,
    filter_solid,
    pad_grid,
    parse_level,
    render_level,
    upsample,
)
from .evaluation import (
    ExperimentConfig,
    Report,
    blend_score,
    directional_match,
    predict_percentages,
    run_experiment,
    tpkldiv,
)
from .forest import ForestHyper, train_direction_classifier, train_forest, train_game_classifier
from .jumps import ImpulseGravity, JumpArc, JumpModel, blend_jump, derive_arc, fit_impulse_gravity
from .layout import Layout, WholeLevel, assemble, gen_dungeon_layout, gen_platformer_layout
from .models import (
    ComponentSet,
    ModelCheckpoint,
    ModelConfig,
    default_config,
    load_checkpoint,
    save_checkpoint,
    train,
    train_cvae,
    train_gmvae,
)
from .numerics import AdamState, DenseNet, DiagGaussian, adam_step, kl_diag, sample_gaussian

__version__ = "0.1.0"
