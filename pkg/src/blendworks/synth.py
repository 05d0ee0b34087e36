"""Synthetic desk-scale fixtures: tiny games with disjoint tile palettes.

Used by tests, demos and the development server to exercise the full
pipeline in seconds instead of training on a real level corpus. Each
game has its own characters and a distinctive structural style so both
the classifier and the tile-pattern metric can tell the games apart.
"""

from __future__ import annotations

import numpy as np

from .corpus import (
    SEGMENT_COLS,
    SEGMENT_ROWS,
    Corpus,
    Segment,
    TileGrid,
    TileVocab,
    auto_dir_label,
    upsample,
)
from .jumps import JumpModel

GAME_NAMES = ("alpha", "beta", "gamma", "delta")

# every game gets disjoint characters: (background, solid, climbable)
GAME_CHARS = {
    "alpha": ("-", "X", "H"),
    "beta": (".", "#", "L"),
    "gamma": (",", "O", "T"),
    "delta": ("_", "W", "Y"),
}


def synthetic_vocab(num_games: int = 4) -> TileVocab:
    games = {}
    for name in GAME_NAMES[:num_games]:
        bg, solid, climb = GAME_CHARS[name]
        games[name] = {
            "background": bg,
            "tiles": {bg: "passable", solid: "solid", climb: "climbable"},
        }
    return TileVocab.from_config({"games": games})


def _style_cells(game_index: int, bg: int, solid: int, climb: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Game-specific segment layouts, varied per draw."""
    grid = np.full((SEGMENT_ROWS, SEGMENT_COLS), bg, dtype=np.int64)
    if game_index == 0:
        # flat runner: floor near the bottom plus a few floating blocks
        floor = int(rng.integers(12, 15))
        grid[floor:, :] = solid
        for _ in range(int(rng.integers(2, 5))):
            r = int(rng.integers(7, floor - 1))
            c = int(rng.integers(0, SEGMENT_COLS - 3))
            grid[r, c : c + int(rng.integers(2, 4))] = solid
    elif game_index == 1:
        # pillar hall: full-height columns with gaps, plus a ladder
        for c in range(0, SEGMENT_COLS, 4):
            top = int(rng.integers(3, 9))
            grid[top:, c] = solid
        ladder_col = int(rng.integers(1, SEGMENT_COLS - 1))
        grid[:, ladder_col] = climb
    elif game_index == 2:
        # stacked platforms every third row with moving gaps
        for r in range(2, SEGMENT_ROWS, 3):
            gap = int(rng.integers(0, SEGMENT_COLS - 4))
            grid[r, :] = solid
            grid[r, gap : gap + 4] = bg
    else:
        # walled cavern: thick border with an open center pool
        grid[:, :] = solid
        r0 = int(rng.integers(2, 5))
        c0 = int(rng.integers(2, 5))
        grid[r0 : SEGMENT_ROWS - 2, c0 : SEGMENT_COLS - 2] = bg
        if rng.random() < 0.5:
            grid[SEGMENT_ROWS - 6 :, c0] = climb
    return grid


def _boxed_cells(game_index: int, bg: int, solid: int, climb: int,
                 open_sides: tuple[int, int, int, int],
                 rng: np.random.Generator) -> np.ndarray:
    """Solid-border room with openings on the requested (U,D,L,R) sides."""
    grid = np.full((SEGMENT_ROWS, SEGMENT_COLS), bg, dtype=np.int64)
    grid[0, :] = solid
    grid[-1, :] = solid
    grid[:, 0] = solid
    grid[:, -1] = solid
    # a little interior flavor per game, inset from the border
    for _ in range(2 + game_index):
        r = int(rng.integers(3, SEGMENT_ROWS - 3))
        c = int(rng.integers(3, SEGMENT_COLS - 4))
        grid[r, c : c + 2] = solid if game_index % 2 == 0 else climb
    up, down, left, right = open_sides
    mid_col = SEGMENT_COLS // 2
    mid_row = SEGMENT_ROWS // 2
    if up:
        grid[0, mid_col - 2 : mid_col + 2] = bg
    if down:
        grid[-1, mid_col - 2 : mid_col + 2] = bg
    if left:
        grid[mid_row - 2 : mid_row + 2, 0] = bg
    if right:
        grid[mid_row - 2 : mid_row + 2, -1] = bg
    return grid


def synthetic_corpus(num_games: int = 4, per_game: int = 40, seed: int = 0,
                     with_dirs: bool = False) -> Corpus:
    """Balanced corpus of styled segments; optionally with open-side labels
    assigned by the border heuristic."""
    vocab = synthetic_vocab(num_games)
    rng = np.random.default_rng(seed)
    per_game_segments: dict[str, list[Segment]] = {}
    for gi, game in enumerate(vocab.games):
        bg_char, solid_char, climb_char = GAME_CHARS[game]
        bg = vocab.tile_id(game, bg_char)
        solid = vocab.tile_id(game, solid_char)
        climb = vocab.tile_id(game, climb_char)
        segments = []
        for j in range(per_game):
            if with_dirs:
                sides = _nth_open_sides(j, rng)
                cells = _boxed_cells(gi, bg, solid, climb, sides, rng)
                grid = TileGrid.from_array(cells)
                seg = Segment(grid, game, dir_label=auto_dir_label(grid, vocab))
            else:
                cells = _style_cells(gi, bg, solid, climb, rng)
                seg = Segment(TileGrid.from_array(cells), game)
            segments.append(seg)
        per_game_segments[game] = segments
    return upsample(per_game_segments, vocab)


def _nth_open_sides(j: int, rng: np.random.Generator) -> tuple[int, int, int, int]:
    # cycle through all 15 non-empty side subsets, then draw randomly
    if j < 15:
        bits = j + 1
    else:
        bits = int(rng.integers(1, 16))
    return ((bits >> 3) & 1, (bits >> 2) & 1, (bits >> 1) & 1, bits & 1)


def synthetic_jump_models(games: tuple[str, ...]) -> dict[str, JumpModel]:
    """Distinct but overlapping jump physics per synthetic game."""
    presets = [
        JumpModel(2.0, 0.5, 0.5, 1, 1.0),
        JumpModel(2.5, 0.4, 0.6, 2, 1.2),
        JumpModel(1.5, 0.6, 0.4, 0, 0.8),
        JumpModel(3.0, 0.7, 0.7, 1, 1.5),
    ]
    return {game: presets[i % len(presets)] for i, game in enumerate(games)}


def quick_model_config(family: str, num_games: int, seed: int = 7,
                       epochs: int = 200, latent_dim: int = 8):
    """Desk-scale training configuration for the synthetic corpus."""
    from .models import GM_FAMILIES, default_config

    overrides = dict(
        epochs=epochs,
        encoder_widths=(64, 32),
        decoder_widths=(32, 64),
        batch_size=32,
    )
    if family not in GM_FAMILIES:
        # keep the reference proportions: beta ramps over the first
        # quarter and the learning rate steps down twice per run
        overrides["kl_anneal_epochs"] = max(1, epochs // 4)
        overrides["lr_every"] = max(1, epochs // 2)
    return default_config(family, num_games, latent_dim, seed, **overrides)


def materialize_run(out_dir, family: str = "gmvae", num_games: int = 4,
                    per_game: int = 40, epochs: int = 250, seed: int = 7,
                    latent_dim: int = 8):
    """Train on a synthetic corpus and write everything a server needs:
    corpus cache, checkpoint, jump parameters and a serve config."""
    import json
    from pathlib import Path

    from .cli import save_corpus_cache
    from .jumps import save_jump_params
    from .models import DIRECTIONAL_FAMILIES, save_checkpoint, train

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with_dirs = family in DIRECTIONAL_FAMILIES
    corpus = synthetic_corpus(num_games, per_game, seed, with_dirs=with_dirs)
    save_corpus_cache(corpus, out)
    config = quick_model_config(family, num_games, seed=seed, epochs=epochs,
                                latent_dim=latent_dim)
    ckpt = train(corpus, config)
    ckpt_path = out / f"{family}.ck"
    save_checkpoint(ckpt, ckpt_path)
    save_jump_params(synthetic_jump_models(corpus.games), out / "jumps.json",
                     note="synthetic demo physics")
    (out / "serve.cfg").write_text(json.dumps({
        "out_dir": ".",
        "seed": seed,
        "jumps": "jumps.json",
    }, indent=2) + "\n")
    return ckpt_path


def _main(argv=None) -> int:
    import argparse

    parser = argparse.ArgumentParser(
        description="materialize a synthetic training run for demos and UI work")
    parser.add_argument("--out", required=True)
    parser.add_argument("--family", default="gmvae")
    parser.add_argument("--games", type=int, default=4)
    parser.add_argument("--per-game", type=int, default=40)
    parser.add_argument("--epochs", type=int, default=250)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--latent-dim", type=int, default=8)
    args = parser.parse_args(argv)
    path = materialize_run(args.out, args.family, args.games, args.per_game,
                           args.epochs, args.seed, args.latent_dim)
    print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(_main())
