"""Command-line entry points.

Subcommands: ingest, train, sample, layout, play, eval, serve. All
accept --config and --seed. Exit codes: 1 for usage problems, 2 for
data errors, 3 for numeric failures during training.

Config files are JSON; full-line comments starting with '#' are
stripped before parsing. See configs/demo_train.cfg for a commented
example and the README for the schema.
"""

from __future__ import annotations

import argparse
import glob
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from .agent import DIRECTIONS, path_results
from .blending import AllZeroWeights, BlendWeights, write_segments
from .corpus import (
    PAD_DUPLICATE_OUTERMOST,
    PAD_TOP_BACKGROUND,
    Corpus,
    CorpusError,
    Segment,
    TileVocab,
    auto_dir_label,
    extract_segments,
    filter_solid,
    load_annotations,
    pad_grid,
    parse_level,
    upsample,
)
from .evaluation import ExperimentConfig, run_experiment
from .forest import ForestHyper, train_direction_classifier, train_game_classifier
from .jumps import blend_jump, derive_arc, load_jump_params
from .layout import DUNGEON, assemble, gen_dungeon_layout, gen_platformer_layout, save_whole_level
from .models import (
    ModelConfig,
    NonFiniteLoss,
    load_checkpoint,
    save_checkpoint,
    train,
)

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class ConfigError(Exception):
    pass


def load_config_file(path: str | Path) -> dict:
    text = Path(path).read_text()
    stripped = "\n".join(line for line in text.splitlines()
                         if not line.lstrip().startswith("#"))
    try:
        return json.loads(stripped)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


def config_hash(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True).encode("utf-8")).hexdigest()[:16]


@dataclass
class RunConfig:
    raw: dict
    base_dir: Path
    seed: int

    @classmethod
    def load(cls, path: str | Path, seed_override: int | None) -> "RunConfig":
        raw = load_config_file(path)
        seed = seed_override if seed_override is not None else raw.get("seed")
        if seed is None:
            raise ConfigError("a seed is mandatory: set it in the config or pass --seed")
        run = cls(raw, Path(path).resolve().parent, int(seed))
        run.validate_paths()
        return run

    def resolve(self, rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else (self.base_dir / p)

    def validate_paths(self) -> None:
        corpus_cfg = self.raw.get("corpus", {})
        if "vocab" in corpus_cfg and not self.resolve(corpus_cfg["vocab"]).exists():
            raise ConfigError(f"vocab file not found: {corpus_cfg['vocab']}")
        for game, spec in corpus_cfg.get("games", {}).items():
            for pattern in spec.get("levels", []):
                if not glob.glob(str(self.resolve(pattern))):
                    raise ConfigError(f"no level files match {pattern!r} for {game}")
        jumps = self.raw.get("jumps")
        if jumps and not self.resolve(jumps).exists():
            raise ConfigError(f"jump parameter file not found: {jumps}")

    @property
    def out_dir(self) -> Path:
        out = self.resolve(self.raw.get("out_dir", "runs/out"))
        out.mkdir(parents=True, exist_ok=True)
        return out


def build_corpus(run: RunConfig) -> Corpus:
    """Parse, pad, segment, filter, label and upsample per the config."""
    corpus_cfg = run.raw["corpus"]
    vocab = TileVocab.load(run.resolve(corpus_cfg["vocab"]))
    per_game: dict[str, list[Segment]] = {}
    annotations = corpus_cfg.get("annotations", {})
    for game, spec in corpus_cfg["games"].items():
        grids = []
        for pattern in spec["levels"]:
            for path in sorted(glob.glob(str(run.resolve(pattern)))):
                grid = parse_level(Path(path).read_text(), vocab, game)
                policy = spec.get("pad", PAD_TOP_BACKGROUND)
                if grid.rows < corpus_mod.SEGMENT_ROWS:
                    grid = pad_grid(grid, policy, corpus_mod.SEGMENT_ROWS, vocab, game)
                grids.extend(extract_segments(grid))
        segments = [Segment(g, game) for g in grids]
        if spec.get("filter_solid", True):
            segments = filter_solid(segments, vocab)
        note = annotations.get(game)
        if note == "auto":
            segments = [s.with_dir_label(auto_dir_label(s.grid, vocab))
                        for s in segments]
        elif note:
            labels = load_annotations(run.resolve(note))
            segments = [s.with_dir_label(labels[i]) for i, s in enumerate(segments)]
        per_game[game] = segments
    return upsample(per_game, vocab)


def save_corpus_cache(corpus: Corpus, out_dir: Path) -> Path:
    cells = np.array([seg.grid.cells for seg in corpus.segments], dtype=np.int32)
    game_idx = np.array([corpus.games.index(seg.game) for seg in corpus.segments],
                        dtype=np.int32)
    dirs = np.array([seg.dir_label if seg.dir_label is not None else (-1, -1, -1, -1)
                     for seg in corpus.segments], dtype=np.int32)
    np.savez(out_dir / "corpus.npz", cells=cells, game_idx=game_idx, dirs=dirs)
    meta = {
        "games": list(corpus.games),
        "vocab": corpus.vocab.to_config(),
        "counts_before": corpus.counts_before,
        "counts_after": corpus.counts_after,
    }
    (out_dir / "corpus.json").write_text(json.dumps(meta, indent=2) + "\n")
    return out_dir / "corpus.npz"


def load_corpus_cache(out_dir: Path) -> Corpus:
    meta = json.loads((out_dir / "corpus.json").read_text())
    data = np.load(out_dir / "corpus.npz")
    vocab = TileVocab.from_config(meta["vocab"])
    games = tuple(meta["games"])
    segments = []
    for cells, gi, dirs in zip(data["cells"], data["game_idx"], data["dirs"]):
        grid = corpus_mod.TileGrid(corpus_mod.SEGMENT_ROWS, corpus_mod.SEGMENT_COLS,
                                   tuple(int(v) for v in cells))
        dir_label = None if dirs[0] < 0 else tuple(int(b) for b in dirs)
        label = corpus_mod.game_one_hot(games, games[int(gi)])
        segments.append(Segment(grid, games[int(gi)], label, dir_label))
    return Corpus(segments, vocab, games, meta["counts_before"], meta["counts_after"])


def _model_config(run: RunConfig, game_count: int) -> ModelConfig:
    spec = dict(run.raw["model"])
    family = spec.pop("family")
    latent_dim = spec.pop("latent_dim")
    from .models import default_config

    spec.pop("seed", None)
    for key in ("encoder_widths", "decoder_widths"):
        if key in spec:
            spec[key] = tuple(spec[key])
    return default_config(family, game_count, latent_dim, run.seed, **spec)


def cmd_ingest(args) -> int:
    run = RunConfig.load(args.config, args.seed)
    corpus = build_corpus(run)
    cache = save_corpus_cache(corpus, run.out_dir)
    print(f"ingested {len(corpus.segments)} segments "
          f"(per game before upsampling: {corpus.counts_before})")
    print(f"cache: {cache}")
    return 0


def cmd_train(args) -> int:
    run = RunConfig.load(args.config, args.seed)
    if (run.out_dir / "corpus.npz").exists():
        corpus = load_corpus_cache(run.out_dir)
    else:
        corpus = build_corpus(run)
        save_corpus_cache(corpus, run.out_dir)
    config = _model_config(run, len(corpus.games))
    ckpt = train(corpus, config)
    ckpt.extra["config_hash"] = config_hash(run.raw)
    ckpt.extra["seed"] = run.seed
    out = run.out_dir / f"{config.family}.ck"
    save_checkpoint(ckpt, out)
    print(f"trained {config.family} for {config.epochs} epochs; "
          f"final loss {ckpt.extra['loss_history'][-1]:.4f}")
    print(f"checkpoint: {out}")
    return 0


def cmd_sample(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    weights = BlendWeights.parse(args.weights)
    dir_label = _parse_dir_bits(args.dir)
    rng = np.random.default_rng(args.seed)
    from .blending import sample_blend

    segments = sample_blend(ckpt, weights, args.count, dir_label=dir_label, rng=rng)
    out_dir = Path(args.out)
    paths = write_segments(segments, ckpt, weights, args.seed, out_dir)
    for p in paths:
        print(p)
    return 0


def cmd_layout(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    weights = BlendWeights.parse(args.weights)
    rng = np.random.default_rng(args.seed)
    layout = gen_dungeon_layout(args.count, rng) if args.kind == DUNGEON \
        else gen_platformer_layout(args.count, rng)
    level = assemble(layout, ckpt, weights, rng)
    text_path, sidecar = save_whole_level(level, ckpt, Path(args.out))
    print(f"level: {text_path}")
    print(f"layout sidecar: {sidecar}")
    return 0


def cmd_play(args) -> int:
    vocab = TileVocab.load(args.vocab)
    grid = parse_level(Path(args.level).read_text(), vocab, args.game)
    if grid.rows < corpus_mod.SEGMENT_ROWS:
        grid = pad_grid(grid, args.pad, corpus_mod.SEGMENT_ROWS, vocab, args.game)
    if (grid.rows, grid.cols) != (corpus_mod.SEGMENT_ROWS, corpus_mod.SEGMENT_COLS):
        grids = extract_segments(grid)
    else:
        grids = [grid]
    jump_models = load_jump_params(args.jumps)
    weights = BlendWeights.parse(args.weights)
    games = list(vocab.games)
    blended = blend_jump([jump_models[g] for g in games], weights.values)
    arcs = [derive_arc(blended)]
    all_playable = True
    for i, g in enumerate(grids):
        results = path_results(g, vocab, arcs)
        verdict = any(r.playable for r in results.values())
        all_playable &= verdict
        detail = ", ".join(f"{d}: {'yes' if results[d].playable else 'no'}"
                           for d in DIRECTIONS)
        print(f"segment {i}: {'playable' if verdict else 'unplayable'} ({detail})")
    print(f"level: {'playable' if all_playable else 'unplayable'}")
    return 0


def cmd_eval(args) -> int:
    run = RunConfig.load(args.config, args.seed)
    if (run.out_dir / "corpus.npz").exists():
        corpus = load_corpus_cache(run.out_dir)
    else:
        corpus = build_corpus(run)
    ckpt = load_checkpoint(run.resolve(run.raw["checkpoint"])
                           if "checkpoint" in run.raw
                           else run.out_dir / f"{run.raw['model']['family']}.ck")
    eval_cfg = dict(run.raw.get("eval", {}))
    if args.binary:
        eval_cfg["include_fractional"] = False
    if "fractional" in eval_cfg:
        eval_cfg["fractional"] = tuple(tuple(v) for v in eval_cfg["fractional"])
    config = ExperimentConfig(seed=run.seed, **eval_cfg)
    hyper = ForestHyper(seed=run.seed)
    classifier = train_game_classifier(corpus.segments, corpus.vocab,
                                       corpus.games, hyper)
    dir_clf = None
    if all(s.dir_label is not None for s in corpus.segments):
        dir_clf = train_direction_classifier(corpus.segments, corpus.vocab, hyper)
    jump_models = load_jump_params(run.resolve(run.raw["jumps"]))
    refs = {g: corpus.per_game(g) for g in corpus.games}
    report = run_experiment(ckpt, classifier, refs, jump_models, config,
                            dir_classifier=dir_clf,
                            model_name=f"{ckpt.family}-{ckpt.latent_dim}")
    report.config_note += f"; config_hash={config_hash(run.raw)}; seed={run.seed}"
    report_dir = run.out_dir / "report"
    for path in report.write(report_dir):
        print(path)
    print(f"classifier holdout accuracy: {classifier.holdout_accuracy:.4f}")
    if dir_clf is not None:
        print(f"directional holdout accuracy: {dir_clf.holdout_accuracy:.4f}")
    return 0


def cmd_serve(args) -> int:
    from .forest import ForestClassifier  # noqa: F401  (docs pointer)
    from .server import ApiSession, make_server

    checkpoints = {}
    for path in args.ckpt:
        ckpt = load_checkpoint(path)
        checkpoints[Path(path).stem] = ckpt
    classifier = None
    jump_models = None
    if args.config:
        run = RunConfig.load(args.config, args.seed)
        if (run.out_dir / "corpus.npz").exists():
            corpus = load_corpus_cache(run.out_dir)
        else:
            corpus = build_corpus(run)
        classifier = train_game_classifier(corpus.segments, corpus.vocab,
                                           corpus.games, ForestHyper(seed=run.seed))
        if "jumps" in run.raw:
            jump_models = load_jump_params(run.resolve(run.raw["jumps"]))
    session = ApiSession(checkpoints, classifier, jump_models)
    server = make_server(session, args.port)
    print(f"serving {len(checkpoints)} model(s) on "
          f"http://{server.server_address[0]}:{server.server_address[1]}",
          flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


def _parse_dir_bits(text: str | None):
    if text is None:
        return None
    bits = tuple(int(b) for b in text)
    if len(bits) != 4 or any(b not in (0, 1) for b in bits):
        raise ConfigError("--dir takes four 0/1 characters, e.g. 0011")
    return bits


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blendworks",
        description="Train per-game latent models, blend games, evaluate blends")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=None,
                       help="seed override (mandatory here or in the config)")

    p = sub.add_parser("ingest", help="parse levels into a cached training corpus")
    p.add_argument("--config", required=True)
    add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train a model per the config")
    p.add_argument("--config", required=True)
    add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="sample blended segments from a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--weights", required=True, help="comma list, e.g. 0,0,0,1")
    p.add_argument("-n", "--count", type=int, default=5)
    p.add_argument("--dir", default=None, help="four 0/1 side bits (UDLR)")
    p.add_argument("--out", default="samples")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("layout", help="assemble a whole level from a layout walk")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--kind", choices=["dungeon", "platformer"], default="dungeon")
    p.add_argument("-n", "--count", type=int, default=5)
    p.add_argument("--weights", required=True)
    p.add_argument("--out", default="level")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_layout)

    p = sub.add_parser("play", help="playability-test a level file")
    p.add_argument("--level", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--game", required=True)
    p.add_argument("--jumps", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--pad", choices=[PAD_TOP_BACKGROUND, PAD_DUPLICATE_OUTERMOST],
                   default=PAD_TOP_BACKGROUND)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("eval", help="run the blend evaluation sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--binary", action="store_true",
                   help="binary weight rows only, skip fractional")
    add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="serve sampling/layout/playability over HTTP")
    p.add_argument("--ckpt", nargs="+", required=True)
    p.add_argument("--config", default=None,
                   help="optional corpus config for the classifier and jumps")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AllZeroWeights as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusError, FileNotFoundError, KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NonFiniteLoss as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
