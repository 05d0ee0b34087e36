"""Acceptance gate: one test per criterion, at its stated tolerance.

Run `pytest tests/test_acceptance.py -v` for one pass/fail line per
criterion. Criteria that need a real level corpus look for
$BLENDWORKS_VGLC (or ./vglc) and skip with an explicit notice when the
data is absent; the long full-corpus soft check additionally requires
BLENDWORKS_FULL=1.
"""

import os

import numpy as np
import pytest

from blendworks.agent import (
    BOTTOM_TO_TOP,
    CLIMBABLE,
    HAZARD,
    LEFT_TO_RIGHT,
    PASSABLE,
    SOLID,
    AffordanceGrid,
    astar,
    bfs_reachable,
)
from blendworks.blending import BlendWeights, sample_blend_gm
from blendworks.evaluation import (
    DEFAULT_FRACTIONAL,
    ExperimentConfig,
    blend_score,
    directional_match,
    experiment_weights,
    predict_percentages,
    tpkldiv,
)
from blendworks.forest import ForestHyper, segment_features, train_game_classifier
from blendworks.jumps import JumpModel, derive_arc
from blendworks.models import build_model, default_config, loss_and_grads, train_gmvae
from blendworks.numerics import (
    DiagGaussian,
    finite_difference_grads,
    kl_diag,
    max_relative_error,
)
from blendworks.layout import gen_dungeon_layout
from blendworks.synth import synthetic_corpus, synthetic_jump_models
from blendworks.vglc import find_data_root, load_corpus_from_config

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")


def vglc_root_or_skip():
    root = find_data_root()
    if root is None:
        pytest.skip("VGLC data not present: set BLENDWORKS_VGLC or create ./vglc "
                    "to run the corpus reproduction criteria")
    return root


class TestExactScoreValues:
    def test_blend_score_reference_values(self):
        s = blend_score(BlendWeights.binary([1, 0, 0, 0]), [94.6, 3.8, 1.6, 0])
        assert s.score == pytest.approx(46.16, abs=0.05)

        s = blend_score(BlendWeights.binary([0, 0, 0, 1]), [0.1, 0, 0, 99.9])
        assert s.score == pytest.approx(0.02, abs=1e-12)

        s = blend_score(BlendWeights((0.5, 0.3, 0.2, 0.0), "fractional"),
                        [74.4, 18.6, 7, 0])
        assert s.score == pytest.approx(894.32, abs=0.05)

    def test_weight_enumeration_15_binary_plus_4_fractional(self):
        weights = experiment_weights(4, ExperimentConfig())
        binary = [w for w in weights if w.kind == "binary"]
        fractional = [w for w in weights if w.kind == "fractional"]
        assert len(binary) == 15
        assert len({w.values for w in binary}) == 15
        assert all(any(v for v in w.values) for w in binary)
        assert [w.values for w in fractional] == [
            (0.5, 0.3, 0.2, 0.0),
            (0.1, 0.1, 0.1, 0.7),
            (0.1, 0.6, 0.2, 0.1),
            (0.0, 0.2, 0.3, 0.5),
        ]
        assert tuple(tuple(v) for v in DEFAULT_FRACTIONAL) == \
            tuple(w.values for w in fractional)


class TestCorpusReproductions:
    def test_platformer_segment_counts(self):
        root = vglc_root_or_skip()
        corpus = load_corpus_from_config(
            os.path.join(CONFIG_DIR, "vglc_platformers.cfg"), root)
        assert corpus.counts_before == {"SMB": 172, "KI": 80, "MM": 143, "Met": 435}
        assert len(corpus.segments) == 1740

    def test_dungeon_segment_counts(self):
        root = vglc_root_or_skip()
        corpus = load_corpus_from_config(
            os.path.join(CONFIG_DIR, "vglc_dungeons.cfg"), root)
        assert corpus.counts_before == {"Zelda": 502, "DGG": 522, "Met": 435}
        assert len(corpus.segments) == 1566


class TestGradientSuite:
    def test_all_family_losses_match_finite_differences(self):
        from blendworks.corpus import TileVocab
        from blendworks.models import ModelConfig

        vocab = TileVocab.from_config({
            "games": {
                "a": {"background": "-", "tiles": {"-": "passable", "X": "solid"}},
                "b": {"background": ".", "tiles": {".": "passable", "#": "solid"}},
            }
        })
        labels = np.array([[1.0, 0.0], [0.0, 1.0]])
        dirs = np.array([[1.0, 0.0, 0.0, 1.0], [0.0, 1.0, 1.0, 0.0]])
        for family in ("gmvae", "cvae", "cgmvae", "ccvae"):
            use_dirs = dirs if family in ("cgmvae", "ccvae") else None
            ckpt, batch, eps = self._kink_free_model(family, vocab, labels, use_dirs)
            _, grads = loss_and_grads(ckpt, batch, labels, use_dirs,
                                      beta=0.7, eps=eps)

            def loss_fn():
                value, _ = loss_and_grads(ckpt, batch, labels, use_dirs,
                                          beta=0.7, eps=eps)
                return value

            numeric = finite_difference_grads(loss_fn, ckpt.trainable_params(),
                                              step=1e-4)
            err = max_relative_error(grads, numeric)
            assert err < 1e-4, f"{family}: max relative error {err}"

    @staticmethod
    def _kink_free_model(family, vocab, labels, dirs, margin=1e-2):
        from blendworks.models import ModelConfig, _condition
        from blendworks.numerics import forward

        ids = [info.tile_id for info in vocab]
        for seed in range(60):
            config = ModelConfig(family=family, game_count=2, latent_dim=3,
                                 epochs=1, seed=seed, encoder_widths=(6, 5),
                                 decoder_widths=(4,), batch_size=2)
            ckpt = build_model(config, vocab, vocab.games)
            rng = np.random.default_rng(seed + 500)
            xs = []
            for _ in range(2):
                x = np.zeros(240 * len(vocab))
                for i, t in enumerate(rng.choice(ids, size=240)):
                    x[i * len(vocab) + int(t)] = 1.0
                xs.append(x)
            batch = np.stack(xs)
            eps = rng.standard_normal((2, 3))
            cond = _condition(ckpt, labels, dirs)
            enc_in = batch if cond is None else np.concatenate([batch, cond], axis=1)
            h, tape = forward(ckpt.encoder_trunk, enc_in)
            margins = [np.min(np.abs(pre)) for pre, layer in
                       zip(tape.pre_activations, ckpt.encoder_trunk.layers)
                       if layer.activation == "relu"]
            mu, _ = forward(ckpt.mean_head, h)
            raw_var, _ = forward(ckpt.var_head, h)
            z = mu + np.sqrt(raw_var + 1e-6) * eps
            dec_in = z if cond is None else np.concatenate([z, cond], axis=1)
            _, dtape = forward(ckpt.decoder, dec_in)
            margins += [np.min(np.abs(pre)) for pre, layer in
                        zip(dtape.pre_activations, ckpt.decoder.layers)
                        if layer.activation == "relu"]
            if min(margins) > margin:
                return ckpt, batch, eps
        raise AssertionError("no kink-free model found")


class TestKlOracle:
    def test_closed_form_within_one_percent_of_monte_carlo(self):
        rng = np.random.default_rng(77)
        q = DiagGaussian(rng.normal(size=4), np.exp(rng.normal(size=4) * 0.4))
        p = DiagGaussian(rng.normal(size=4), np.exp(rng.normal(size=4) * 0.4))
        closed = kl_diag(q, p)
        n = 1_000_000
        eps = rng.standard_normal((n, 4))
        samples = q.mean + np.sqrt(q.var) * eps

        def log_pdf(x, d):
            return -0.5 * np.sum(np.log(2 * np.pi * d.var)
                                 + (x - d.mean) ** 2 / d.var, axis=1)

        estimate = float(np.mean(log_pdf(samples, q) - log_pdf(samples, p)))
        assert closed == pytest.approx(estimate, rel=0.01)


@pytest.fixture(scope="module")
def synthetic_run():
    """4 synthetic games x 40 segments, z=8, 300 epochs; trained once."""
    corpus = synthetic_corpus(num_games=4, per_game=40, seed=100)
    config = default_config("gmvae", 4, 8, 101, epochs=300,
                            encoder_widths=(96, 48), decoder_widths=(48, 96),
                            batch_size=32)
    ckpt = train_gmvae(corpus, config)
    classifier = train_game_classifier(corpus.segments, corpus.vocab, corpus.games,
                                       ForestHyper(tree_count=50, seed=102))
    return corpus, ckpt, classifier


class TestSyntheticEndToEnd:
    def test_one_hot_weights_classify_as_matching_game(self, synthetic_run):
        corpus, ckpt, classifier = synthetic_run
        for gi in range(4):
            bits = [0, 0, 0, 0]
            bits[gi] = 1
            segs = sample_blend_gm(ckpt, BlendWeights.binary(bits), 200,
                                   rng=np.random.default_rng([103, gi]))
            p = predict_percentages(classifier, segment_features(segs, corpus.vocab))
            assert p[gi] >= 80.0, f"one-hot {bits}: {p}"

    def test_two_game_blend_concentrates_mass(self, synthetic_run):
        corpus, ckpt, classifier = synthetic_run
        segs = sample_blend_gm(ckpt, BlendWeights.binary([1, 1, 0, 0]), 200,
                               rng=np.random.default_rng([103, 9]))
        p = predict_percentages(classifier, segment_features(segs, corpus.vocab))
        assert p[0] + p[1] >= 90.0, f"blend 1100: {p}"

    def test_tpkldiv_minimal_for_matching_game(self, synthetic_run):
        corpus, ckpt, _ = synthetic_run
        refs = {g: corpus.per_game(g) for g in corpus.games}
        for gi, game in enumerate(corpus.games):
            bits = [0, 0, 0, 0]
            bits[gi] = 1
            segs = sample_blend_gm(ckpt, BlendWeights.binary(bits), 200,
                                   rng=np.random.default_rng([104, gi]))
            values = {g: tpkldiv(segs, refs[g]) for g in corpus.games}
            best = min(values, key=values.get)
            assert best == game, f"one-hot {bits}: {values}"
            others = [v for g, v in values.items() if g != game]
            assert values[game] < min(others)


class TestFullCorpusSoftCheck:
    def test_gmvae32_on_real_corpus(self):
        root = vglc_root_or_skip()
        if os.environ.get("BLENDWORKS_FULL") != "1":
            pytest.skip("full-corpus soft check is optional (hours of CPU): "
                        "set BLENDWORKS_FULL=1 to run it")
        corpus = load_corpus_from_config(
            os.path.join(CONFIG_DIR, "vglc_platformers.cfg"), root)
        config = default_config("gmvae", 4, 32, 7)
        ckpt = train_gmvae(corpus, config)
        classifier = train_game_classifier(corpus.segments, corpus.vocab,
                                           corpus.games, ForestHyper(seed=7))
        for gi, game in enumerate(corpus.games):
            bits = [0, 0, 0, 0]
            bits[gi] = 1
            segs = sample_blend_gm(ckpt, BlendWeights.binary(bits), 1000,
                                   rng=np.random.default_rng([7, gi]))
            p = predict_percentages(classifier, segment_features(segs, corpus.vocab))
            assert p[gi] >= 70.0
        from blendworks.agent import playability
        from blendworks.jumps import blend_jump

        presets = synthetic_jump_models(corpus.games)
        segs = sample_blend_gm(ckpt, BlendWeights.binary([1, 0, 0, 0]), 1000,
                               rng=np.random.default_rng([7, 99]))
        arc = derive_arc(blend_jump([presets[g] for g in corpus.games],
                                    (1, 0, 0, 0)))
        playable = 100.0 * np.mean([playability(s, corpus.vocab, [arc])
                                    for s in segs])
        assert 50.0 <= playable <= 95.0


class TestAgentOracle:
    def test_astar_equals_bfs_on_200_random_grids(self):
        rng = np.random.default_rng(2024)
        arcs_pool = [derive_arc(JumpModel(v, r, f, h, s)) for v, r, f, h, s in
                     [(1.0, 1.0, 1.0, 0, 1.0), (2.5, 0.5, 0.5, 1, 1.0),
                      (2.0, 0.4, 0.8, 2, 1.5), (1.5, 0.7, 0.3, 0, 0.6)]]
        for i in range(200):
            codes = rng.choice([PASSABLE, SOLID, HAZARD, CLIMBABLE],
                               size=(15, 16), p=[0.5, 0.32, 0.08, 0.10])
            grid = AffordanceGrid.from_array(codes)
            count = int(rng.integers(1, len(arcs_pool) + 1))
            arcs = [arcs_pool[int(j)] for j in rng.choice(len(arcs_pool),
                                                          size=count,
                                                          replace=False)]
            for direction in (LEFT_TO_RIGHT, BOTTOM_TO_TOP):
                assert astar(grid, arcs, direction).playable == \
                    bfs_reachable(grid, arcs, direction), \
                    f"grid {i} direction {direction}"


class TestLayoutAndDirectionalCriteria:
    def test_dungeon_connectivity_across_sizes_and_seeds(self):
        for n in range(1, 51):
            for seed in range(100):
                layout = gen_dungeon_layout(n, np.random.default_rng([n, seed]))
                assert len(layout.locations) == n
                assert layout.is_connected(), f"n={n} seed={seed}"
                assert layout.mirrored(), f"n={n} seed={seed}"

    def test_directional_verdicts_partition_all_256_pairs(self):
        labels = [((v >> 3) & 1, (v >> 2) & 1, (v >> 1) & 1, v & 1)
                  for v in range(16)]
        counts = {"exact": 0, "admissible-only": 0, "inadmissible": 0}
        for cond in labels:
            for pred in labels:
                counts[directional_match(cond, pred)] += 1
        assert sum(counts.values()) == 256
        assert counts["exact"] == 16
        # admissible supersets: for each cond, predictions keeping its 1-bits
        expected_admissible = sum(2 ** (4 - sum(c)) - 1 for c in labels)
        assert counts["admissible-only"] == expected_admissible


class TestForestOnRealCorpora:
    def test_platformer_classifier_accuracy(self):
        root = vglc_root_or_skip()
        corpus = load_corpus_from_config(
            os.path.join(CONFIG_DIR, "vglc_platformers.cfg"), root)
        clf = train_game_classifier(corpus.segments, corpus.vocab, corpus.games,
                                    ForestHyper(seed=5))
        assert clf.holdout_accuracy >= 0.90

    def test_dungeon_classifier_accuracy(self):
        root = vglc_root_or_skip()
        corpus = load_corpus_from_config(
            os.path.join(CONFIG_DIR, "vglc_dungeons.cfg"), root)
        clf = train_game_classifier(corpus.segments, corpus.vocab, corpus.games,
                                    ForestHyper(seed=5))
        assert clf.holdout_accuracy >= 0.90

    def test_directional_classifier_accuracy(self):
        root = vglc_root_or_skip()
        annotations = os.environ.get("BLENDWORKS_DIR_ANNOTATIONS")
        if not annotations:
            pytest.skip("directional annotations not present: set "
                        "BLENDWORKS_DIR_ANNOTATIONS to a sidecar TSV to run "
                        "the directional classifier criterion")
        from blendworks.corpus import load_annotations
        from blendworks.forest import train_direction_classifier

        corpus = load_corpus_from_config(
            os.path.join(CONFIG_DIR, "vglc_dungeons.cfg"), root)
        labels = load_annotations(annotations)
        segments = [seg.with_dir_label(labels[i])
                    for i, seg in enumerate(corpus.segments)]
        clf = train_direction_classifier(segments, corpus.vocab,
                                         ForestHyper(seed=5))
        assert clf.holdout_accuracy >= 0.90
