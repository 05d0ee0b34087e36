import math

import numpy as np
import pytest

from blendworks.blending import BlendWeights
from blendworks.corpus import Segment, TileGrid
from blendworks.evaluation import (
    ADMISSIBLE_ONLY,
    DEFAULT_FRACTIONAL,
    EXACT,
    INADMISSIBLE,
    BadLength,
    EmptySet,
    ExperimentConfig,
    Report,
    Table,
    blend_score,
    directional_match,
    experiment_weights,
    predict_percentages,
    run_experiment,
    tpkldiv,
)
from blendworks.forest import ForestHyper, train_direction_classifier, train_game_classifier
from blendworks.models import build_model
from blendworks.synth import (
    quick_model_config,
    synthetic_corpus,
    synthetic_jump_models,
)


class TestBlendScore:
    def test_single_game_row_value(self):
        s = blend_score(BlendWeights.binary([1, 0, 0, 0]), [94.6, 3.8, 1.6, 0])
        assert s.score == pytest.approx(46.16, abs=1e-9)
        assert s.factor == 100.0

    def test_near_perfect_row_value(self):
        s = blend_score(BlendWeights.binary([0, 0, 0, 1]), [0.1, 0, 0, 99.9])
        assert s.score == pytest.approx(0.02, abs=1e-12)

    def test_fractional_row_value(self):
        w = BlendWeights((0.5, 0.3, 0.2, 0.0), "fractional")
        s = blend_score(w, [74.4, 18.6, 7, 0])
        assert s.score == pytest.approx(894.32, abs=1e-9)
        assert s.factor == 100.0

    def test_multi_hot_factor(self):
        s = blend_score(BlendWeights.binary([1, 0, 1, 0]), [50.0, 0.0, 50.0, 0.0])
        assert s.factor == 50.0
        assert s.score == 0.0

    def test_zero_iff_percentages_match_scaled_weights(self):
        w = BlendWeights.binary([1, 1, 0, 0])
        assert blend_score(w, [50, 50, 0, 0]).score == 0.0
        assert blend_score(w, [49, 51, 0, 0]).score > 0.0

    def test_permutation_invariance(self):
        w = [0.5, 0.3, 0.2, 0.0]
        p = [60.0, 25.0, 10.0, 5.0]
        base = blend_score(BlendWeights(tuple(w)), p).score
        perm = [2, 0, 3, 1]
        s = blend_score(BlendWeights(tuple(w[i] for i in perm)),
                        [p[i] for i in perm]).score
        assert s == pytest.approx(base, rel=1e-12)

    def test_bad_length(self):
        with pytest.raises(BadLength):
            blend_score(BlendWeights.binary([1, 0]), [100.0])


def uniform_segment(tile_id, game="alpha"):
    return Segment(TileGrid(15, 16, tuple([tile_id] * 240)), game)


class TestTpkldiv:
    def test_identical_sets_near_zero(self):
        corpus = synthetic_corpus(num_games=2, per_game=10, seed=1)
        value = tpkldiv(corpus.segments, corpus.segments)
        assert 0.0 <= value < 1e-6

    def test_disjoint_single_pattern_sets_match_oracle(self):
        gen = [uniform_segment(0)]
        ref = [uniform_segment(1)]
        eps = 1e-5
        value = tpkldiv(gen, ref, windows=(2,), eps=eps)

        # explicit pattern-count oracle
        def count_patterns(seg):
            arr = seg.grid.as_array()
            counts = {}
            for r in range(arr.shape[0] - 1):
                for c in range(arr.shape[1] - 1):
                    key = tuple(arr[r : r + 2, c : c + 2].ravel())
                    counts[key] = counts.get(key, 0) + 1
            return counts

        p_counts = count_patterns(gen[0])
        q_counts = count_patterns(ref[0])
        support = set(p_counts) | set(q_counts)
        expected = 0.0
        for key, count in p_counts.items():
            p = count / sum(p_counts.values())
            q = (1 - eps) * q_counts.get(key, 0) / sum(q_counts.values()) \
                + eps / len(support)
            expected += p * math.log(p / q)
        assert value == pytest.approx(expected, rel=1e-12)
        assert value == pytest.approx(math.log(2.0 / eps), rel=1e-9)

    def test_nonnegative_and_window_average(self):
        a = synthetic_corpus(num_games=2, per_game=6, seed=2).per_game("alpha")
        b = synthetic_corpus(num_games=2, per_game=6, seed=3).per_game("beta")
        v = tpkldiv(a, b)
        assert v >= 0.0
        per_window = [tpkldiv(a, b, windows=(w,)) for w in (2, 3, 4)]
        assert v == pytest.approx(np.mean(per_window), rel=1e-12)

    def test_closer_style_scores_lower(self):
        corpus = synthetic_corpus(num_games=2, per_game=12, seed=4)
        alpha = corpus.per_game("alpha")
        beta = corpus.per_game("beta")
        more_alpha = synthetic_corpus(num_games=2, per_game=12, seed=5).per_game("alpha")
        assert tpkldiv(more_alpha, alpha) < tpkldiv(more_alpha, beta)

    def test_empty_set_rejected(self):
        with pytest.raises(EmptySet):
            tpkldiv([], [uniform_segment(0)])


class TestDirectionalMatch:
    def test_exact(self):
        assert directional_match((1, 1, 0, 0), (1, 1, 0, 0)) == EXACT

    def test_admissible_superset(self):
        assert directional_match((1, 0, 0, 0), (1, 1, 0, 0)) == ADMISSIBLE_ONLY

    def test_missing_required_bit(self):
        assert directional_match((1, 1, 0, 0), (1, 0, 0, 0)) == INADMISSIBLE

    def test_partition_over_all_pairs(self):
        labels = [((v >> 3) & 1, (v >> 2) & 1, (v >> 1) & 1, v & 1)
                  for v in range(16)]
        exact = admissible = inadmissible = 0
        for cond in labels:
            for pred in labels:
                verdict = directional_match(cond, pred)
                if verdict == EXACT:
                    exact += 1
                    assert all(p >= c for c, p in zip(cond, pred))
                elif verdict == ADMISSIBLE_ONLY:
                    admissible += 1
                else:
                    inadmissible += 1
        assert exact + admissible + inadmissible == 256
        assert exact == 16  # diagonal only


@pytest.fixture(scope="module")
def classifier():
    corpus = synthetic_corpus(num_games=2, per_game=15, seed=6)
    return train_game_classifier(corpus.segments, corpus.vocab, corpus.games,
                                 ForestHyper(tree_count=20, seed=7)), corpus


class TestPredictPercentages:

    def test_identical_segments_single_class(self, classifier):
        clf, corpus = classifier
        from blendworks.forest import segment_features

        seg = corpus.per_game("alpha")[0]
        feats = segment_features([seg] * 9, corpus.vocab)
        p = predict_percentages(clf, feats)
        assert p[0] == 100.0 and p[1] == 0.0

    def test_sum_and_permutation_invariance(self, classifier):
        clf, corpus = classifier
        from blendworks.forest import segment_features

        segs = corpus.segments[:20]
        feats = segment_features(segs, corpus.vocab)
        p = predict_percentages(clf, feats)
        assert p.sum() == pytest.approx(100.0)
        reversed_p = predict_percentages(clf, feats[::-1])
        np.testing.assert_allclose(p, reversed_p)


@pytest.fixture(scope="module")
def experiment_parts():
    corpus = synthetic_corpus(num_games=2, per_game=12, seed=8, with_dirs=True)
    clf = train_game_classifier(corpus.segments, corpus.vocab, corpus.games,
                                ForestHyper(tree_count=15, seed=9))
    dir_clf = train_direction_classifier(corpus.segments, corpus.vocab,
                                         ForestHyper(tree_count=15, seed=10))
    ckpt = build_model(quick_model_config("cgmvae", 2, seed=11, epochs=1),
                       corpus.vocab, corpus.games)
    refs = {g: corpus.per_game(g) for g in corpus.games}
    jumps = synthetic_jump_models(corpus.games)
    return ckpt, clf, dir_clf, refs, jumps


class TestExperiment:
    def test_weight_enumeration_binary_and_fractional(self):
        weights = experiment_weights(4, ExperimentConfig())
        assert len(weights) == 19
        binary = [w for w in weights if w.kind == "binary"]
        assert len(binary) == 15
        fractional = [tuple(w.values) for w in weights if w.kind == "fractional"]
        assert fractional == [tuple(v) for v in DEFAULT_FRACTIONAL]

    def test_runner_builds_all_tables(self, experiment_parts):
        ckpt, clf, dir_clf, refs, jumps = experiment_parts
        config = ExperimentConfig(n_samples=8, n_dir_samples=2, seed=1,
                                  fractional=((0.5, 0.5),))
        report = run_experiment(ckpt, clf, refs, jumps, config,
                                dir_classifier=dir_clf, model_name="toy")
        assert set(report.tables) == {"classification", "playability",
                                      "tpkldiv", "directional"}
        assert len(report.tables["classification"].rows) == 4  # 3 binary + 1 frac
        for row in report.tables["playability"].rows:
            assert 0.0 <= row[1] <= 100.0
        for row in report.tables["directional"].rows:
            assert row[2] + row[3] == pytest.approx(100.0, abs=0.01)
            assert row[1] <= row[2]

    def test_report_round_trip_and_files(self, experiment_parts, tmp_path):
        ckpt, clf, dir_clf, refs, jumps = experiment_parts
        config = ExperimentConfig(n_samples=5, seed=2, include_fractional=False,
                                  run_directional=False)
        report = run_experiment(ckpt, clf, refs, jumps, config)
        again = Report.from_json(report.to_json())
        assert again == report
        paths = report.write(tmp_path)
        assert (tmp_path / "classification.tsv").exists()
        tsv = (tmp_path / "classification.tsv").read_text()
        assert tsv.splitlines()[0] == "weights\talpha\tbeta\tscore"
        assert (tmp_path / "report.txt").read_text().startswith("model:")

    def test_determinism(self, experiment_parts):
        ckpt, clf, dir_clf, refs, jumps = experiment_parts
        config = ExperimentConfig(n_samples=5, seed=3, include_fractional=False,
                                  run_directional=False, run_playability=False,
                                  run_tpkldiv=False)
        a = run_experiment(ckpt, clf, refs, jumps, config)
        b = run_experiment(ckpt, clf, refs, jumps, config)
        assert a == b
