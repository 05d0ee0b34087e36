import numpy as np
import pytest

from blendworks.blending import (
    AllZeroWeights,
    BlendWeights,
    FamilyMismatch,
    MissingDirection,
    blend_components,
    enumerate_binary_weights,
    sample_blend_conditional,
    sample_blend_gm,
    write_segments,
)
from blendworks.models import ComponentSet, build_model
from blendworks.synth import quick_model_config, synthetic_corpus, synthetic_vocab


@pytest.fixture
def components():
    rng = np.random.default_rng(0)
    means = rng.normal(size=(4, 6))
    variances = np.exp(rng.normal(size=(4, 6)))
    return ComponentSet(means, variances)


class TestBlendWeights:
    def test_all_zero_rejected(self):
        with pytest.raises(AllZeroWeights):
            BlendWeights((0.0, 0.0, 0.0, 0.0))

    def test_binary_validation(self):
        with pytest.raises(ValueError):
            BlendWeights((0.5, 0.5), "binary")

    def test_parse(self):
        w = BlendWeights.parse("0,0,0,1")
        assert w.kind == "binary" and w.values == (0.0, 0.0, 0.0, 1.0)
        f = BlendWeights.parse("0.5,0.3,0.2,0")
        assert f.kind == "fractional"
        assert f.ones == 3

    def test_enumeration_is_fifteen_rows(self):
        weights = enumerate_binary_weights(4)
        assert len(weights) == 15
        assert weights[0].values == (0.0, 0.0, 0.0, 1.0)
        assert weights[-1].values == (1.0, 1.0, 1.0, 1.0)
        assert len({w.values for w in weights}) == 15


class TestBlendComponents:
    def test_one_hot_selects_component(self, components):
        blended = blend_components(components, BlendWeights.binary([0, 0, 0, 1]))
        np.testing.assert_array_equal(blended.mean, components.means[3])
        np.testing.assert_array_equal(blended.var, components.variances[3])

    def test_multi_hot_sums(self, components):
        blended = blend_components(components, BlendWeights.binary([1, 1, 0, 0]))
        np.testing.assert_allclose(blended.mean,
                                   components.means[0] + components.means[1])
        np.testing.assert_allclose(blended.var,
                                   components.variances[0] + components.variances[1])

    def test_fractional_squares_variance_weights(self, components):
        w = BlendWeights((0.5, 0.3, 0.2, 0.0))
        blended = blend_components(components, w)
        expect_mean = (0.5 * components.means[0] + 0.3 * components.means[1]
                       + 0.2 * components.means[2])
        expect_var = (0.25 * components.variances[0] + 0.09 * components.variances[1]
                      + 0.04 * components.variances[2])
        np.testing.assert_allclose(blended.mean, expect_mean)
        np.testing.assert_allclose(blended.var, expect_var)

    def test_homogeneity_in_means(self, components):
        w = BlendWeights((0.4, 0.1, 0.3, 0.2))
        scaled = ComponentSet(components.means * 3.0, components.variances)
        a = blend_components(scaled, w).mean
        b = blend_components(components, w).mean * 3.0
        np.testing.assert_allclose(a, b, rtol=1e-12)

    def test_normalize_flag(self, components):
        w = BlendWeights.binary([1, 1, 0, 0])
        blended = blend_components(components, w, normalize=True)
        np.testing.assert_allclose(
            blended.mean, 0.5 * (components.means[0] + components.means[1]))


@pytest.fixture(scope="module")
def gm_ckpt():
    vocab = synthetic_vocab(2)
    return build_model(quick_model_config("gmvae", 2, seed=3, epochs=1),
                       vocab, vocab.games)


@pytest.fixture(scope="module")
def cvae_ckpt():
    vocab = synthetic_vocab(2)
    return build_model(quick_model_config("cvae", 2, seed=3, epochs=1),
                       vocab, vocab.games)


class TestSampling:
    def test_zero_count_empty(self, gm_ckpt, cvae_ckpt):
        w = BlendWeights.binary([1, 0])
        assert sample_blend_gm(gm_ckpt, w, 0) == []
        assert sample_blend_conditional(cvae_ckpt, w, 0) == []

    def test_deterministic_under_seed(self, gm_ckpt):
        w = BlendWeights.binary([1, 1])
        a = sample_blend_gm(gm_ckpt, w, 4, rng=np.random.default_rng(5))
        b = sample_blend_gm(gm_ckpt, w, 4, rng=np.random.default_rng(5))
        assert [s.grid for s in a] == [s.grid for s in b]

    def test_family_mismatch(self, gm_ckpt, cvae_ckpt):
        w = BlendWeights.binary([1, 0])
        with pytest.raises(FamilyMismatch):
            sample_blend_gm(cvae_ckpt, w, 1)
        with pytest.raises(FamilyMismatch):
            sample_blend_conditional(gm_ckpt, w, 1)

    def test_directional_family_needs_direction(self):
        vocab = synthetic_vocab(2)
        cgm = build_model(quick_model_config("cgmvae", 2, seed=3, epochs=1),
                          vocab, vocab.games)
        with pytest.raises(MissingDirection):
            sample_blend_gm(cgm, BlendWeights.binary([1, 0]), 1)
        ccv = build_model(quick_model_config("ccvae", 2, seed=3, epochs=1),
                          vocab, vocab.games)
        with pytest.raises(MissingDirection):
            sample_blend_conditional(ccv, BlendWeights.binary([1, 0]), 1)

    def test_directional_sampling_carries_label(self):
        vocab = synthetic_vocab(2)
        cgm = build_model(quick_model_config("cgmvae", 2, seed=3, epochs=1),
                          vocab, vocab.games)
        segs = sample_blend_gm(cgm, BlendWeights.binary([1, 0]), 2,
                               dir_label=(0, 0, 0, 1), rng=np.random.default_rng(1))
        assert all(s.dir_label == (0, 0, 0, 1) for s in segs)

    def test_weight_length_checked(self, gm_ckpt):
        with pytest.raises(ValueError):
            sample_blend_gm(gm_ckpt, BlendWeights.binary([1, 0, 0]), 1)

    def test_write_segments_sidecar(self, gm_ckpt, tmp_path):
        w = BlendWeights.binary([0, 1])
        segs = sample_blend_gm(gm_ckpt, w, 2, rng=np.random.default_rng(9))
        paths = write_segments(segs, gm_ckpt, w, seed=9, out_dir=tmp_path)
        assert len(paths) == 2
        meta = (tmp_path / "segment_0000.meta").read_text()
        assert '"family": "gmvae"' in meta and '"seed": 9' in meta
        text = paths[0].read_text()
        assert len(text.splitlines()) == 15


class TestSampledDistribution:
    def test_one_hot_weight_matches_component_distribution(self, gm_ckpt):
        # sampling with a one-hot weight draws from exactly that component
        comp = gm_ckpt.components.component(1)
        w = BlendWeights.binary([0, 1])
        rng = np.random.default_rng(11)
        eps = np.random.default_rng(11).standard_normal((3, gm_ckpt.latent_dim))
        expected = comp.mean + np.sqrt(comp.var) * eps
        from blendworks.models import decode_grids

        direct = decode_grids(gm_ckpt, expected)
        sampled = sample_blend_gm(gm_ckpt, w, 3, rng=rng)
        assert [s.grid for s in sampled] == direct
