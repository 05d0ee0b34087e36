import numpy as np
import pytest

from blendworks.blending import BlendWeights, FamilyMismatch
from blendworks.corpus import SEGMENT_COLS, SEGMENT_ROWS
from blendworks.layout import (
    DUNGEON,
    PLATFORMER,
    OPPOSITE,
    SIDE_OFFSETS,
    assemble,
    gen_dungeon_layout,
    gen_platformer_layout,
    save_whole_level,
)
from blendworks.models import build_model
from blendworks.synth import quick_model_config, synthetic_vocab


class TestDungeonLayout:
    def test_single_location_all_closed(self):
        layout = gen_dungeon_layout(1, np.random.default_rng(0))
        assert layout.locations == {(0, 0): [0, 0, 0, 0]}

    def test_five_rooms_connected_with_mirrored_doors(self):
        layout = gen_dungeon_layout(5, np.random.default_rng(1))
        assert len(layout.locations) == 5
        assert len(layout.edges()) >= 4
        assert layout.is_connected()
        assert layout.mirrored()

    def test_deterministic_under_seed(self):
        a = gen_dungeon_layout(12, np.random.default_rng(7))
        b = gen_dungeon_layout(12, np.random.default_rng(7))
        assert a.locations == b.locations
        assert a.order == b.order

    def test_connected_across_sizes_and_seeds(self):
        for n in (1, 2, 3, 8, 20):
            for seed in range(10):
                layout = gen_dungeon_layout(n, np.random.default_rng(seed))
                assert len(layout.locations) == n
                assert layout.is_connected()
                assert layout.mirrored()

    def test_walk_from_any_flag(self):
        layout = gen_dungeon_layout(15, np.random.default_rng(3), walk_from_any=True)
        assert len(layout.locations) == 15
        assert layout.is_connected()

    def test_spiral_backtrack(self):
        # enough rooms that the newest room is regularly boxed in
        layout = gen_dungeon_layout(60, np.random.default_rng(11))
        assert len(layout.locations) == 60
        assert layout.is_connected()


class TestPlatformerLayout:
    def test_single_location_has_one_exit(self):
        layout = gen_platformer_layout(1, np.random.default_rng(0))
        sides = layout.locations[(0, 0)]
        assert sum(sides) == 1
        assert sides[0] == 1 or sides[3] == 1  # up or right

    def test_two_rightward(self):
        # seed chosen so the first step goes right
        for seed in range(50):
            rng = np.random.default_rng(seed)
            layout = gen_platformer_layout(2, rng)
            if (1, 0) in layout.locations:
                assert layout.locations[(0, 0)][3] == 1  # first open right
                assert layout.locations[(1, 0)][2] == 1  # second open left
                assert sum(layout.locations[(1, 0)]) == 1
                return
        pytest.fail("no rightward first step in 50 seeds")

    def test_chain_is_a_path(self):
        layout = gen_platformer_layout(10, np.random.default_rng(5))
        assert len(layout.locations) == 10
        assert len(layout.edges()) == 9
        degree = {coord: 0 for coord in layout.locations}
        for edge in layout.edges():
            for c in edge:
                degree[c] += 1
        assert sorted(degree.values()) == [1, 1] + [2] * 8

    def test_progress_monotone(self):
        layout = gen_platformer_layout(12, np.random.default_rng(9))
        sums = [gx + gy for gx, gy in layout.order]
        assert sums == list(range(12))

    def test_only_up_or_right_steps(self):
        layout = gen_platformer_layout(8, np.random.default_rng(2))
        for prev, nxt in zip(layout.order, layout.order[1:]):
            delta = (nxt[0] - prev[0], nxt[1] - prev[1])
            assert delta in ((1, 0), (0, 1))


@pytest.fixture(scope="module")
def cgm_ckpt():
    vocab = synthetic_vocab(2)
    return build_model(quick_model_config("cgmvae", 2, seed=5, epochs=1),
                       vocab, vocab.games)


class TestAssemble:
    def test_single_room_equals_one_segment(self, cgm_ckpt):
        layout = gen_dungeon_layout(1, np.random.default_rng(0))
        level = assemble(layout, cgm_ckpt, BlendWeights.binary([1, 0]),
                         np.random.default_rng(1))
        assert (level.stitched.rows, level.stitched.cols) == (SEGMENT_ROWS, SEGMENT_COLS)
        assert level.stitched == level.segments[(0, 0)].grid

    def test_chain_geometry(self, cgm_ckpt):
        for seed in range(30):
            layout = gen_platformer_layout(4, np.random.default_rng(seed))
            if all(gy == 0 for _, gy in layout.order):
                level = assemble(layout, cgm_ckpt, BlendWeights((0.25, 0.75)),
                                 np.random.default_rng(2))
                assert (level.stitched.rows, level.stitched.cols) == (15, 64)
                return
        layout = gen_platformer_layout(4, np.random.default_rng(0))
        level = assemble(layout, cgm_ckpt, BlendWeights((0.25, 0.75)),
                         np.random.default_rng(2))
        assert level.stitched.rows % 15 == 0 and level.stitched.cols % 16 == 0

    def test_labels_match_open_sides(self, cgm_ckpt):
        layout = gen_dungeon_layout(6, np.random.default_rng(4))
        level = assemble(layout, cgm_ckpt, BlendWeights.binary([1, 1]),
                         np.random.default_rng(3))
        for coord, seg in level.segments.items():
            assert seg.dir_label == layout.open_sides(coord)

    def test_deterministic(self, cgm_ckpt):
        layout = gen_dungeon_layout(5, np.random.default_rng(8))
        a = assemble(layout, cgm_ckpt, BlendWeights.binary([1, 0]),
                     np.random.default_rng(6))
        b = assemble(layout, cgm_ckpt, BlendWeights.binary([1, 0]),
                     np.random.default_rng(6))
        assert a.stitched == b.stitched

    def test_family_checked(self):
        vocab = synthetic_vocab(2)
        gm = build_model(quick_model_config("gmvae", 2, seed=5, epochs=1),
                         vocab, vocab.games)
        layout = gen_dungeon_layout(2, np.random.default_rng(0))
        with pytest.raises(FamilyMismatch):
            assemble(layout, gm, BlendWeights.binary([1, 0]),
                     np.random.default_rng(0))

    def test_save_round_trip(self, cgm_ckpt, tmp_path):
        import json

        layout = gen_dungeon_layout(3, np.random.default_rng(2))
        level = assemble(layout, cgm_ckpt, BlendWeights.binary([0, 1]),
                         np.random.default_rng(5))
        text_path, sidecar_path = save_whole_level(level, cgm_ckpt,
                                                   tmp_path / "level")
        text = text_path.read_text()
        assert len(text.splitlines()) == level.stitched.rows
        sidecar = json.loads(sidecar_path.read_text())
        assert sidecar["kind"] == DUNGEON
        assert len(sidecar["locations"]) == 3
