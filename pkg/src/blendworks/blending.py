"""Blend-weight machinery: turn a length-k weight vector into a blended
latent distribution (mixture-prior families) or a decode-time label
(conditional families) and sample blended segments.

Weights are applied literally, without normalization: a multi-hot blend
sums the component means and adds squared-weighted variances. An
optional normalize flag divides by the weight sum first; it defaults
off.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Segment, TileGrid, render_level
from .models import DIRECTIONAL_FAMILIES, GM_FAMILIES, ModelCheckpoint
from .numerics import DiagGaussian

BLEND_GAME = "blend"


class AllZeroWeights(Exception):
    pass


class FamilyMismatch(Exception):
    pass


class MissingDirection(Exception):
    pass


@dataclass(frozen=True)
class BlendWeights:
    values: tuple[float, ...]
    kind: str = "fractional"  # "binary" or "fractional"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.kind not in ("binary", "fractional"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if any(v < 0 for v in self.values):
            raise ValueError("weights must be non-negative")
        if not any(v > 0 for v in self.values):
            raise AllZeroWeights("a blend of none of the games is undefined")
        if self.kind == "binary" and any(v not in (0.0, 1.0) for v in self.values):
            raise ValueError("binary weights must be 0 or 1")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def ones(self) -> int:
        return sum(1 for v in self.values if v != 0.0)

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=np.float64)

    @classmethod
    def binary(cls, bits: Sequence[int]) -> "BlendWeights":
        return cls(tuple(float(b) for b in bits), "binary")

    @classmethod
    def parse(cls, text: str) -> "BlendWeights":
        """Parse "0,0,1,0" or "0.5,0.3,0.2,0" into weights."""
        values = tuple(float(part) for part in text.split(","))
        kind = "binary" if all(v in (0.0, 1.0) for v in values) else "fractional"
        return cls(values, kind)

    def label(self) -> str:
        if self.kind == "binary":
            return "".join(str(int(v)) for v in self.values)
        return ",".join(f"{v:g}" for v in self.values)


def enumerate_binary_weights(game_count: int) -> list[BlendWeights]:
    """All non-zero binary weight vectors, in ascending binary order."""
    out = []
    for value in range(1, 2**game_count):
        bits = [(value >> (game_count - 1 - i)) & 1 for i in range(game_count)]
        out.append(BlendWeights.binary(bits))
    return out


def blend_components(components, weights: BlendWeights,
                     normalize: bool = False) -> DiagGaussian:
    """Blended latent Gaussian: mean is the weighted sum of component
    means, variance the squared-weighted sum of component variances."""
    w = weights.as_array()
    if w.shape[0] != components.count:
        raise ValueError(f"{w.shape[0]} weights for {components.count} components")
    if normalize:
        w = w / w.sum()
    mean = w @ components.means
    var = (w**2) @ components.variances
    return DiagGaussian(mean, var)


def _dir_array(dir_label: Sequence[int] | None, n: int) -> np.ndarray:
    bits = np.asarray(dir_label, dtype=np.float64).reshape(1, 4)
    return np.repeat(bits, n, axis=0)


def _segments_from_grids(grids: Sequence[TileGrid],
                         dir_label: Sequence[int] | None) -> list[Segment]:
    label = None if dir_label is None else tuple(int(b) for b in dir_label)
    return [Segment(g, BLEND_GAME, dir_label=label) for g in grids]


def sample_blend_gm(ckpt: ModelCheckpoint, weights: BlendWeights, n: int,
                    dir_label: Sequence[int] | None = None,
                    rng: np.random.Generator | None = None,
                    normalize: bool = False) -> list[Segment]:
    """Draw n latents from the blended component Gaussian and decode them."""
    from .models import decode_grids

    if ckpt.family not in GM_FAMILIES:
        raise FamilyMismatch(f"expected a mixture-prior checkpoint, got {ckpt.family}")
    if ckpt.family == "cgmvae" and dir_label is None:
        raise MissingDirection("cgmvae sampling needs a directional label")
    if len(weights) != ckpt.config.game_count:
        raise ValueError("weight length must match the game count")
    if n == 0:
        return []
    if rng is None:
        rng = np.random.default_rng(0)
    blended = blend_components(ckpt.components, weights, normalize=normalize)
    eps = rng.standard_normal((n, ckpt.latent_dim))
    latents = blended.mean + np.sqrt(blended.var) * eps
    cond = None if ckpt.family == "gmvae" else _dir_array(dir_label, n)
    grids = decode_grids(ckpt, latents, cond)
    return _segments_from_grids(grids, dir_label)


def sample_blend_conditional(ckpt: ModelCheckpoint, weights: BlendWeights, n: int,
                             dir_label: Sequence[int] | None = None,
                             rng: np.random.Generator | None = None) -> list[Segment]:
    """Draw n standard-normal latents and decode with the weights as the label."""
    from .models import decode_grids

    if ckpt.family in GM_FAMILIES:
        raise FamilyMismatch(f"expected a conditional checkpoint, got {ckpt.family}")
    if ckpt.family == "ccvae" and dir_label is None:
        raise MissingDirection("ccvae sampling needs a directional label")
    if len(weights) != ckpt.config.game_count:
        raise ValueError("weight length must match the game count")
    if n == 0:
        return []
    if rng is None:
        rng = np.random.default_rng(0)
    latents = rng.standard_normal((n, ckpt.latent_dim))
    label = np.repeat(weights.as_array()[None, :], n, axis=0)
    if ckpt.family == "ccvae":
        cond = np.concatenate([label, _dir_array(dir_label, n)], axis=1)
    else:
        cond = label
    grids = decode_grids(ckpt, latents, cond)
    return _segments_from_grids(grids, dir_label)


def sample_blend(ckpt: ModelCheckpoint, weights: BlendWeights, n: int,
                 dir_label: Sequence[int] | None = None,
                 rng: np.random.Generator | None = None) -> list[Segment]:
    """Family dispatch for sampling blended segments."""
    if ckpt.family in GM_FAMILIES:
        return sample_blend_gm(ckpt, weights, n, dir_label, rng)
    return sample_blend_conditional(ckpt, weights, n, dir_label, rng)


def write_segments(segments: Sequence[Segment], ckpt: ModelCheckpoint,
                   weights: BlendWeights, seed: int, out_dir: str | Path) -> list[Path]:
    """Write each segment in the corpus text format with a one-line
    metadata sidecar (weights, family, seed)."""
    import json

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta_line = json.dumps({
        "weights": list(weights.values),
        "kind": weights.kind,
        "family": ckpt.family,
        "seed": seed,
    }, sort_keys=True)
    written = []
    for i, seg in enumerate(segments):
        base = out / f"segment_{i:04d}"
        text_path = base.with_suffix(".txt")
        text_path.write_text(render_level(seg.grid, ckpt.vocab) + "\n")
        base.with_suffix(".meta").write_text(meta_line + "\n")
        written.append(text_path)
    return written
