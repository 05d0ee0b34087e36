"""Jump-physics models: per-game parameter vectors, weighted blending,
frame-by-frame arc derivation, and impulse/gravity summary fitting.

Shipped per-game parameter files are approximate and user-editable; all
ground-truth testing uses synthetic parameters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

MAX_ARC_FRAMES = 1000


class AllZeroWeights(Exception):
    pass


class NonTerminating(Exception):
    pass


class DegenerateArc(Exception):
    pass


@dataclass(frozen=True)
class JumpModel:
    """Five-parameter jump summary, units of tiles and frames."""

    initial_velocity: float  # tiles/frame, upward
    rise_gravity: float  # tiles/frame^2 while ascending
    fall_gravity: float  # tiles/frame^2 while descending
    max_hold_frames: int  # frames of sustained initial velocity
    horizontal_speed: float  # tiles/frame

    def __post_init__(self):
        if self.initial_velocity <= 0:
            raise ValueError("initial velocity must be positive")
        if self.rise_gravity <= 0 or self.fall_gravity <= 0:
            raise ValueError("gravities must be positive")
        if self.max_hold_frames < 0:
            raise ValueError("hold frames must be non-negative")

    def as_vector(self) -> np.ndarray:
        return np.array([self.initial_velocity, self.rise_gravity, self.fall_gravity,
                         float(self.max_hold_frames), self.horizontal_speed])

    @classmethod
    def from_vector(cls, vec: Sequence[float]) -> "JumpModel":
        v = [float(x) for x in vec]
        return cls(v[0], v[1], v[2], int(round(v[3])), v[4])


@dataclass(frozen=True)
class JumpArc:
    """Per-frame integer (dx, dy) tile offsets from takeoff to landing height."""

    offsets: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.offsets and self.offsets[0][1] < 0:
            raise ValueError("first offset must not be below the origin")

    @property
    def frames(self) -> int:
        return len(self.offsets)

    @property
    def apex(self) -> int:
        return max((dy for _, dy in self.offsets), default=0)


@dataclass(frozen=True)
class ImpulseGravity:
    impulse: float
    gravity: float

    def __post_init__(self):
        if self.gravity <= 0:
            raise ValueError("gravity must be positive")


def blend_jump(models: Sequence[JumpModel], weights: Sequence[float]) -> JumpModel:
    """Weighted average of jump parameters.

    Weights are normalized to sum to 1 before combining, so a multi-hot
    blend stays inside the convex hull of the input jumps instead of
    stacking velocities.
    """
    w = np.asarray(weights, dtype=np.float64)
    if len(models) != w.shape[0]:
        raise ValueError("need one weight per model")
    total = w.sum()
    if total <= 0:
        raise AllZeroWeights("blend weights must not be all zero")
    w = w / total
    stacked = np.stack([m.as_vector() for m in models])
    return JumpModel.from_vector(w @ stacked)


def derive_arc(model: JumpModel) -> JumpArc:
    """Simulate the jump one frame at a time until it returns to takeoff height.

    Vertical velocity starts at the initial velocity and is held there for
    max_hold_frames frames; afterwards rise gravity drains it while
    ascending and fall gravity applies while descending. Horizontal
    position advances by the horizontal speed every frame. Positions are
    rounded to integer tile offsets.
    """
    x = 0.0
    y = 0.0
    vy = model.initial_velocity
    offsets: list[tuple[int, int]] = []
    for frame in range(1, MAX_ARC_FRAMES + 1):
        y += vy
        x += model.horizontal_speed
        if frame >= model.max_hold_frames:
            if vy > 0:
                vy -= model.rise_gravity
            else:
                vy -= model.fall_gravity
        dy = int(np.floor(y + 0.5))
        dx = int(np.floor(x + 0.5))
        if y <= 0.0:
            offsets.append((dx, max(dy, 0)))
            return JumpArc(tuple(offsets))
        offsets.append((dx, dy))
    raise NonTerminating(f"jump did not land within {MAX_ARC_FRAMES} frames")


def fit_impulse_gravity(arc: JumpArc) -> ImpulseGravity:
    """Least-squares fit of dy(t) = impulse*t - gravity*t^2/2 over the arc."""
    if arc.frames < 3:
        raise DegenerateArc("need at least 3 frames to fit")
    dys = np.array([dy for _, dy in arc.offsets], dtype=np.float64)
    if np.all(dys == dys[0]):
        raise DegenerateArc("flat arc")
    t = np.arange(1, arc.frames + 1, dtype=np.float64)
    design = np.stack([t, -0.5 * t * t], axis=1)
    (impulse, gravity), *_ = np.linalg.lstsq(design, dys, rcond=None)
    return ImpulseGravity(float(impulse), float(gravity))


def load_jump_params(path: str | Path) -> dict[str, JumpModel]:
    """Read a per-game jump parameter file (one record per game)."""
    raw = json.loads(Path(path).read_text())
    models = {}
    for game, rec in raw.items():
        if game.startswith("_"):
            continue
        models[game] = JumpModel(
            initial_velocity=float(rec["initial_velocity"]),
            rise_gravity=float(rec["rise_gravity"]),
            fall_gravity=float(rec["fall_gravity"]),
            max_hold_frames=int(rec["max_hold_frames"]),
            horizontal_speed=float(rec["horizontal_speed"]),
        )
    return models


def save_jump_params(models: dict[str, JumpModel], path: str | Path,
                     note: str | None = None) -> None:
    out: dict = {}
    if note:
        out["_note"] = note
    for game, m in models.items():
        out[game] = {
            "initial_velocity": m.initial_velocity,
            "rise_gravity": m.rise_gravity,
            "fall_gravity": m.fall_gravity,
            "max_hold_frames": m.max_hold_frames,
            "horizontal_speed": m.horizontal_speed,
        }
    Path(path).write_text(json.dumps(out, indent=2) + "\n")
