"""HTTP service exposing sampling, layout assembly and playability.

The session is immutable after load; every request carries an explicit
client seed so responses are reproducible and bookmarkable. Training is
not exposed over HTTP.
"""

from __future__ import annotations

import colorsys
import json
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Mapping

import numpy as np

from .agent import path_results
from .blending import AllZeroWeights, BlendWeights, FamilyMismatch, MissingDirection, sample_blend
from .corpus import SEGMENT_COLS, SEGMENT_ROWS, TileGrid, TileVocab
from .forest import ForestClassifier, segment_features
from .jumps import JumpModel, blend_jump, derive_arc
from .layout import DUNGEON, PLATFORMER, assemble, gen_dungeon_layout, gen_platformer_layout
from .models import DIRECTIONAL_FAMILIES, ModelCheckpoint


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


@dataclass
class ApiSession:
    checkpoints: dict[str, ModelCheckpoint]
    classifier: ForestClassifier | None = None
    jump_models: Mapping[str, JumpModel] | None = None

    def __post_init__(self):
        if not self.checkpoints:
            raise ValueError("need at least one checkpoint")
        configs = [c.vocab.to_config() for c in self.checkpoints.values()]
        if any(cfg != configs[0] for cfg in configs):
            raise ValueError("all checkpoints must share one vocabulary")
        self.vocab: TileVocab = next(iter(self.checkpoints.values())).vocab

    def model(self, model_id: str) -> ModelCheckpoint:
        if model_id not in self.checkpoints:
            raise ApiError(404, f"unknown model {model_id!r}")
        return self.checkpoints[model_id]


def _game_palette(vocab: TileVocab) -> dict[int, str]:
    """Deterministic per-game hue, shaded by affordance."""
    games = vocab.games
    colors = {}
    shades = {"passable": (0.12, 0.97), "solid": (0.65, 0.45),
              "hazard": (0.95, 0.85), "climbable": (0.55, 0.70)}
    for info in vocab:
        hue = (games.index(info.game) / max(1, len(games))) % 1.0
        sat, val = shades[info.affordance]
        r, g, b = colorsys.hsv_to_rgb(hue, sat, val)
        colors[info.tile_id] = "#{:02x}{:02x}{:02x}".format(
            int(r * 255), int(g * 255), int(b * 255))
    return colors


def _parse_weights(payload: dict, game_count: int) -> BlendWeights:
    raw = payload.get("weights")
    if not isinstance(raw, list) or len(raw) != game_count:
        raise ApiError(400, f"weights must be a list of {game_count} numbers")
    try:
        return BlendWeights.parse(",".join(str(float(v)) for v in raw))
    except AllZeroWeights as exc:
        raise ApiError(400, str(exc)) from exc
    except (TypeError, ValueError) as exc:
        raise ApiError(400, f"malformed weights: {exc}") from exc


def _parse_dir(payload: dict):
    bits = payload.get("dir")
    if bits is None:
        return None
    if not isinstance(bits, list) or len(bits) != 4 \
            or any(int(b) not in (0, 1) for b in bits):
        raise ApiError(400, "dir must be four 0/1 bits")
    return tuple(int(b) for b in bits)


def _grid_payload(grid: TileGrid) -> list[list[int]]:
    return [list(grid.row(r)) for r in range(grid.rows)]


def _grid_from_payload(rows) -> TileGrid:
    if not isinstance(rows, list) or len(rows) != SEGMENT_ROWS \
            or any(not isinstance(r, list) or len(r) != SEGMENT_COLS for r in rows):
        raise ApiError(400, f"grid must be {SEGMENT_ROWS}x{SEGMENT_COLS} tile ids")
    return TileGrid(SEGMENT_ROWS, SEGMENT_COLS,
                    tuple(int(v) for r in rows for v in r))


def handle_models(session: ApiSession) -> dict:
    models = []
    for model_id, ckpt in sorted(session.checkpoints.items()):
        models.append({
            "id": model_id,
            "family": ckpt.family,
            "game_count": ckpt.config.game_count,
            "latent_dim": ckpt.latent_dim,
            "games": list(ckpt.games),
        })
    return {"models": models}


def handle_vocab(session: ApiSession) -> dict:
    palette = _game_palette(session.vocab)
    tiles = []
    for info in session.vocab:
        tiles.append({
            "tile_id": info.tile_id,
            "game": info.game,
            "char": info.char,
            "affordance": info.affordance,
            "color": palette[info.tile_id],
        })
    return {"tiles": tiles, "games": list(session.vocab.games)}


def handle_sample(session: ApiSession, payload: dict) -> dict:
    ckpt = session.model(str(payload.get("model")))
    weights = _parse_weights(payload, ckpt.config.game_count)
    count = payload.get("count", 1)
    if not isinstance(count, int) or count < 0:
        raise ApiError(400, "count must be a non-negative integer")
    dir_label = _parse_dir(payload)
    seed = int(payload.get("seed", 0))
    rng = np.random.default_rng(seed)
    try:
        segments = sample_blend(ckpt, weights, count, dir_label=dir_label, rng=rng)
    except (FamilyMismatch, MissingDirection) as exc:
        raise ApiError(422, str(exc)) from exc
    out = []
    for seg in segments:
        entry: dict = {"grid": _grid_payload(seg.grid)}
        if session.classifier is not None:
            probs = session.classifier.predict_proba(
                segment_features([seg], ckpt.vocab))[0]
            entry["percentages"] = {
                str(cls): round(float(p) * 100.0, 2)
                for cls, p in zip(session.classifier.classes, probs)
            }
        else:
            entry["percentages"] = None
        out.append(entry)
    return {"segments": out, "weights": list(weights.values), "seed": seed,
            "model": str(payload.get("model"))}


def _blended_arcs(session: ApiSession, ckpt_games, weights: BlendWeights):
    if session.jump_models is None:
        return None
    models = [session.jump_models[g] for g in ckpt_games]
    return [derive_arc(blend_jump(models, weights.values))]


def handle_layout(session: ApiSession, payload: dict) -> dict:
    ckpt = session.model(str(payload.get("model")))
    weights = _parse_weights(payload, ckpt.config.game_count)
    kind = payload.get("kind", DUNGEON)
    if kind not in (DUNGEON, PLATFORMER):
        raise ApiError(400, f"kind must be {DUNGEON!r} or {PLATFORMER!r}")
    n = payload.get("n", 4)
    if not isinstance(n, int) or n < 1:
        raise ApiError(400, "n must be a positive integer")
    seed = int(payload.get("seed", 0))
    rng = np.random.default_rng(seed)
    if ckpt.family not in DIRECTIONAL_FAMILIES:
        raise ApiError(422, f"layout assembly needs a directional family, "
                            f"got {ckpt.family}")
    layout = gen_dungeon_layout(n, rng) if kind == DUNGEON \
        else gen_platformer_layout(n, rng)
    level = assemble(layout, ckpt, weights, rng)
    arcs = _blended_arcs(session, ckpt.games, weights)
    locations = []
    for coord in layout.order:
        seg = level.segments[coord]
        playable = None
        if arcs is not None:
            results = path_results(seg, ckpt.vocab, arcs)
            playable = any(r.playable for r in results.values())
        locations.append({
            "coord": list(coord),
            "open_sides": list(layout.open_sides(coord)),
            "grid": _grid_payload(seg.grid),
            "playable": playable,
        })
    return {
        "kind": kind,
        "grid": _grid_payload(level.stitched),
        "locations": locations,
        "seed": seed,
    }


def handle_playability(session: ApiSession, payload: dict) -> dict:
    grid = _grid_from_payload(payload.get("grid"))
    vocab = session.vocab
    for tile in grid.cells:
        try:
            vocab.info(tile)
        except KeyError:
            raise ApiError(400, f"unknown tile id {tile}")
    games = vocab.games
    weights = _parse_weights(payload, len(games))
    if session.jump_models is None:
        raise ApiError(422, "no jump models loaded")
    arcs = _blended_arcs(session, games, weights)
    results = path_results(grid, vocab, arcs)
    verdicts = {}
    for direction, result in results.items():
        verdicts[direction] = {
            "playable": result.playable,
            "path": [[r, c, action] for r, c, action in result.path]
            if result.path else None,
        }
    return {"directions": verdicts,
            "playable": any(r.playable for r in results.values())}


def make_server(session: ApiSession, port: int = 0,
                host: str = "127.0.0.1") -> ThreadingHTTPServer:
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):  # tests and demos stay quiet
            pass

        def _send(self, status: int, payload: dict):
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.end_headers()

        def do_GET(self):
            try:
                if self.path == "/models":
                    self._send(200, handle_models(session))
                elif self.path == "/vocab":
                    self._send(200, handle_vocab(session))
                else:
                    self._send(404, {"error": f"no route {self.path}"})
            except ApiError as exc:
                self._send(exc.status, {"error": exc.message})

        def do_POST(self):
            try:
                length = int(self.headers.get("Content-Length", "0"))
                try:
                    payload = json.loads(self.rfile.read(length) or b"{}")
                except json.JSONDecodeError:
                    raise ApiError(400, "request body is not valid JSON")
                if not isinstance(payload, dict):
                    raise ApiError(400, "request body must be a JSON object")
                if self.path == "/sample":
                    self._send(200, handle_sample(session, payload))
                elif self.path == "/layout":
                    self._send(200, handle_layout(session, payload))
                elif self.path == "/playability":
                    self._send(200, handle_playability(session, payload))
                else:
                    self._send(404, {"error": f"no route {self.path}"})
            except ApiError as exc:
                self._send(exc.status, {"error": exc.message})

    return ThreadingHTTPServer((host, port), Handler)
