"""Blend evaluations: classifier score, playability, tile-pattern KL,
directional accuracy, and the experiment runner that sweeps weights and
emits report tables.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .agent import playability
from .blending import BlendWeights, enumerate_binary_weights, sample_blend
from .corpus import Segment
from .forest import ForestClassifier, segment_features
from .jumps import JumpModel, blend_jump, derive_arc
from .models import DIRECTIONAL_FAMILIES, ModelCheckpoint

EXACT = "exact"
ADMISSIBLE_ONLY = "admissible-only"
INADMISSIBLE = "inadmissible"

# fractional sweep defaults for a four-game blend
DEFAULT_FRACTIONAL = (
    (0.5, 0.3, 0.2, 0.0),
    (0.1, 0.1, 0.1, 0.7),
    (0.1, 0.6, 0.2, 0.1),
    (0.0, 0.2, 0.3, 0.5),
)


class BadLength(Exception):
    pass


class EmptySet(Exception):
    pass


@dataclass(frozen=True)
class BlendScore:
    score: float
    weights: BlendWeights
    percentages: tuple[float, ...]
    factor: float


def predict_percentages(clf: ForestClassifier, features: np.ndarray) -> np.ndarray:
    """Per-class percentage of argmax votes; sums to 100."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features[None, :]
    if features.shape[0] == 0:
        raise EmptySet("no segments to classify")
    picks = clf.predict_indices(features)
    counts = np.bincount(picks, minlength=len(clf.classes))
    return counts / features.shape[0] * 100.0


def blend_score(weights: BlendWeights | Sequence[float],
                percentages: Sequence[float]) -> BlendScore:
    """Squared gap between scaled weights and predicted percentages.

    Binary weights scale by 100 over the number of set bits; fractional
    weights scale by a flat 100. Zero means predictions match the blend.
    """
    if not isinstance(weights, BlendWeights):
        weights = BlendWeights.parse(",".join(str(v) for v in weights))
    p = tuple(float(v) for v in percentages)
    if len(p) != len(weights):
        raise BadLength(f"{len(p)} percentages for {len(weights)} weights")
    factor = 100.0 / weights.ones if weights.kind == "binary" else 100.0
    score = float(sum((w * factor - pi) ** 2 for w, pi in zip(weights.values, p)))
    return BlendScore(score, weights, p, factor)


def _pattern_counts(segments: Sequence[Segment], window: int) -> dict:
    counts: dict[tuple, int] = {}
    for seg in segments:
        arr = seg.grid.as_array()
        rows, cols = arr.shape
        for r in range(rows - window + 1):
            for c in range(cols - window + 1):
                key = tuple(arr[r : r + window, c : c + window].ravel())
                counts[key] = counts.get(key, 0) + 1
    return counts


def tpkldiv(gen_set: Sequence[Segment], ref_set: Sequence[Segment],
            windows: Sequence[int] = (2, 3, 4), eps: float = 1e-5) -> float:
    """Tile-pattern KL divergence averaged over window sizes.

    Empirical pattern distributions are taken over all square windows of
    each size; the reference distribution is smoothed with an eps-weighted
    uniform mixture over the union support before KL(gen || ref).
    """
    if not gen_set or not ref_set:
        raise EmptySet("both segment sets must be non-empty")
    values = []
    for window in windows:
        p_counts = _pattern_counts(gen_set, window)
        q_counts = _pattern_counts(ref_set, window)
        support = set(p_counts) | set(q_counts)
        p_total = sum(p_counts.values())
        q_total = sum(q_counts.values())
        uniform = 1.0 / len(support)
        kl = 0.0
        for key, count in p_counts.items():
            p = count / p_total
            q = (1.0 - eps) * (q_counts.get(key, 0) / q_total) + eps * uniform
            kl += p * np.log(p / q)
        values.append(kl)
    return float(np.mean(values))


def directional_match(cond: Sequence[int], pred: Sequence[int]) -> str:
    """Exact when labels agree; admissible when every required open side
    is open in the prediction; inadmissible otherwise."""
    cond_bits = tuple(int(b) for b in cond)
    pred_bits = tuple(int(b) for b in pred)
    if len(cond_bits) != 4 or len(pred_bits) != 4:
        raise BadLength("directional labels have four bits")
    if any(b not in (0, 1) for b in cond_bits + pred_bits):
        raise ValueError("directional labels are binary")
    if cond_bits == pred_bits:
        return EXACT
    if all(p >= c for c, p in zip(cond_bits, pred_bits)):
        return ADMISSIBLE_ONLY
    return INADMISSIBLE


@dataclass
class Table:
    columns: list[str]
    rows: list[list]

    def to_tsv(self) -> str:
        lines = ["\t".join(self.columns)]
        for row in self.rows:
            lines.append("\t".join(_fmt(v) for v in row))
        return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


@dataclass
class Report:
    model_name: str
    family: str
    games: list[str]
    seed: int
    config_note: str
    tables: dict[str, Table] = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "model_name": self.model_name,
            "family": self.family,
            "games": self.games,
            "seed": self.seed,
            "config_note": self.config_note,
            "tables": {name: {"columns": t.columns, "rows": t.rows}
                       for name, t in self.tables.items()},
        }
        return json.dumps(payload, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Report":
        payload = json.loads(text)
        report = cls(payload["model_name"], payload["family"], payload["games"],
                     payload["seed"], payload["config_note"])
        for name, t in payload["tables"].items():
            report.tables[name] = Table(t["columns"], t["rows"])
        return report

    def __eq__(self, other) -> bool:
        if not isinstance(other, Report):
            return NotImplemented
        return self.to_json() == other.to_json()

    def write(self, out_dir: str | Path) -> list[Path]:
        """One TSV per table plus a structured text document."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name, table in self.tables.items():
            path = out / f"{name}.tsv"
            path.write_text(table.to_tsv())
            written.append(path)
        doc = out / "report.json"
        doc.write_text(self.to_json() + "\n")
        written.append(doc)
        text = out / "report.txt"
        text.write_text(self.render_text())
        written.append(text)
        return written

    def render_text(self) -> str:
        lines = [f"model: {self.model_name} ({self.family})",
                 f"games: {', '.join(self.games)}",
                 f"seed: {self.seed}",
                 f"note: {self.config_note}", ""]
        for name, table in self.tables.items():
            lines.append(f"== {name} ==")
            widths = [max(len(str(c)), *(len(_fmt(r[i])) for r in table.rows)) if table.rows
                      else len(str(c)) for i, c in enumerate(table.columns)]
            lines.append("  ".join(str(c).ljust(w) for c, w in zip(table.columns, widths)))
            for row in table.rows:
                lines.append("  ".join(_fmt(v).ljust(w) for v, w in zip(row, widths)))
            lines.append("")
        return "\n".join(lines)


ALL_DIR_LABELS = tuple(
    ((v >> 3) & 1, (v >> 2) & 1, (v >> 1) & 1, v & 1) for v in range(1, 16)
)


@dataclass
class ExperimentConfig:
    n_samples: int = 100
    n_dir_samples: int = 10  # per (weight, directional label) pair
    seed: int = 0
    include_fractional: bool = True
    fractional: tuple[tuple[float, ...], ...] | None = None
    tpkldiv_windows: tuple[int, ...] = (2, 3, 4)
    tpkldiv_eps: float = 1e-5
    run_playability: bool = True
    run_tpkldiv: bool = True
    run_directional: bool = True


def experiment_weights(game_count: int, config: ExperimentConfig) -> list[BlendWeights]:
    weights = enumerate_binary_weights(game_count)
    if config.include_fractional:
        fractional = config.fractional
        if fractional is None and game_count == 4:
            fractional = DEFAULT_FRACTIONAL
        for values in fractional or ():
            weights.append(BlendWeights(tuple(values), "fractional"))
    return weights


def run_experiment(ckpt: ModelCheckpoint, classifier: ForestClassifier,
                   ref_segments: Mapping[str, Sequence[Segment]],
                   jump_models: Mapping[str, JumpModel],
                   config: ExperimentConfig,
                   dir_classifier: ForestClassifier | None = None,
                   model_name: str = "model") -> Report:
    """Sweep every blend weight: classifier percentages and score,
    playability under the blended jump, tile-pattern KL against every
    game, and (for directional families) match-rate statistics."""
    games = list(ckpt.games)
    weights = experiment_weights(len(games), config)
    directional = ckpt.family in DIRECTIONAL_FAMILIES

    report = Report(model_name, ckpt.family, games, config.seed,
                    f"n_samples={config.n_samples} argmax voting, ties to lowest "
                    f"class index; one-hot features")
    cls_rows, play_rows, tpk_rows, dir_rows = [], [], [], []
    for wi, w in enumerate(weights):
        rng = np.random.default_rng([config.seed, wi])
        if directional:
            segments = []
            for i in range(config.n_samples):
                label = ALL_DIR_LABELS[i % len(ALL_DIR_LABELS)]
                segments.extend(sample_blend(ckpt, w, 1, dir_label=label, rng=rng))
        else:
            segments = sample_blend(ckpt, w, config.n_samples, rng=rng)

        features = segment_features(segments, ckpt.vocab)
        percentages = predict_percentages(classifier, features)
        score = blend_score(w, percentages)
        cls_rows.append([w.label(), *[round(float(p), 2) for p in percentages],
                         round(score.score, 2)])

        if config.run_playability:
            blended_jump = blend_jump([jump_models[g] for g in games], w.values)
            arcs = [derive_arc(blended_jump)]
            playable = sum(playability(s, ckpt.vocab, arcs) for s in segments)
            play_rows.append([w.label(),
                              round(100.0 * playable / len(segments), 2)])

        if config.run_tpkldiv:
            row = [w.label()]
            for game in games:
                row.append(round(tpkldiv(segments, ref_segments[game],
                                         config.tpkldiv_windows,
                                         config.tpkldiv_eps), 4))
            tpk_rows.append(row)

        if directional and config.run_directional and dir_classifier is not None:
            verdicts = {EXACT: 0, ADMISSIBLE_ONLY: 0, INADMISSIBLE: 0}
            total = 0
            for label in ALL_DIR_LABELS:
                segs = sample_blend(ckpt, w, config.n_dir_samples,
                                    dir_label=label, rng=rng)
                feats = segment_features(segs, ckpt.vocab)
                for pred in dir_classifier.predict(feats):
                    verdicts[directional_match(label, pred)] += 1
                    total += 1
            exact = 100.0 * verdicts[EXACT] / total
            adm_only = 100.0 * verdicts[ADMISSIBLE_ONLY] / total
            dir_rows.append([w.label(), round(exact, 2),
                             round(exact + adm_only, 2),
                             round(100.0 * verdicts[INADMISSIBLE] / total, 2)])

    report.tables["classification"] = Table(
        ["weights", *games, "score"], cls_rows)
    if play_rows:
        report.tables["playability"] = Table(["weights", "playable_pct"], play_rows)
    if tpk_rows:
        report.tables["tpkldiv"] = Table(["weights", *games], tpk_rows)
    if dir_rows:
        report.tables["directional"] = Table(
            ["weights", "exact_pct", "admissible_pct", "inadmissible_pct"], dir_rows)
    return report
