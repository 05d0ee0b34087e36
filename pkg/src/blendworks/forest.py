"""Random forest over flattened one-hot segment features.

Bagged CART trees with Gini splits and square-root feature subsampling,
built directly on numpy so training is deterministic given a seed.
Hyperparameters are fixed rather than searched; the trained accuracy on
a seeded 80-20 split is recorded on the classifier.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import Segment, TileVocab, encode_onehot


class SingleClass(Exception):
    pass


@dataclass(frozen=True)
class ForestHyper:
    tree_count: int = 100
    max_depth: int | None = None
    min_leaf: int = 1
    test_fraction: float = 0.2
    seed: int = 0


@dataclass
class _Node:
    distribution: np.ndarray
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _gini_children(left_counts, left_n, right_counts, right_n):
    gini_l = 1.0 - np.sum((left_counts / left_n[:, None]) ** 2, axis=1)
    gini_r = 1.0 - np.sum((right_counts / right_n[:, None]) ** 2, axis=1)
    return (left_n * gini_l + right_n * gini_r) / (left_n + right_n)


def _best_split(features, y_onehot, idx, candidates, min_leaf):
    best = (np.inf, -1, 0.0)
    total = y_onehot[idx].sum(axis=0)
    m = len(idx)
    for f in candidates:
        vals = features[idx, f]
        order = np.argsort(vals, kind="stable")
        v_sorted = vals[order]
        boundaries = np.nonzero(v_sorted[1:] > v_sorted[:-1])[0]
        if boundaries.size == 0:
            continue
        cum = np.cumsum(y_onehot[idx][order], axis=0)
        left_counts = cum[boundaries]
        left_n = boundaries + 1.0
        right_counts = total - left_counts
        right_n = m - left_n
        ok = (left_n >= min_leaf) & (right_n >= min_leaf)
        if not ok.any():
            continue
        impurity = _gini_children(left_counts, left_n, right_counts, right_n)
        impurity[~ok] = np.inf
        pick = int(np.argmin(impurity))
        if impurity[pick] < best[0]:
            midpoint = (v_sorted[boundaries[pick]] + v_sorted[boundaries[pick] + 1]) / 2.0
            best = (float(impurity[pick]), int(f), float(midpoint))
    return best


class _Tree:
    def __init__(self, max_depth, min_leaf, max_features):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.root: _Node | None = None

    def fit(self, features, y, n_classes, rng):
        y_onehot = np.zeros((len(y), n_classes))
        y_onehot[np.arange(len(y)), y] = 1.0
        self.root = self._grow(features, y, y_onehot, np.arange(len(y)), 0, rng)
        return self

    def _grow(self, features, y, y_onehot, idx, depth, rng):
        counts = np.bincount(y[idx], minlength=y_onehot.shape[1]).astype(np.float64)
        node = _Node(distribution=counts / counts.sum())
        if (self.max_depth is not None and depth >= self.max_depth) \
                or len(idx) <= self.min_leaf or np.count_nonzero(counts) == 1:
            return node
        candidates = rng.permutation(features.shape[1])[: self.max_features]
        _, f, threshold = _best_split(features, y_onehot, idx, candidates, self.min_leaf)
        if f < 0:
            return node
        mask = features[idx, f] < threshold
        if not mask.any() or mask.all():
            return node
        node.feature = f
        node.threshold = threshold
        node.left = self._grow(features, y, y_onehot, idx[mask], depth + 1, rng)
        node.right = self._grow(features, y, y_onehot, idx[~mask], depth + 1, rng)
        return node

    def predict_proba(self, features):
        out = np.empty((features.shape[0], self.root.distribution.shape[0]))
        for i, row in enumerate(features):
            node = self.root
            while not node.is_leaf:
                node = node.left if row[node.feature] < node.threshold else node.right
            out[i] = node.distribution
        return out


@dataclass
class ForestClassifier:
    trees: list[_Tree]
    classes: tuple
    hyper: ForestHyper
    holdout_accuracy: float

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim == 1:
            features = features[None, :]
        votes = np.zeros((features.shape[0], len(self.classes)))
        for tree in self.trees:
            votes += tree.predict_proba(features)
        return votes / len(self.trees)

    def predict_indices(self, features: np.ndarray) -> np.ndarray:
        # ties break toward the lowest class index
        return np.argmax(self.predict_proba(features), axis=1)

    def predict(self, features: np.ndarray) -> list:
        return [self.classes[i] for i in self.predict_indices(features)]


def train_forest(features: np.ndarray, labels: Sequence, hyper: ForestHyper,
                 class_order: Sequence | None = None) -> ForestClassifier:
    """Fit a forest and record held-out accuracy on a seeded 80-20 split."""
    features = np.asarray(features, dtype=np.float64)
    if class_order is None:
        class_order = sorted(set(labels), key=str)
    classes = tuple(class_order)
    if len(classes) < 2:
        raise SingleClass("need at least two classes")
    index_of = {c: i for i, c in enumerate(classes)}
    y = np.array([index_of[v] for v in labels], dtype=np.int64)

    rng = np.random.default_rng(hyper.seed)
    n = features.shape[0]
    order = rng.permutation(n)
    n_test = max(1, int(round(n * hyper.test_fraction))) if hyper.test_fraction > 0 else 0
    test_idx = order[:n_test]
    train_idx = order[n_test:]
    max_features = max(1, int(round(np.sqrt(features.shape[1]))))

    trees = []
    for _ in range(hyper.tree_count):
        bag = train_idx[rng.integers(0, len(train_idx), len(train_idx))]
        tree = _Tree(hyper.max_depth, hyper.min_leaf, max_features)
        tree.fit(features[bag], y[bag], len(classes), rng)
        trees.append(tree)

    clf = ForestClassifier(trees, classes, hyper, 0.0)
    if n_test:
        predicted = clf.predict_indices(features[test_idx])
        clf.holdout_accuracy = float(np.mean(predicted == y[test_idx]))
    else:
        clf.holdout_accuracy = float("nan")
    return clf


def segment_features(segments: Sequence[Segment], vocab: TileVocab) -> np.ndarray:
    return np.stack([encode_onehot(seg, vocab) for seg in segments])


def train_game_classifier(segments: Sequence[Segment], vocab: TileVocab,
                          games: Sequence[str], hyper: ForestHyper) -> ForestClassifier:
    features = segment_features(segments, vocab)
    labels = [seg.game for seg in segments]
    return train_forest(features, labels, hyper, class_order=games)


def train_direction_classifier(segments: Sequence[Segment], vocab: TileVocab,
                               hyper: ForestHyper) -> ForestClassifier:
    """Each observed 4-bit open-side vector is treated as one class."""
    labeled = [seg for seg in segments if seg.dir_label is not None]
    if not labeled:
        raise SingleClass("no directional labels present")
    features = segment_features(labeled, vocab)
    labels = [seg.dir_label for seg in labeled]
    return train_forest(features, labels, hyper)
