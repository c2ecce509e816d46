"""Regression trees, random forests and extremely randomized trees."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _tree_kernels as tk

__all__ = ["Tree", "ForestModel", "grow_regression_tree", "fit_forest"]

_SEED_MASK = 0xFFFFFFFFFFFFFFFF
_PERM_STREAM_OFFSET = 1 << 40  # keeps permutation streams disjoint from growth streams


def _seed64(seed: int) -> np.uint64:
    return np.uint64(int(seed) & _SEED_MASK)


@dataclass(frozen=True)
class Tree:
    """Flat-array regression tree; feature < 0 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0])
        tk.tree_predict(self.feature, self.threshold, self.left, self.right, self.value, X, out)
        return out

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def leaf_of(self, row: np.ndarray) -> int:
        node = 0
        while self.feature[node] >= 0:
            node = self.left[node] if row[self.feature[node]] <= self.threshold[node] else self.right[node]
        return int(node)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            value=np.asarray(d["value"], dtype=np.float64),
        )


def grow_regression_tree(
    X: np.ndarray,
    y: np.ndarray,
    mode: str = "rf",
    mtry: int | None = None,
    min_node: int = 5,
    seed: int = 0,
    sample: np.ndarray | None = None,
    max_depth: int | None = None,
    l2_leaf: float = 0.0,
) -> Tree:
    """Grow a single tree on the given sample (all rows when sample is None).

    rf mode scans every midpoint between sorted distinct values of each
    candidate feature; extra mode draws one uniform cut per candidate and
    keeps the best. Same seed, same tree.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    d = X.shape[1]
    if mode not in ("rf", "extra"):
        raise ValueError(f"unknown tree mode {mode!r}")
    if mtry is None:
        mtry = d
    if not (1 <= mtry <= d):
        raise ValueError(f"mtry must be in [1, {d}], got {mtry}")
    if sample is None:
        sample = np.arange(X.shape[0], dtype=np.int64)
    else:
        sample = np.ascontiguousarray(sample, dtype=np.int64)
    if len(sample) == 0:
        raise ValueError("empty sample")
    depth_cap = tk.NO_DEPTH_LIMIT if max_depth is None else int(max_depth)
    state = np.uint64(tk.mix_seed(_seed64(seed), 0))
    feat, thr, left, right, value, n_nodes, used, _ = tk.grow_tree(
        X, y, sample, mode == "extra", mtry, min_node, depth_cap, float(l2_leaf), state
    )
    return Tree(
        feature=feat[:n_nodes].copy(),
        threshold=thr[:n_nodes].copy(),
        left=left[:n_nodes].copy(),
        right=right[:n_nodes].copy(),
        value=value[:n_nodes].copy(),
    )


@dataclass(frozen=True)
class ForestModel:
    """Bagged trees predicting the arithmetic mean of per-tree predictions."""

    mode: str
    trees: tuple[Tree, ...]

    def per_tree_predictions(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.empty((len(self.trees), X.shape[0]))
        for k, tree in enumerate(self.trees):
            tk.tree_predict(tree.feature, tree.threshold, tree.left, tree.right, tree.value, X, out[k])
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        per_tree = self.per_tree_predictions(X)
        # ordered summation: result does not depend on any scheduling
        total = np.zeros(X.shape[0])
        for k in range(per_tree.shape[0]):
            total += per_tree[k]
        return total / len(self.trees)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        return cls(mode=d["mode"], trees=tuple(Tree.from_dict(t) for t in d["trees"]))


def fit_forest(
    X: np.ndarray,
    y: np.ndarray,
    mode: str,
    n_trees: int,
    mtry: int,
    min_node: int,
    bootstrap: bool,
    seed: int,
    track_oob: bool = False,
):
    """Fit a forest; with track_oob also return per-tree in-bag masks,
    per-tree used-feature masks and the permutation stream seeds."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, d = X.shape
    if not (1 <= mtry <= d):
        raise ValueError(f"mtry must be in [1, {d}], got {mtry}")
    if n_trees < 1:
        raise ValueError(f"n_trees must be >= 1, got {n_trees}")
    base = _seed64(seed)
    extra = mode == "extra"
    full_sample = np.arange(n, dtype=np.int64)
    all_inbag = np.ones(n, dtype=np.bool_)

    trees = []
    inbags = [] if track_oob else None
    useds = [] if track_oob else None
    perm_states = [] if track_oob else None
    for k in range(n_trees):
        state = np.uint64(tk.mix_seed(base, k))
        if bootstrap:
            sample, inbag, state = tk.draw_bootstrap(n, state)
            state = np.uint64(state)
        else:
            sample, inbag = full_sample, all_inbag
        feat, thr, left, right, value, n_nodes, used, _ = tk.grow_tree(
            X, y, sample, extra, mtry, min_node, tk.NO_DEPTH_LIMIT, 0.0, state
        )
        trees.append(
            Tree(
                feature=feat[:n_nodes].copy(),
                threshold=thr[:n_nodes].copy(),
                left=left[:n_nodes].copy(),
                right=right[:n_nodes].copy(),
                value=value[:n_nodes].copy(),
            )
        )
        if track_oob:
            inbags.append(inbag.copy())
            useds.append(used)
            perm_states.append(np.uint64(tk.mix_seed(base, _PERM_STREAM_OFFSET + k)))

    model = ForestModel(mode=mode, trees=tuple(trees))
    if track_oob:
        return model, inbags, useds, perm_states
    return model
