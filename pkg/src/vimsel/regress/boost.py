"""Gradient boosted regression trees, exact greedy, least-squares leaves.

Fixed recipe: mean-initialized, depth-limited trees fit to residuals with a
constant shrinkage, no subsampling.  Split search runs through the kernel
subpackage (compiled when available); ties resolve to the lowest feature
index and then the lowest threshold, so fits are fully deterministic.
"""

from __future__ import annotations

import numpy as np

from ..core import ValidationError
from .. import _kernels


class _Tree:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int32)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.value = np.asarray(value, dtype=np.float64)

    def apply(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(x.shape[0])
        stack = [(0, np.ones(x.shape[0], dtype=bool))]
        while stack:
            node, rows = stack.pop()
            f = int(self.feature[node])
            if f < 0:
                out[rows] = self.value[node]
                continue
            goes_left = x[:, f] <= self.threshold[node]
            stack.append((int(self.left[node]), rows & goes_left))
            stack.append((int(self.right[node]), rows & ~goes_left))
        return out


class GbmModel:
    def __init__(self, base, shrinkage, trees, input_dim):
        self.base = float(base)
        self.shrinkage = float(shrinkage)
        self.trees = trees
        self.input_dim = int(input_dim)
        self.backend = _kernels.BACKEND

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ValidationError(
                f"predict expects shape (n, {self.input_dim}), got {x.shape}"
            )
        out = np.full(x.shape[0], self.base)
        for tree in self.trees:
            out += self.shrinkage * tree.apply(x)
        return out


def _grow_tree(x, x_t, sorted_idx, resid, max_depth, min_leaf, split_fn):
    """One regression tree on the current residuals; returns (tree, train_pred)."""
    n = x.shape[0]
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    train_pred = np.zeros(n)
    root_mask = np.ones(n, dtype=np.uint8)
    stack = [(new_node(), root_mask, 0)]
    while stack:
        node, mask, depth = stack.pop()
        rows = mask.view(np.bool_)
        m = int(rows.sum())
        node_sum = float(resid[rows].sum())
        j = -1
        if depth < max_depth and m >= max(2, 2 * min_leaf):
            j, thr, _ = split_fn(sorted_idx, x_t, resid, mask, m, node_sum, min_leaf)
        if j < 0:
            leaf_value = node_sum / m
            value[node] = leaf_value
            train_pred[rows] = leaf_value
            continue
        feature[node] = j
        threshold[node] = thr
        left_mask = (rows & (x[:, j] <= thr)).astype(np.uint8)
        right_mask = mask - left_mask
        left[node] = new_node()
        right[node] = new_node()
        stack.append((left[node], left_mask, depth + 1))
        stack.append((right[node], right_mask, depth + 1))
    return _Tree(feature, threshold, left, right, value), train_pred


def fit_gbm(
    x: np.ndarray,
    y: np.ndarray,
    rounds: int,
    depth: int,
    shrinkage: float,
    min_leaf: int,
    split_fn=None,
) -> GbmModel:
    """Boost `rounds` depth-limited trees against the running residuals."""
    if split_fn is None:
        split_fn = _kernels.best_split
    n, p = x.shape
    x_t = np.ascontiguousarray(x.T)
    sorted_idx = np.ascontiguousarray(np.argsort(x, axis=0).T.astype(np.int32))
    base = float(y.mean())
    pred = np.full(n, base)
    trees = []
    for _ in range(int(rounds)):
        resid = y - pred
        tree, train_pred = _grow_tree(x, x_t, sorted_idx, resid, depth, min_leaf, split_fn)
        trees.append(tree)
        pred = pred + shrinkage * train_pred
    return GbmModel(base, shrinkage, trees, p)
