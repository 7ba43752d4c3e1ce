"""NumPy fallback for the exact-greedy split scan.

Matches the compiled kernel operation for operation (same summation order,
same first-win tie handling) so both backends pick identical splits.
"""

from __future__ import annotations

import numpy as np


def best_split(sorted_idx, x_t, resid, mask, m, node_sum, min_leaf):
    """Best variance-reduction split over all features for one tree node.

    sorted_idx : (p, n) int32, row j = row indices sorted by feature j
    x_t        : (p, n) float64, transposed design
    resid      : (n,) float64 current residuals
    mask       : (n,) uint8 node membership
    m          : in-node count, node_sum : in-node residual sum
    Returns (feature, threshold, gain); feature is -1 when no split helps.
    """
    if m < 2 * min_leaf or m < 2:
        return (-1, 0.0, 0.0)
    p = sorted_idx.shape[0]
    in_node = mask.astype(bool, copy=False)
    keep = in_node[sorted_idx]
    order = sorted_idx[keep].reshape(p, m)
    vals = np.take_along_axis(x_t, order, axis=1)
    left_sum = np.cumsum(resid[order], axis=1)[:, :-1]
    count = np.arange(1, m, dtype=np.float64)
    right_sum = node_sum - left_sum
    base = node_sum * node_sum / m
    gains = left_sum * left_sum / count + right_sum * right_sum / (m - count) - base
    valid = (vals[:, 1:] > vals[:, :-1]) & (count >= min_leaf) & ((m - count) >= min_leaf)
    gains = np.where(valid, gains, -np.inf)
    flat = int(np.argmax(gains))
    j, pos = divmod(flat, m - 1)
    gain = float(gains[j, pos])
    if not gain > 0.0:
        return (-1, 0.0, 0.0)
    threshold = 0.5 * (vals[j, pos] + vals[j, pos + 1])
    return (int(j), float(threshold), gain)
