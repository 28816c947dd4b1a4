"""Brute-force references for tiny graphs: exhaustive Ncut and dense eigensolves.

Deliberately naive. Everything is recomputed from a dense adjacency so no
code path is shared with the sparse engine being checked.
"""

from __future__ import annotations

import itertools

import numpy as np

from .graph import SparseGraph

MAX_EXHAUSTIVE_NODES = 22
MAX_DENSE_NODES = 256


def _dense(g: SparseGraph) -> np.ndarray:
    W = np.zeros((g.n_nodes, g.n_nodes))
    for i, j, w in zip(g.edges_src, g.edges_dst, g.edges_w):
        W[i, j] += w
        W[j, i] += w
    return W


def min_ncut_exhaustive(g: SparseGraph) -> tuple[np.ndarray, float]:
    """Minimum Ncut over all 2^(N-1) - 1 nontrivial bipartitions.

    Node 0 is pinned to side A so each bipartition is seen once. Ties keep
    the lexicographically smallest assignment (False < True, node 0 first).
    """
    N = g.n_nodes
    if N > MAX_EXHAUSTIVE_NODES:
        raise ValueError(f"refusing exhaustive search over {N} > {MAX_EXHAUSTIVE_NODES} nodes")
    if N < 2:
        raise ValueError("need at least two nodes")
    W = _dense(g)
    deg = W.sum(axis=1)
    total = deg.sum()

    # enumerate in chunks: rows are assignments of nodes 1..N-1, in lexicographic order
    n_free = N - 1
    best_val, best_code = np.inf, None
    chunk = 1 << min(n_free, 16)
    bits = 1 << np.arange(n_free - 1, -1, -1)  # node 1 is the most significant bit
    for start in range(1, 1 << n_free, chunk):
        codes = np.arange(start, min(start + chunk, 1 << n_free))
        S = np.zeros((len(codes), N))
        S[:, 1:] = (codes[:, None] & bits[None, :]) > 0
        vol_b = S @ deg
        # cut(A, B) = sum_{i in B} deg_i - sum_{i, j in B} w_ij
        cut = vol_b - ((S @ W) * S).sum(axis=1)
        vals = cut / (total - vol_b) + cut / vol_b
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_code = float(vals[i]), int(codes[i])
    assignment = np.zeros(N, dtype=bool)
    assignment[1:] = (best_code & bits) > 0
    return assignment, best_val


def dense_generalized_eig(g: SparseGraph) -> tuple[np.ndarray, np.ndarray]:
    """All eigenpairs of L x = lambda D x, ascending, with X' D X = I."""
    N = g.n_nodes
    if N > MAX_DENSE_NODES:
        raise ValueError(f"refusing dense solve over {N} > {MAX_DENSE_NODES} nodes")
    W = _dense(g)
    d = W.sum(axis=1)
    L = np.diag(d) - W
    s = 1.0 / np.sqrt(d)
    M = s[:, None] * L * s[None, :]
    evals, U = np.linalg.eigh(0.5 * (M + M.T))
    return evals, s[:, None] * U


def exhaustive_matching(iou: np.ndarray) -> float:
    """Maximum total IoU over all injective matchings of the smaller side."""
    n_gt, n_pred = iou.shape
    if n_gt <= n_pred:
        return max(sum(iou[r, c] for r, c in zip(range(n_gt), perm))
                   for perm in itertools.permutations(range(n_pred), n_gt))
    return max(sum(iou[r, c] for r, c in zip(perm, range(n_pred)))
               for perm in itertools.permutations(range(n_gt), n_pred))
