"""The pixel grid plus one extra node per color, as a sparse weighted graph.

Node layout: pixel nodes first (row-major over the pixels present), then one
node per cluster id in ascending order. Neighboring pixels (4-connectivity)
are joined with weight ``mu``; every pixel is joined to its color node with
weight 1. Edge count is linear in the number of pixels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .features import QuantizedImage


@dataclass(frozen=True, eq=False)
class SparseGraph:
    adjacency: sp.csr_matrix
    n_grid: int
    n_extra: int
    mu: float
    # each undirected edge once, i < j
    edges_src: np.ndarray
    edges_dst: np.ndarray
    edges_w: np.ndarray
    degree: np.ndarray = field(init=False)
    total_volume: float = field(init=False)
    # flat raster index of every pixel node; None for non-image graphs
    pixel_index: np.ndarray | None = None
    shape: tuple[int, int] | None = None

    def __post_init__(self):
        deg = np.asarray(self.adjacency.sum(axis=1)).ravel()
        object.__setattr__(self, "degree", deg)
        object.__setattr__(self, "total_volume", float(deg.sum()))

    @property
    def n_nodes(self) -> int:
        return self.n_grid + self.n_extra

    @property
    def n_edges(self) -> int:
        return len(self.edges_w)

    @classmethod
    def from_edges(cls, n_nodes: int, src, dst, weights=None) -> "SparseGraph":
        """Generic undirected graph; no pixel/color structure attached."""
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        w = np.ones(len(src)) if weights is None else np.asarray(weights, dtype=np.float64)
        if np.any(src == dst):
            raise ValueError("self-loops are not allowed")
        if np.any(w <= 0):
            raise ValueError("edge weights must be positive")
        lo, hi = np.minimum(src, dst), np.maximum(src, dst)
        pairs = lo * n_nodes + hi
        if len(np.unique(pairs)) != len(pairs):
            raise ValueError("duplicate edges")
        return cls(_symmetric_csr(n_nodes, lo, hi, w), n_nodes, 0, float("nan"), lo, hi, w)

    def dense_laplacian(self) -> np.ndarray:
        A = self.adjacency.toarray()
        return np.diag(self.degree) - A


def _symmetric_csr(n: int, src, dst, w) -> sp.csr_matrix:
    rows = np.concatenate([src, dst])
    cols = np.concatenate([dst, src])
    vals = np.concatenate([w, w])
    A = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    A.sort_indices()
    return A


def grid_pairs(mask: np.ndarray):
    """Flat raster indices of 4-neighbor pixel pairs with both ends in `mask`."""
    h, w = mask.shape
    flat = np.arange(h * w).reshape(h, w)
    horiz = mask[:, :-1] & mask[:, 1:]
    vert = mask[:-1, :] & mask[1:, :]
    a = np.concatenate([flat[:, :-1][horiz], flat[:-1, :][vert]])
    b = np.concatenate([flat[:, 1:][horiz], flat[1:, :][vert]])
    return a, b


def build_graph(qi: QuantizedImage, mu: float) -> SparseGraph:
    """Assemble the grid-plus-color-nodes graph for the pixels of `qi`."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    mask = qi.mask
    h, w = mask.shape
    pix = np.flatnonzero(mask.ravel())
    n = len(pix)
    node_of = np.full(h * w, -1, dtype=np.int64)
    node_of[pix] = np.arange(n)

    ga, gb = grid_pairs(mask)
    grid_src, grid_dst = node_of[ga], node_of[gb]
    color_src = np.arange(n, dtype=np.int64)
    color_dst = n + qi.labels.ravel()[pix]

    src = np.concatenate([grid_src, color_src])
    dst = np.concatenate([grid_dst, color_dst])
    wts = np.concatenate([np.full(len(grid_src), float(mu)), np.ones(n)])
    A = _symmetric_csr(n + qi.k, src, dst, wts)
    return SparseGraph(A, n, qi.k, float(mu), src, dst, wts, pix, (h, w))


def _check_len(g: SparseGraph, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (g.n_nodes,):
        raise ValueError(f"vector length {z.shape} does not match {g.n_nodes} nodes")
    return z


def laplacian_quadratic(g: SparseGraph, z) -> float:
    """sum over edges of w_ij (z_i - z_j)^2, without forming the Laplacian."""
    z = _check_len(g, z)
    diff = z[g.edges_src] - z[g.edges_dst]
    return float(np.dot(g.edges_w, diff * diff))


def apply_laplacian(g: SparseGraph, z) -> np.ndarray:
    z = _check_len(g, z)
    return g.degree * z - g.adjacency @ z


def write_matrix_market(g: SparseGraph, path) -> None:
    """Dump the adjacency as a symmetric Matrix Market coordinate file.

    Weights are written with ``repr`` so they round-trip exactly.
    """
    lines = ["%%MatrixMarket matrix coordinate real symmetric",
             f"{g.n_nodes} {g.n_nodes} {g.n_edges}"]
    # lower triangle, 1-based
    for i, j, w in zip(g.edges_dst.tolist(), g.edges_src.tolist(), g.edges_w.tolist()):
        lines.append(f"{i + 1} {j + 1} {w!r}")
    from .imageio import atomic_write
    atomic_write(path, ("\n".join(lines) + "\n").encode("ascii"))
