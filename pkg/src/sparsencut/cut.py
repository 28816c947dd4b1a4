"""Discrete bipartitions of the pixel+color graph and their energies.

For a bipartition (A, B) of all pixel and color nodes, the normalized cut
factorizes as

    Ncut(A, B) = vol(V) / (vol(A) vol(B)) * (n_mismatch + mu * n_boundary)

where n_mismatch counts pixels on a different side than their color node
(each is a cut unit edge) and n_boundary counts cut grid edges. Both counts
are computed here independently of the edge-wise cut so the identity can
be checked rather than assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .features import QuantizedImage
from .graph import SparseGraph, grid_pairs

DEFAULT_CANDIDATES = 32


class DegenerateCutError(ValueError):
    """A bipartition with an empty (or zero-volume) side."""


@dataclass
class CutResult:
    assignment: np.ndarray  # bool over n + k nodes, True = side B
    threshold: float
    alpha: float
    beta: float
    ncut: float
    energy: float
    n_mismatch: int
    n_boundary: int
    vol_a: float
    vol_b: float
    cut: float
    # eigenpair the threshold was taken from, when produced by the segmenter
    eigen: object | None = field(default=None, repr=False, compare=False)

    def level_vector(self) -> np.ndarray:
        """Discrete encoding z in {-alpha, beta}: beta on A, -alpha on B.

        With alpha and beta defined from the volumes as above, this is the
        placement for which 1'Dz = 0 and z'Dz = 1; the quadratic form z'Lz
        does not depend on it.
        """
        return np.where(self.assignment, -self.alpha, self.beta)


def _as_assignment(g: SparseGraph, assignment) -> np.ndarray:
    side = np.asarray(assignment, dtype=bool)
    if side.shape != (g.n_nodes,):
        raise ValueError(f"assignment length {side.shape} does not match {g.n_nodes} nodes")
    return side


def cut_value(g: SparseGraph, side: np.ndarray) -> float:
    crossing = side[g.edges_src] != side[g.edges_dst]
    return float(g.edges_w[crossing].sum())


def ncut_value(g: SparseGraph, assignment) -> float:
    """Ncut of an arbitrary bipartition of any SparseGraph."""
    side = _as_assignment(g, assignment)
    vol_b = float(g.degree[side].sum())
    vol_a = float(g.degree[~side].sum())
    if vol_a <= 0 or vol_b <= 0:
        raise DegenerateCutError("one side of the cut is empty")
    c = cut_value(g, side)
    return c / vol_a + c / vol_b


def pixel_colors(g: SparseGraph, qi: QuantizedImage) -> np.ndarray:
    """Cluster id of each pixel node, in node order."""
    return qi.labels.ravel()[g.pixel_index]


def count_boundary(qi: QuantizedImage, g: SparseGraph, side: np.ndarray) -> int:
    """Grid edges (4-neighbors inside the region) whose endpoints disagree."""
    raster = np.zeros(qi.height * qi.width, dtype=bool)
    raster[g.pixel_index] = side[:g.n_grid]
    a, b = grid_pairs(qi.mask)
    return int(np.count_nonzero(raster[a] != raster[b]))


def count_mismatch(qi: QuantizedImage, g: SparseGraph, side: np.ndarray) -> int:
    color_side = side[g.n_grid:]
    return int(np.count_nonzero(side[:g.n_grid] != color_side[pixel_colors(g, qi)]))


def discrete_energy(g: SparseGraph, qi: QuantizedImage, assignment,
                    threshold: float = float("nan")) -> CutResult:
    """Evaluate every energy term of a bipartition of an image graph."""
    side = _as_assignment(g, assignment)
    if g.pixel_index is None:
        raise ValueError("discrete_energy needs an image graph from build_graph")
    vol_b = float(g.degree[side].sum())
    vol_a = float(g.degree[~side].sum())
    if vol_a <= 0 or vol_b <= 0:
        raise DegenerateCutError("one side of the cut is empty")
    vol = g.total_volume
    c = cut_value(g, side)
    n_mis = count_mismatch(qi, g, side)
    n_bnd = count_boundary(qi, g, side)
    return CutResult(
        assignment=side,
        threshold=threshold,
        alpha=math.sqrt(vol_a / (vol * vol_b)),
        beta=math.sqrt(vol_b / (vol * vol_a)),
        ncut=c / vol_a + c / vol_b,
        energy=vol / (vol_a * vol_b) * (n_mis + g.mu * n_bnd),
        n_mismatch=n_mis,
        n_boundary=n_bnd,
        vol_a=vol_a,
        vol_b=vol_b,
        cut=c,
    )


def candidate_thresholds(x: np.ndarray, n_candidates: int) -> np.ndarray:
    """Quantile thresholds of `x`, each nudged to the midpoint of a value gap.

    The midpoint of the widest gap between consecutive values is always
    included. Every returned threshold leaves at least one entry on each
    side. If `x` has no more value gaps than `n_candidates`, every gap is used.
    """
    if n_candidates < 2:
        raise ValueError("need at least 2 candidates")
    vals = np.unique(x)
    if len(vals) < 2:
        return np.empty(0)
    if len(vals) - 1 <= n_candidates:
        return 0.5 * (vals[:-1] + vals[1:])
    xs = np.sort(x)
    q = np.arange(1, n_candidates + 1) / (n_candidates + 1)
    v = xs[np.floor(q * (len(xs) - 1)).astype(np.int64)]
    j = np.minimum(np.searchsorted(vals, v), len(vals) - 2)
    # a well separated embedding puts its split in the widest gap, which the
    # quantiles alone can miss when both clusters have many distinct values
    j = np.unique(np.append(j, np.argmax(np.diff(vals))))
    return 0.5 * (vals[j] + vals[j + 1])


def sweep_ncuts(g: SparseGraph, x: np.ndarray, thresholds: np.ndarray):
    """Ncut and pixel count of side B (x > t) for every sorted threshold t.

    One pass over the edges: an edge is cut exactly for the thresholds in
    [min(x_i, x_j), max(x_i, x_j)), a contiguous run of the sorted list.
    """
    m = len(thresholds)
    xs, xd = x[g.edges_src], x[g.edges_dst]
    first = np.searchsorted(thresholds, np.minimum(xs, xd), side="left")
    stop = np.searchsorted(thresholds, np.maximum(xs, xd), side="left")
    diff = (np.bincount(first, weights=g.edges_w, minlength=m + 1)
            - np.bincount(stop, weights=g.edges_w, minlength=m + 1))
    cut = np.cumsum(diff)[:m]
    # node i is on side B for thresholds t_c with c < pos_i
    pos = np.searchsorted(thresholds, x, side="left")
    vol_b = np.cumsum(np.bincount(pos, weights=g.degree, minlength=m + 1)[::-1])[::-1][1:]
    pix_b = np.cumsum(np.bincount(pos[:g.n_grid], minlength=m + 1)[::-1])[::-1][1:]
    vol_a = g.total_volume - vol_b
    with np.errstate(divide="ignore", invalid="ignore"):
        ncut = cut / vol_a + cut / vol_b
    return ncut, pix_b


def threshold_sweep(g: SparseGraph, qi: QuantizedImage, x,
                    n_candidates: int = DEFAULT_CANDIDATES) -> CutResult:
    """Best-Ncut bipartition among quantile thresholds of a node embedding.

    Side B is ``x > threshold``; both sides must keep at least one pixel.
    Ties go to the smaller threshold.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (g.n_nodes,):
        raise ValueError(f"vector length {x.shape} does not match {g.n_nodes} nodes")
    ts = candidate_thresholds(x, n_candidates)
    if len(ts) == 0:
        raise DegenerateCutError("embedding is constant; nothing to threshold")
    ncut, pix_b = sweep_ncuts(g, x, ts)
    ok = (pix_b > 0) & (pix_b < g.n_grid) & np.isfinite(ncut)
    if not ok.any():
        raise DegenerateCutError("no threshold splits the pixels into two nonempty sides")
    best = int(np.argmin(np.where(ok, ncut, np.inf)))
    return discrete_energy(g, qi, x > ts[best], threshold=float(ts[best]))
