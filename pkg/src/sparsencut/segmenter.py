"""Image segmentation by (recursive) spectral bisection of the pixel+color graph."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .cut import CutResult, DegenerateCutError, threshold_sweep
from .eigen import EigenResult, fiedler
from .features import QuantizedImage
from .graph import build_graph

STOP_RULES = ("shi-malik", "literal")


@dataclass(frozen=True)
class SegmenterConfig:
    mu: float = 0.01
    k: int = 256
    energy_threshold: float = 0.01
    max_depth: int = 3
    eig_tol: float = 1e-6
    eig_max_iters: int = 2000
    n_candidates: int = 32
    seed: int = 0
    # "shi-malik": accept a split when its energy is below the threshold;
    # "literal": keep splitting while the energy is at or above it
    stop_rule: str = "shi-malik"

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.energy_threshold < 0 or math.isnan(self.energy_threshold):
            raise ValueError("energy_threshold must be non-negative")
        if self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")
        if not self.eig_tol > 0 or self.eig_max_iters < 1:
            raise ValueError("eigensolver tolerance and budget must be positive")
        if self.n_candidates < 2:
            raise ValueError("n_candidates must be >= 2")
        if self.stop_rule not in STOP_RULES:
            raise ValueError(f"stop_rule must be one of {STOP_RULES}")

    def accepts(self, energy: float) -> bool:
        if self.stop_rule == "shi-malik":
            return energy < self.energy_threshold
        return energy >= self.energy_threshold

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SplitRecord:
    depth: int
    energy: float
    ncut: float
    n_mismatch: int
    n_boundary: int
    accepted: bool
    n_pixels: int
    eig_converged: bool = True

    def to_dict(self) -> dict:
        return {"depth": self.depth, "energy": self.energy, "ncut": self.ncut,
                "n_mismatch": self.n_mismatch, "n_boundary": self.n_boundary,
                "accepted": self.accepted}


@dataclass
class Segmentation:
    seg_ids: np.ndarray  # (h, w) ints in [0, n_segments)
    n_segments: int
    # energy of the accepted split that produced each segment (nan: never split)
    per_segment_energy: list[float] = field(default_factory=list)
    splits: list[SplitRecord] = field(default_factory=list)
    timings_ms: dict = field(default_factory=dict)
    root_fiedler: np.ndarray | None = None  # (h, w) pixel entries of the first eigenvector
    root_degenerate: bool = False

    def __post_init__(self):
        ids = np.asarray(self.seg_ids, dtype=np.int64)
        if ids.ndim != 2:
            raise ValueError("seg_ids must be 2-D")
        present = np.unique(ids)
        if self.n_segments < 1 or not np.array_equal(present, np.arange(self.n_segments)):
            raise ValueError("segment ids must cover exactly 0..n_segments-1")
        self.seg_ids = ids

    @property
    def height(self) -> int:
        return self.seg_ids.shape[0]

    @property
    def width(self) -> int:
        return self.seg_ids.shape[1]

    @classmethod
    def from_labels(cls, labels) -> "Segmentation":
        """Wrap an arbitrary integer label map, compacting ids in sorted order."""
        labels = np.asarray(labels)
        _, inv = np.unique(labels, return_inverse=True)
        inv = inv.reshape(labels.shape)
        n = int(inv.max()) + 1
        return cls(inv, n, [math.nan] * n)


def _tick(timings: dict | None, key: str, t0: float) -> float:
    now = time.perf_counter()
    if timings is not None:
        timings[key] = timings.get(key, 0.0) + 1e3 * (now - t0)
    return now


def _split(qi: QuantizedImage, cfg: SegmenterConfig, timings: dict | None
           ) -> tuple[CutResult, EigenResult, np.ndarray]:
    """Bisect the pixels of `qi`; returns the cut, eigenpair and a raster side mask."""
    if qi.n_pixels < 2:
        raise DegenerateCutError("need at least two pixels to bisect")
    t = time.perf_counter()
    g = build_graph(qi, cfg.mu)
    t = _tick(timings, "graph", t)
    eig = fiedler(g, cfg.eig_tol, cfg.eig_max_iters, cfg.seed)
    t = _tick(timings, "eigen", t)
    if eig.degenerate:
        raise DegenerateCutError("graph is disconnected; Fiedler value is zero")
    cut = threshold_sweep(g, qi, eig.vector, cfg.n_candidates)
    _tick(timings, "cut", t)
    side_b = np.zeros(qi.height * qi.width, dtype=bool)
    side_b[g.pixel_index] = cut.assignment[:g.n_grid]
    fied = np.full(qi.height * qi.width, np.nan)
    fied[g.pixel_index] = eig.vector[:g.n_grid]
    cut.eigen = eig
    return cut, eig, (side_b.reshape(qi.height, qi.width), fied.reshape(qi.height, qi.width))


def bisect(qi: QuantizedImage, cfg: SegmenterConfig = SegmenterConfig(),
           timings: dict | None = None) -> tuple[Segmentation, CutResult]:
    """One spectral bisection: pixels on side B get id 1, the rest id 0.

    Color-node sides only steer the cut; they are not part of the output.
    The eigenpair used is attached to the result as ``cut.eigen``.
    """
    cut, _, (side_b, fied) = _split(qi, cfg, timings)
    seg = Segmentation(side_b.astype(np.int64), 2, [cut.energy, cut.energy],
                       root_fiedler=fied)
    return seg, cut


def segment_recursive(qi: QuantizedImage, cfg: SegmenterConfig = SegmenterConfig(),
                      timings: dict | None = None) -> Segmentation:
    """Recursively bisect regions until no cheap cut remains or depth runs out.

    Regions are visited depth-first, side A before side B, and final
    segments are numbered in the order they are reached.
    """
    if timings is None:
        timings = {}
    h, w = qi.height, qi.width
    seg_ids = np.full((h, w), -1, dtype=np.int64)
    per_energy: list[float] = []
    splits: list[SplitRecord] = []
    root_fied = None
    root_degenerate = False

    stack = [(qi.mask, 0, math.nan)]
    while stack:
        region, depth, born_energy = stack.pop()
        n_pix = int(region.sum())
        cut = None
        if depth < cfg.max_depth and n_pix >= 2:
            try:
                cut, eig, (side_b, fied) = _split(qi.restrict(region), cfg, timings)
            except DegenerateCutError:
                if depth == 0:
                    root_degenerate = True
            if depth == 0 and cut is not None:
                root_fied = fied
        if cut is not None:
            accepted = cfg.accepts(cut.energy)
            splits.append(SplitRecord(depth, cut.energy, cut.ncut, cut.n_mismatch,
                                      cut.n_boundary, accepted, n_pix, eig.converged))
            if accepted:
                stack.append((region & side_b, depth + 1, cut.energy))
                stack.append((region & ~side_b, depth + 1, cut.energy))
                continue
        seg_ids[region] = len(per_energy)
        per_energy.append(born_energy)

    return Segmentation(seg_ids, len(per_energy), per_energy, splits, timings,
                        root_fied, root_degenerate)
