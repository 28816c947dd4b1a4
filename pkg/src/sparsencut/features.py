"""Pixel features and their quantization into a small color vocabulary.

The segmenter never looks at raw features; it consumes a `QuantizedImage`,
i.e. one cluster id per pixel plus the cluster sizes. This module gets
there from either raw RGB/grayscale rasters or low-resolution feature maps
(PCA, bilinear upsampling, mini-batch K-means).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .imageio import decode_raster


@dataclass(frozen=True)
class FeatureMap:
    """Real-valued (height, width, dim) feature grid, channel-last."""

    data: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3:
            raise ValueError(f"feature map must be (h, w, d), got shape {data.shape}")
        if data.size == 0:
            raise ValueError("feature map is empty")
        if not np.all(np.isfinite(data)):
            raise ValueError("feature map contains NaN or Inf")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def dim(self) -> int:
        return self.data.shape[2]

    def pixels(self) -> np.ndarray:
        return self.data.reshape(-1, self.dim)


@dataclass(frozen=True)
class QuantizedImage:
    """Per-pixel cluster ids in [0, k) plus the cluster sizes.

    A region restricted image (see `restrict`) marks pixels outside the
    region with label -1; those pixels are not part of the graph.
    """

    labels: np.ndarray
    k: int
    counts: np.ndarray
    centroids: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if labels.ndim != 2:
            raise ValueError(f"labels must be 2-D, got shape {labels.shape}")
        if self.k < 1 or counts.shape != (self.k,):
            raise ValueError(f"counts must have length k={self.k}")
        inside = labels[labels >= 0]
        if inside.size == 0:
            raise ValueError("quantized image has no pixels")
        if inside.max() >= self.k or labels.min() < -1:
            raise ValueError("label out of range")
        if not np.array_equal(np.bincount(inside, minlength=self.k), counts):
            raise ValueError("counts do not match labels")
        if np.any(counts == 0):
            raise ValueError("empty cluster ids must be compacted away")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "counts", counts)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def mask(self) -> np.ndarray:
        return self.labels >= 0

    @property
    def n_pixels(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def from_labels(cls, labels, centroids=None) -> "QuantizedImage":
        """Compact arbitrary non-negative ids (-1 = outside) into [0, k)."""
        labels = np.asarray(labels, dtype=np.int64)
        inside = labels >= 0
        used, inverse = np.unique(labels[inside], return_inverse=True)
        out = np.full(labels.shape, -1, dtype=np.int64)
        out[inside] = inverse
        counts = np.bincount(inverse, minlength=len(used))
        if centroids is not None:
            centroids = np.asarray(centroids)[used]
        return cls(out, len(used), counts, centroids)

    def restrict(self, region: np.ndarray) -> "QuantizedImage":
        """Keep only pixels in `region`, reusing ids and dropping empty clusters."""
        region = np.asarray(region, dtype=bool) & self.mask
        return QuantizedImage.from_labels(np.where(region, self.labels, -1), self.centroids)


# ----------------------------------------------------------------------------
# raw rasters
# ----------------------------------------------------------------------------

def rgb_to_featuremap(payload: bytes) -> FeatureMap:
    """Decode an 8-bit RGB or grayscale PNG/PGM into a 3-channel feature map."""
    img = decode_raster(payload)
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    return FeatureMap(img.astype(np.float64))


# ----------------------------------------------------------------------------
# PCA
# ----------------------------------------------------------------------------

def pca_project(fm: FeatureMap, out_dim: int) -> FeatureMap:
    """Project onto the leading `out_dim` principal axes of the centered features.

    Axis signs are fixed so the largest-magnitude loading is positive. If the
    covariance has rank below `out_dim`, the missing axes are zero-filled and
    ``meta["warning"]`` is set.
    """
    if not 1 <= out_dim <= fm.dim:
        raise ValueError(f"out_dim must be in [1, {fm.dim}], got {out_dim}")
    X = fm.pixels()
    Xc = X - X.mean(axis=0)
    cov = Xc.T @ Xc / X.shape[0]
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:out_dim]
    evals, axes = evals[order], evecs[:, order]

    rows = np.argmax(np.abs(axes), axis=0)
    axes = axes * np.sign(axes[rows, np.arange(out_dim)])

    scale = max(float(evals[0]), 0.0)
    live = evals > max(scale, np.finfo(float).tiny) * 1e-12
    meta = {"explained_variance": np.where(live, evals, 0.0).tolist()}
    if not live.all():
        axes[:, ~live] = 0.0
        meta["warning"] = (f"covariance rank {int(live.sum())} < {out_dim}; "
                           "missing axes zero-filled")
        warnings.warn(meta["warning"], RuntimeWarning, stacklevel=2)
    out = (Xc @ axes).reshape(fm.height, fm.width, out_dim)
    return FeatureMap(out, meta)


# ----------------------------------------------------------------------------
# upsampling
# ----------------------------------------------------------------------------

def _interp_axis(data: np.ndarray, n_out: int, axis: int) -> np.ndarray:
    n_in = data.shape[axis]
    if n_in == 1:
        return np.repeat(data, n_out, axis=axis)
    pos = np.linspace(0.0, n_in - 1, n_out)
    lo = np.minimum(np.floor(pos).astype(np.int64), n_in - 2)
    frac = pos - lo
    shape = [1] * data.ndim
    shape[axis] = n_out
    frac = frac.reshape(shape)
    a = np.take(data, lo, axis=axis)
    b = np.take(data, lo + 1, axis=axis)
    # convex form: weights are exactly 0 and 1 at the corners
    return (1.0 - frac) * a + frac * b


def upsample_bilinear(fm: FeatureMap, out_h: int, out_w: int) -> FeatureMap:
    """Corner-aligned bilinear upsampling (output corners equal input corners)."""
    if out_h < fm.height or out_w < fm.width:
        raise ValueError(f"cannot upsample {fm.height}x{fm.width} to {out_h}x{out_w}")
    data = _interp_axis(fm.data, out_h, 0)
    data = _interp_axis(data, out_w, 1)
    return FeatureMap(data, dict(fm.meta))


# ----------------------------------------------------------------------------
# quantization
# ----------------------------------------------------------------------------

def _nearest(X: np.ndarray, C: np.ndarray, chunk: int = 65536):
    """Index of and squared distance to the nearest row of C, for each row of X."""
    idx = np.empty(len(X), dtype=np.int64)
    dist = np.empty(len(X))
    c2 = np.einsum("ij,ij->i", C, C)
    for s in range(0, len(X), chunk):
        x = X[s:s + chunk]
        d = c2[None, :] - 2.0 * (x @ C.T)
        j = np.argmin(d, axis=1)
        idx[s:s + chunk] = j
        # recompute exactly; the expanded form loses precision near zero
        dist[s:s + chunk] = np.sum((x - C[j]) ** 2, axis=1)
    return idx, dist


def kmeans_plusplus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """D^2-weighted seeding. Stops early once every point coincides with a center."""
    centers = [X[rng.integers(len(X))]]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    while len(centers) < k:
        total = d2.sum()
        if total <= 0:
            break
        j = rng.choice(len(X), p=d2 / total)
        centers.append(X[j])
        d2 = np.minimum(d2, np.sum((X - X[j]) ** 2, axis=1))
    return np.array(centers)


def minibatch_kmeans(X: np.ndarray, init: np.ndarray, batch: int, iters: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Mini-batch K-means with per-center 1/count learning rates."""
    C = np.array(init, dtype=np.float64, copy=True)
    seen = np.zeros(len(C))
    n = len(X)
    for _ in range(iters):
        sel = rng.choice(n, size=min(batch, n), replace=False)
        xb = X[sel]
        j, _ = _nearest(xb, C)
        m = np.bincount(j, minlength=len(C)).astype(np.float64)
        sums = np.zeros_like(C)
        np.add.at(sums, j, xb)
        hit = m > 0
        seen[hit] += m[hit]
        C[hit] += (sums[hit] - m[hit, None] * C[hit]) / seen[hit, None]
    return C


def distortion(X: np.ndarray, C: np.ndarray) -> float:
    return float(_nearest(X, C)[1].sum())


def _distinct_rows(X: np.ndarray):
    rows = np.ascontiguousarray(X)
    keyed = rows.view(np.dtype((np.void, rows.dtype.itemsize * rows.shape[1]))).ravel()
    _, first, inverse = np.unique(keyed, return_index=True, return_inverse=True)
    return rows[first], inverse.ravel()


def quantize(fm: FeatureMap, k: int = 256, seed: int = 0, batch: int = 1024,
             iters: int = 100) -> QuantizedImage:
    """Vector-quantize the pixels of `fm` into at most `k` clusters.

    When the image already has no more than `k` distinct feature vectors the
    result is an exact color index with zero distortion; otherwise
    k-means++ seeding on a subsample followed by mini-batch K-means, with
    every pixel finally assigned to its nearest surviving centroid.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    X = fm.pixels()
    uniq, inverse = _distinct_rows(X)
    if len(uniq) <= k:
        labels = inverse.reshape(fm.height, fm.width)
        return QuantizedImage(labels, len(uniq), np.bincount(inverse), uniq.copy())

    rng = np.random.default_rng(seed)
    n_init = min(len(X), max(3 * batch, 20 * k))
    sample = X[rng.choice(len(X), size=n_init, replace=False)] if n_init < len(X) else X
    C = kmeans_plusplus(sample, k, rng)
    C = minibatch_kmeans(X, C, batch, iters, rng)
    idx, _ = _nearest(X, C)
    return QuantizedImage.from_labels(idx.reshape(fm.height, fm.width), C)
