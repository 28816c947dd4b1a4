"""Synthetic binary-pattern benchmark images with Gaussian or salt-and-pepper noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeatureMap

PATTERNS = ("centered-square", "four-squares", "diagonal-squares")
NOISES = ("none", "gaussian", "salt-pepper")


@dataclass(frozen=True)
class SyntheticSpec:
    pattern: str = "centered-square"
    side: int = 100
    noise: str = "none"
    # variance for gaussian, density for salt-pepper
    level: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise ValueError(f"unknown pattern {self.pattern!r}; choose from {PATTERNS}")
        if self.noise not in NOISES:
            raise ValueError(f"unknown noise {self.noise!r}; choose from {NOISES}")
        if self.side < 4:
            raise ValueError("side must be at least 4")
        if self.level < 0:
            raise ValueError("noise level must be non-negative")
        if self.noise == "salt-pepper" and self.level > 1:
            raise ValueError("salt-pepper density must lie in [0, 1]")


@dataclass(frozen=True)
class GroundTruth:
    regions: np.ndarray  # side x side, values {0, 1}


def pattern_mask(pattern: str, side: int) -> np.ndarray:
    """Foreground (1) / background (0) layout of a noiseless pattern."""
    m = np.zeros((side, side), dtype=np.uint8)
    if pattern == "centered-square":
        s = side // 2
        o = (side - s) // 2
        m[o:o + s, o:o + s] = 1
    elif pattern == "four-squares":
        half, s = side // 2, side // 4
        o = (half - s) // 2
        for r0 in (0, half):
            for c0 in (0, half):
                m[r0 + o:r0 + o + s, c0 + o:c0 + o + s] = 1
    elif pattern == "diagonal-squares":
        # two squares meeting corner-to-corner at the image center
        s, c = side // 3, side // 2
        m[c - s:c, c - s:c] = 1
        m[c:c + s, c:c + s] = 1
    else:
        raise ValueError(f"unknown pattern {pattern!r}")
    return m


def rescale_to_uint8(img: np.ndarray) -> np.ndarray:
    """Min-max rescale to [0, 255] and round to integers."""
    lo, hi = float(img.min()), float(img.max())
    if hi == lo:
        return np.zeros(img.shape, dtype=np.uint8)
    return np.rint((img - lo) * (255.0 / (hi - lo))).astype(np.uint8)


def generate_raster(spec: SyntheticSpec) -> tuple[np.ndarray, GroundTruth]:
    """Noisy 8-bit grayscale image and its ground truth."""
    gt = pattern_mask(spec.pattern, spec.side)
    rng = np.random.default_rng(spec.seed)
    img = gt.astype(np.float64)
    if spec.noise == "gaussian":
        img = img + rng.normal(0.0, np.sqrt(spec.level), img.shape)
    elif spec.noise == "salt-pepper":
        hit = rng.random(img.shape) < spec.level
        img = np.where(hit, rng.integers(0, 2, img.shape).astype(np.float64), img)
    return rescale_to_uint8(img), GroundTruth(gt)


def generate(spec: SyntheticSpec) -> tuple[FeatureMap, GroundTruth]:
    raster, gt = generate_raster(spec)
    fm = FeatureMap(np.repeat(raster[:, :, None], 3, axis=2).astype(np.float64))
    return fm, gt
