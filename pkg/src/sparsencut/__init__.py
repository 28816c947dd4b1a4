"""Sparse normalized-cut image segmentation on a pixel grid plus color nodes."""

from .cut import CutResult, DegenerateCutError, discrete_energy, ncut_value, threshold_sweep
from .eigen import EigenResult, fiedler
from .evaluation import MatchReport, match_segments, miou_multi_gt
from .features import FeatureMap, QuantizedImage, pca_project, quantize, upsample_bilinear
from .graph import SparseGraph, build_graph
from .segmenter import Segmentation, SegmenterConfig, bisect, segment_recursive
from .synth import GroundTruth, SyntheticSpec, generate

__all__ = [
    "CutResult", "DegenerateCutError", "discrete_energy", "ncut_value", "threshold_sweep",
    "EigenResult", "fiedler", "MatchReport", "match_segments", "miou_multi_gt",
    "FeatureMap", "QuantizedImage", "pca_project", "quantize", "upsample_bilinear",
    "SparseGraph", "build_graph", "Segmentation", "SegmenterConfig", "bisect",
    "segment_recursive", "GroundTruth", "SyntheticSpec", "generate",
]
