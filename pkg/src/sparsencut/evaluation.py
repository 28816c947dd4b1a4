"""Region-overlap scoring of predicted segmentations against ground truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .segmenter import Segmentation


@dataclass
class MatchReport:
    pairs: list[tuple[int, int, float]]  # (gt segment, predicted segment, IoU)
    unmatched_gt: list[int]
    unmatched_pred: list[int]
    miou: float

    def to_dict(self) -> dict:
        return {"miou": self.miou,
                "pairs": [[g, p, v] for g, p, v in self.pairs],
                "unmatched_gt": self.unmatched_gt,
                "unmatched_pred": self.unmatched_pred}


def iou(mask_a, mask_b) -> float:
    """|A & B| / |A | B| from integer counts."""
    a = np.asarray(mask_a, dtype=bool)
    b = np.asarray(mask_b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = int(np.count_nonzero(a | b))
    if union == 0:
        raise ValueError("IoU undefined for two empty masks")
    return int(np.count_nonzero(a & b)) / union


def iou_matrix(gt: np.ndarray, pred: np.ndarray, n_gt: int, n_pred: int) -> np.ndarray:
    """IoU between every gt segment (rows) and predicted segment (columns)."""
    inter = np.bincount(gt.ravel() * n_pred + pred.ravel(),
                        minlength=n_gt * n_pred).reshape(n_gt, n_pred)
    size_gt = inter.sum(axis=1)
    size_pred = inter.sum(axis=0)
    union = size_gt[:, None] + size_pred[None, :] - inter
    return inter / union


def match_segments(gt: Segmentation, pred: Segmentation) -> MatchReport:
    """One-to-one matching maximizing total IoU.

    The IoU matrix is zero-padded to square so different segment counts are
    allowed; ground-truth segments left without a real partner score 0.
    """
    if gt.seg_ids.shape != pred.seg_ids.shape:
        raise ValueError(f"shape mismatch: gt {gt.seg_ids.shape} vs pred {pred.seg_ids.shape}")
    M = iou_matrix(gt.seg_ids, pred.seg_ids, gt.n_segments, pred.n_segments)
    size = max(M.shape)
    padded = np.zeros((size, size))
    padded[:M.shape[0], :M.shape[1]] = M
    rows, cols = linear_sum_assignment(padded, maximize=True)

    pairs, unmatched_gt, matched_pred = [], [], set()
    for r, c in zip(rows.tolist(), cols.tolist()):
        if r >= gt.n_segments:
            continue
        if c >= pred.n_segments:
            unmatched_gt.append(r)
        else:
            pairs.append((r, c, float(M[r, c])))
            matched_pred.add(c)
    unmatched_pred = [c for c in range(pred.n_segments) if c not in matched_pred]
    miou = sum(v for _, _, v in pairs) / gt.n_segments
    return MatchReport(pairs, sorted(unmatched_gt), unmatched_pred, miou)


def miou_multi_gt(gts: list[Segmentation], pred: Segmentation) -> float:
    """Mean over several ground truths of the per-ground-truth mIoU."""
    if not gts:
        raise ValueError("need at least one ground truth")
    return float(np.mean([match_segments(gt, pred).miou for gt in gts]))
