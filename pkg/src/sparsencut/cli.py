"""Command-line front end: segment, synth, eval, bench."""

from __future__ import annotations

import argparse
import csv
import gc
import io
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import imageio
from .evaluation import match_segments
from .features import FeatureMap, pca_project, quantize, rgb_to_featuremap, upsample_bilinear
from .segmenter import STOP_RULES, Segmentation, SegmenterConfig, segment_recursive
from .synth import PATTERNS, SyntheticSpec, generate_raster

log = logging.getLogger("sparsencut")

REPORT_KEYS = ("config", "n_segments", "splits", "timings_ms")
STAGES = ("quantize", "graph", "eigen", "cut")
BENCH_HEADER = ("side", "n", "wall_time_s", "miou")


class CliError(Exception):
    pass


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0 or math.isinf(v):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if v < 0 or math.isnan(v):
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _size(text: str) -> tuple[int, int]:
    try:
        h, w = (int(t) for t in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like HxW, got {text}") from None
    if h < 1 or w < 1:
        raise argparse.ArgumentTypeError("size must be positive")
    return h, w


def _add_engine_flags(p: argparse.ArgumentParser, mu=0.01, energy_threshold=0.01, max_depth=3):
    d = SegmenterConfig()
    p.add_argument("--mu", type=_positive_float, default=mu, help="grid edge weight")
    p.add_argument("--k", type=_positive_int, default=d.k, help="color vocabulary size")
    p.add_argument("--energy-threshold", type=_nonneg_float, default=energy_threshold)
    p.add_argument("--max-depth", type=_nonneg_int, default=max_depth)
    p.add_argument("--tol", type=_positive_float, default=d.eig_tol)
    p.add_argument("--max-iters", type=_positive_int, default=d.eig_max_iters)
    p.add_argument("--candidates", type=int, default=d.n_candidates)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--stop-rule", choices=STOP_RULES, default=d.stop_rule)


def _config(args) -> SegmenterConfig:
    if args.candidates < 2:
        raise CliError("--candidates must be at least 2")
    return SegmenterConfig(mu=args.mu, k=args.k, energy_threshold=args.energy_threshold,
                           max_depth=args.max_depth, eig_tol=args.tol,
                           eig_max_iters=args.max_iters, n_candidates=args.candidates,
                           seed=args.seed, stop_rule=args.stop_rule)


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return _jsonable(x.item())
    return x


def _write_json(path: Path, obj) -> None:
    imageio.atomic_write(path, (json.dumps(_jsonable(obj), indent=2) + "\n").encode())


# ----------------------------------------------------------------------------
# segment
# ----------------------------------------------------------------------------

def load_features(path: Path, pca: int | None = None, size: tuple[int, int] | None = None
                  ) -> FeatureMap:
    try:
        payload = path.read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    if payload[:4] == imageio.FMAP_MAGIC:
        fm = FeatureMap(imageio.decode_fmap(payload))
    else:
        fm = rgb_to_featuremap(payload)
    if pca is not None:
        if pca > fm.dim:
            raise CliError(f"--pca {pca} exceeds feature dimension {fm.dim}")
        fm = pca_project(fm, pca)
    if size is not None:
        if size[0] < fm.height or size[1] < fm.width:
            raise CliError(f"--size {size[0]}x{size[1]} is smaller than the input "
                           f"{fm.height}x{fm.width}")
        fm = upsample_bilinear(fm, *size)
    return fm


def fiedler_image(values: np.ndarray) -> np.ndarray:
    """Min-max scale an eigenvector raster to 8 bits."""
    v = np.nan_to_num(values, nan=np.nanmin(values))
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return np.zeros(v.shape, dtype=np.uint8)
    return np.rint((v - lo) * (255.0 / (hi - lo))).astype(np.uint8)


def build_report(cfg: SegmenterConfig, seg: Segmentation) -> dict:
    timings = {k: round(seg.timings_ms.get(k, 0.0), 3) for k in STAGES}
    return {
        "config": cfg.to_dict(),
        "n_segments": seg.n_segments,
        "splits": [s.to_dict() for s in seg.splits],
        "timings_ms": timings,
    }


def run_segment(fm: FeatureMap, cfg: SegmenterConfig) -> Segmentation:
    timings: dict = {}
    t0 = time.perf_counter()
    qi = quantize(fm, cfg.k, cfg.seed)
    timings["quantize"] = 1e3 * (time.perf_counter() - t0)
    return segment_recursive(qi, cfg, timings)


def cmd_segment(args) -> int:
    cfg = _config(args)
    fm = load_features(Path(args.input), args.pca, args.size)
    seg = run_segment(fm, cfg)
    out = Path(args.output)
    imageio.write_pgm(out / "labels.pgm", seg.seg_ids, maxval=65535)
    if args.fiedler and seg.root_fiedler is not None:
        imageio.write_pgm(out / "fiedler.pgm", fiedler_image(seg.root_fiedler), maxval=255)
    _write_json(out / "report.json", build_report(cfg, seg))
    log.info("%d segments -> %s", seg.n_segments, out)
    if seg.root_degenerate:
        print("error: degenerate cut at the root bisection", file=sys.stderr)
        return 2
    return 0


# ----------------------------------------------------------------------------
# synth
# ----------------------------------------------------------------------------

def _synth_spec(args) -> SyntheticSpec:
    if args.gaussian is not None and args.sp is not None:
        raise CliError("choose one of --gaussian and --sp")
    if args.gaussian is not None:
        return SyntheticSpec(args.pattern, args.side, "gaussian", args.gaussian, args.seed)
    if args.sp is not None:
        if args.sp > 1:
            raise CliError("--sp density must lie in [0, 1]")
        return SyntheticSpec(args.pattern, args.side, "salt-pepper", args.sp, args.seed)
    return SyntheticSpec(args.pattern, args.side, "none", 0.0, args.seed)


def cmd_synth(args) -> int:
    spec = _synth_spec(args)
    raster, gt = generate_raster(spec)
    out = Path(args.output)
    imageio.write_pgm(out / "image.pgm", raster, maxval=255)
    imageio.write_fmap(out / "image.fmap", np.repeat(raster[:, :, None], 3, axis=2))
    imageio.write_pgm(out / "gt.pgm", gt.regions, maxval=255)
    return 0


# ----------------------------------------------------------------------------
# eval
# ----------------------------------------------------------------------------

def _read_labels(path: Path) -> Segmentation:
    try:
        return Segmentation.from_labels(imageio.read_pgm(path))
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc


def evaluate_files(pred_path: Path, gt_paths: list[Path], image_id: str | None = None) -> dict:
    pred = _read_labels(pred_path)
    gts = [_read_labels(p) for p in gt_paths]
    for p, gt in zip(gt_paths, gts):
        if gt.seg_ids.shape != pred.seg_ids.shape:
            raise CliError(f"shape mismatch: {p} is {gt.seg_ids.shape}, "
                           f"prediction is {pred.seg_ids.shape}")
    reports = [match_segments(gt, pred) for gt in gts]
    return {
        "image_id": image_id or pred_path.stem,
        "miou": float(np.mean([r.miou for r in reports])),
        "per_gt_miou": [r.miou for r in reports],
        "n_gt_segments": [gt.n_segments for gt in gts],
        "n_pred_segments": pred.n_segments,
        "pairs": [[list(pair) for pair in r.pairs] for r in reports],
    }


def cmd_eval(args) -> int:
    record = evaluate_files(Path(args.pred), [Path(p) for p in args.gt], args.image_id)
    text = json.dumps(_jsonable(record), indent=2)
    if args.output:
        imageio.atomic_write(Path(args.output), (text + "\n").encode())
    print(text)
    return 0


# ----------------------------------------------------------------------------
# bench
# ----------------------------------------------------------------------------

def bench_rows(sides, patterns, cfg: SegmenterConfig, noise_per_side: float = 0.01,
               seed: int = 0):
    """Yield (side, n, mean wall seconds per image, mean mIoU) per side.

    Each image is generated with Gaussian noise of variance side * noise_per_side,
    segmented from scratch (quantization included) and scored.
    """
    for side in sides:
        times, scores = [], []
        for pattern in patterns:
            gc.collect()  # keep earlier garbage out of the timed region
            t0 = time.perf_counter()
            raster, gt = generate_raster(
                SyntheticSpec(pattern, side, "gaussian", side * noise_per_side, seed))
            fm = FeatureMap(np.repeat(raster[:, :, None], 3, axis=2).astype(np.float64))
            seg = run_segment(fm, cfg)
            miou = match_segments(Segmentation.from_labels(gt.regions), seg).miou
            times.append(time.perf_counter() - t0)
            scores.append(miou)
        yield side, side * side, float(np.mean(times)), float(np.mean(scores))


def cmd_bench(args) -> int:
    cfg = _config(args)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BENCH_HEADER)
    for side, n, t, m in bench_rows(args.sides, args.patterns, cfg, args.noise_per_side,
                                    args.seed):
        writer.writerow((side, n, f"{t:.4f}", f"{m:.6f}"))
        log.info("side %d: %.2fs, mIoU %.4f", side, t, m)
    if args.output:
        imageio.atomic_write(Path(args.output), buf.getvalue().encode())
    sys.stdout.write(buf.getvalue())
    return 0


# ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsencut", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment a PNG/PGM image or FMAP feature file")
    p.add_argument("input")
    p.add_argument("-o", "--output", default="out", help="output directory")
    p.add_argument("--pca", type=_positive_int, default=None,
                   help="project features onto this many principal axes")
    p.add_argument("--size", type=_size, default=None,
                   help="bilinearly upsample features to HxW before quantizing")
    p.add_argument("--fiedler", action="store_true",
                   help="also write the root eigenvector as fiedler.pgm")
    _add_engine_flags(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("synth", help="generate a synthetic pattern with ground truth")
    p.add_argument("--pattern", choices=PATTERNS, default=PATTERNS[0])
    p.add_argument("--side", type=int, default=100)
    p.add_argument("--gaussian", type=_nonneg_float, default=None, metavar="VARIANCE")
    p.add_argument("--sp", type=_nonneg_float, default=None, metavar="DENSITY")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default="synth", help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="score a predicted label map against ground truths")
    p.add_argument("pred")
    p.add_argument("gt", nargs="+")
    p.add_argument("--image-id", default=None)
    p.add_argument("-o", "--output", default=None, help="also write the JSON record here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="runtime / mIoU scaling over image sizes")
    p.add_argument("--sides", type=int, nargs="*", default=[100, 200, 400, 800])
    p.add_argument("--patterns", nargs="+", choices=PATTERNS, default=list(PATTERNS))
    p.add_argument("--noise-per-side", type=_nonneg_float, default=0.01,
                   help="Gaussian variance per pixel of side length")
    p.add_argument("-o", "--output", default=None, help="CSV path (also printed)")
    # binary segmentation by default: one split, always accepted
    _add_engine_flags(p, mu=1.0, energy_threshold=math.inf, max_depth=1)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, imageio.FormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
