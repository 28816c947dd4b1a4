import io
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from sparsencut.features import (FeatureMap, QuantizedImage, distortion, kmeans_plusplus,
                                 minibatch_kmeans, pca_project, quantize, rgb_to_featuremap,
                                 upsample_bilinear, _nearest)
from sparsencut.imageio import FormatError, encode_pgm


def png_bytes(arr, mode):
    buf = io.BytesIO()
    Image.fromarray(arr, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def total_variance(data):
    X = data.reshape(-1, data.shape[-1])
    return float(((X - X.mean(axis=0)) ** 2).sum())


# ---------------------------------------------------------------- FeatureMap

def test_featuremap_rejects_nonfinite_and_bad_shapes():
    with pytest.raises(ValueError):
        FeatureMap(np.array([[[np.nan]]]))
    with pytest.raises(ValueError):
        FeatureMap(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        FeatureMap(np.zeros((0, 2, 1)))


def test_quantized_image_invariants():
    qi = QuantizedImage.from_labels(np.array([[5, 5], [9, 2]]))
    assert qi.k == 3
    assert qi.counts.tolist() == [1, 2, 1]
    assert qi.labels.tolist() == [[1, 1], [2, 0]]
    with pytest.raises(ValueError):
        QuantizedImage(np.array([[0, 0]]), 2, np.array([2, 0]))
    with pytest.raises(ValueError):
        QuantizedImage(np.array([[0, 1]]), 2, np.array([2, 0]))


def test_restrict_drops_empty_clusters():
    qi = QuantizedImage.from_labels(np.array([[0, 1, 2], [0, 1, 2]]))
    sub = qi.restrict(np.array([[True, False, True], [True, False, False]]))
    assert sub.k == 2
    assert sub.labels.tolist() == [[0, -1, 1], [0, -1, -1]]
    assert sub.counts.tolist() == [2, 1]
    assert sub.n_pixels == 3


# ---------------------------------------------------------------- rgb_to_featuremap

def test_white_rgb_pixel():
    fm = rgb_to_featuremap(png_bytes(np.full((1, 1, 3), 255, np.uint8), "RGB"))
    assert fm.data.shape == (1, 1, 3)
    assert fm.data.ravel().tolist() == [255.0, 255.0, 255.0]


def test_grayscale_replicated():
    g = np.array([[0, 10], [200, 255]], dtype=np.uint8)
    for payload in (png_bytes(g, "L"), encode_pgm(g)):
        fm = rgb_to_featuremap(payload)
        assert fm.dim == 3
        assert np.array_equal(fm.data[..., 0], g)
        assert np.array_equal(fm.data[..., 0], fm.data[..., 1])
        assert np.array_equal(fm.data[..., 1], fm.data[..., 2])


def test_corrupt_header_is_format_error():
    with pytest.raises(FormatError):
        rgb_to_featuremap(b"\x89PNX garbage")
    with pytest.raises(FormatError):
        rgb_to_featuremap(b"P5\n2 2\n255\n\x00")  # truncated body


def test_unsupported_bit_depth_named():
    buf = io.BytesIO()
    Image.fromarray(np.zeros((2, 2), dtype=np.uint8), mode="L").convert("LA").save(buf, format="PNG")
    with pytest.raises(FormatError, match="mode"):
        rgb_to_featuremap(buf.getvalue())


# ---------------------------------------------------------------- PCA

def test_pca_single_axis_recovers_centered_t():
    t = np.linspace(-3, 5, 12).reshape(3, 4)
    data = np.stack([t, np.zeros_like(t), np.zeros_like(t)], axis=-1)
    out = pca_project(FeatureMap(data), 1)
    assert out.dim == 1
    # largest-magnitude loading is positive, so the sign follows t
    assert np.allclose(out.data[..., 0], t - t.mean(), atol=1e-12)


def test_pca_full_dim_preserves_total_variance(rng):
    X = rng.standard_normal((6, 5, 4)) * np.array([3.0, 1.0, 0.5, 0.1])
    Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    rotated = X @ Q.T
    out = pca_project(FeatureMap(rotated), 4)
    assert total_variance(out.data) == pytest.approx(total_variance(rotated), rel=1e-9)
    ev = out.meta["explained_variance"]
    assert np.all(np.diff(ev) <= 0)


def test_pca_reconstruction_error_matches_dense_oracle(rng):
    data = rng.standard_normal((8, 8, 16)) @ rng.standard_normal((16, 16))
    out = pca_project(FeatureMap(data), 3)
    X = data.reshape(-1, 16)
    Xc = X - X.mean(axis=0)
    # oracle: SVD of the centered data, independent of the covariance path
    _, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    Y = out.data.reshape(-1, 3)
    assert np.allclose(np.abs(Y), np.abs(Xc @ Vt[:3].T), atol=1e-8)
    # project back with the oracle axes and compare the residual energy
    recon = Y @ (np.sign(np.sum(Y * (Xc @ Vt[:3].T), axis=0))[:, None] * Vt[:3])
    err = float(((Xc - recon) ** 2).sum())
    discarded = float((s[3:] ** 2).sum())
    assert err == pytest.approx(discarded, rel=1e-8)
    evals = np.linalg.eigvalsh(Xc.T @ Xc / len(Xc))[::-1]
    assert err == pytest.approx(len(Xc) * evals[3:].sum(), rel=1e-8)


def test_pca_sign_convention(rng):
    data = rng.standard_normal((5, 5, 6))
    out = pca_project(FeatureMap(data), 3)
    flipped = pca_project(FeatureMap(-data), 3)
    # negating the data flips every principal axis back, so outputs agree up to -1
    assert np.allclose(out.data, -flipped.data, atol=1e-10)


def test_pca_rank_deficient_pads_and_warns():
    t = np.arange(6, dtype=float).reshape(2, 3)
    data = np.stack([t, 2 * t, np.zeros_like(t)], axis=-1)
    with pytest.warns(RuntimeWarning):
        out = pca_project(FeatureMap(data), 3)
    assert "warning" in out.meta
    assert np.all(out.data[..., 1:] == 0)


def test_pca_rejects_too_many_dims():
    with pytest.raises(ValueError):
        pca_project(FeatureMap(np.zeros((2, 2, 2))), 3)


@given(arrays(np.float64, st.tuples(st.integers(2, 5), st.integers(2, 5), st.integers(1, 5)),
              elements=st.floats(-100, 100)), st.data())
def test_pca_never_increases_total_variance(data, draw):
    out_dim = draw.draw(st.integers(1, data.shape[2]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        out = pca_project(FeatureMap(data), out_dim)
    tv_in = total_variance(data)
    assert total_variance(out.data) <= tv_in * (1 + 1e-9) + 1e-9
    assert np.all(np.isfinite(out.data))


# ---------------------------------------------------------------- upsampling

def test_upsample_single_sample_is_constant():
    out = upsample_bilinear(FeatureMap(np.array([[[1.5, -2.0]]])), 4, 7)
    assert out.data.shape == (4, 7, 2)
    assert np.all(out.data[..., 0] == 1.5) and np.all(out.data[..., 1] == -2.0)


def test_upsample_center_is_quarter():
    fm = FeatureMap(np.array([[0.0, 0.0], [0.0, 1.0]])[..., None])
    out = upsample_bilinear(fm, 3, 3)
    assert out.data[1, 1, 0] == pytest.approx(0.25)
    assert out.data[2, 2, 0] == 1.0


def test_upsample_2x2_to_4x4_hull_and_corners(rng):
    src = rng.standard_normal((2, 2, 3))
    out = upsample_bilinear(FeatureMap(src), 4, 4).data
    for c in range(3):
        assert out[..., c].min() >= src[..., c].min() - 1e-12
        assert out[..., c].max() <= src[..., c].max() + 1e-12
    assert np.array_equal(out[[0, 0, -1, -1], [0, -1, 0, -1]], src[[0, 0, -1, -1], [0, -1, 0, -1]])


def test_upsample_degenerate_axis_replicates():
    row = np.array([[[0.0], [2.0], [4.0]]])  # 1x3
    out = upsample_bilinear(FeatureMap(row), 3, 5).data[..., 0]
    assert np.allclose(out, [[0, 1, 2, 3, 4]] * 3)


def test_upsample_rejects_shrinking():
    with pytest.raises(ValueError):
        upsample_bilinear(FeatureMap(np.zeros((3, 3, 1))), 2, 3)


@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 4), st.integers(1, 4),
       st.integers(0, 2**31 - 1))
def test_upsample_then_corner_sampling_recovers_input(h, w, fy, fx, seed):
    src = np.random.default_rng(seed).standard_normal((h, w, 2))
    H, W = (h - 1) * fy + 1, (w - 1) * fx + 1
    out = upsample_bilinear(FeatureMap(src), H, W).data
    assert np.allclose(out[::fy, ::fx], src, atol=1e-12)
    assert np.array_equal(out[[0, -1]][:, [0, -1]], src[[0, -1]][:, [0, -1]])


@given(st.integers(2, 4), st.integers(2, 4), st.integers(0, 6), st.integers(0, 6),
       st.integers(0, 2**31 - 1))
def test_upsample_local_bounds(h, w, dy, dx, seed):
    src = np.random.default_rng(seed).standard_normal((h, w, 1))
    H, W = h + dy, w + dx
    out = upsample_bilinear(FeatureMap(src), H, W).data[..., 0]
    for i in range(H):
        y = i * (h - 1) / (H - 1)
        y0 = min(int(np.floor(y)), h - 2)
        for j in range(W):
            x = j * (w - 1) / (W - 1)
            x0 = min(int(np.floor(x)), w - 2)
            cell = src[y0:y0 + 2, x0:x0 + 2, 0]
            assert cell.min() - 1e-12 <= out[i, j] <= cell.max() + 1e-12


# ---------------------------------------------------------------- quantization

def test_constant_image_single_cluster():
    qi = quantize(FeatureMap(np.full((5, 4, 3), 7.0)), k=256)
    assert qi.k == 1
    assert np.all(qi.labels == 0)
    assert qi.counts.tolist() == [20]


def test_two_colors_exact_fit():
    data = np.zeros((4, 4, 3))
    data[:, 2:] = 255.0
    qi = quantize(FeatureMap(data), k=2)
    assert qi.k == 2
    assert distortion(data.reshape(-1, 3), qi.centroids) == 0.0
    assert len(np.unique(qi.labels[:, :2])) == 1 and len(np.unique(qi.labels[:, 2:])) == 1
    assert qi.labels[0, 0] != qi.labels[0, 3]


def test_few_distinct_colors_is_exact_index(rng):
    palette = rng.uniform(0, 255, (5, 3))
    idx = rng.integers(0, 5, (10, 10))
    qi = quantize(FeatureMap(palette[idx]), k=256)
    assert qi.k == len(np.unique(idx))
    assert distortion(palette[idx].reshape(-1, 3), qi.centroids) == 0.0


def test_minibatch_distortion_close_to_lloyd_oracle():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((100, 3))
    init = kmeans_plusplus(X, 4, np.random.default_rng(1))
    C = minibatch_kmeans(X, init, batch=32, iters=100, rng=np.random.default_rng(2))
    # oracle: full-batch Lloyd to convergence from the same init, written out longhand
    L = init.copy()
    for _ in range(1000):
        d = ((X[:, None, :] - L[None, :, :]) ** 2).sum(axis=2)
        a = d.argmin(axis=1)
        new = np.array([X[a == j].mean(axis=0) if np.any(a == j) else L[j] for j in range(4)])
        if np.allclose(new, L, atol=0, rtol=0):
            break
        L = new
    lloyd = float(((X - L[((X[:, None, :] - L[None]) ** 2).sum(2).argmin(1)]) ** 2).sum())
    mb = distortion(X, C)
    assert mb >= lloyd * 0.95
    assert mb <= lloyd * 1.05


def test_quantize_is_deterministic_and_nearest(rng):
    fm = FeatureMap(rng.uniform(0, 255, (20, 20, 3)))
    a = quantize(fm, k=8, seed=3, batch=64, iters=20)
    b = quantize(fm, k=8, seed=3, batch=64, iters=20)
    assert np.array_equal(a.labels, b.labels)
    assert np.array_equal(a.centroids, b.centroids)
    assert a.k <= 8
    # every pixel sits at its nearest surviving centroid
    idx, _ = _nearest(fm.pixels(), a.centroids)
    assert np.array_equal(idx.reshape(20, 20), a.labels)


def test_quantize_relabeling_keeps_counts_and_distortion(rng):
    fm = FeatureMap(rng.uniform(0, 255, (12, 12, 3)))
    qi = quantize(fm, k=6, seed=1, batch=32, iters=30)
    perm = rng.permutation(qi.k)
    relabeled = QuantizedImage(perm[qi.labels], qi.k, qi.counts[np.argsort(perm)],
                               qi.centroids[np.argsort(perm)])
    assert sorted(relabeled.counts) == sorted(qi.counts)
    X = fm.pixels()
    assert distortion(X, relabeled.centroids) == pytest.approx(distortion(X, qi.centroids),
                                                               rel=1e-12)


def test_quantize_rejects_bad_k():
    with pytest.raises(ValueError):
        quantize(FeatureMap(np.zeros((2, 2, 1))), k=0)


@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6), st.integers(1, 3)),
              elements=st.floats(-1e3, 1e3)), st.integers(1, 5), st.integers(0, 100))
def test_quantize_output_is_valid(data, k, seed):
    qi = quantize(FeatureMap(data), k=k, seed=seed, batch=8, iters=5)
    assert 1 <= qi.k <= k
    assert qi.counts.sum() == data.shape[0] * data.shape[1]
    assert np.all(qi.counts > 0)
    assert np.all(np.isfinite(qi.centroids))
