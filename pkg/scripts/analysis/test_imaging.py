#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""影像管線：PNG 讀寫、色彩轉換、bicubic、退化、patch 對齊與資料集索引。

用法:
    python3 scripts/analysis/test_imaging.py
"""

import os
import sys

import numpy as np
import pytest
from PIL import Image

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", ".."))

from scripts.errors import DatasetError, ImageFormatError  # noqa: E402
from scripts.imaging import (  # noqa: E402
    DatasetIndex, PatchBatchSampler, bicubic_resize, degrade_directory, degrade_image, load_pair,
    load_png, modcrop, quantize, rgb_to_y, sample_patch_pair, save_png, synthesize_dataset,
    to_float, to_u8,
)
from scripts.imaging.resize import cubic  # noqa: E402


# ── PNG ───────────────────────────────────────────────────────
def test_png_round_trip(tmp_path):
    img = np.random.default_rng(0).integers(0, 256, size=(5, 7, 3), dtype=np.uint8)
    save_png(img, tmp_path / 'a.png')
    np.testing.assert_array_equal(load_png(tmp_path / 'a.png'), img)


def test_grayscale_expands_to_three_channels(tmp_path):
    gray = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
    Image.fromarray(gray).save(tmp_path / 'g.png')
    out = load_png(tmp_path / 'g.png')
    assert out.shape == (3, 4, 3)
    for c in range(3):
        np.testing.assert_array_equal(out[:, :, c], gray)


def test_sixteen_bit_rejected(tmp_path):
    Image.fromarray(np.full((4, 4), 1000, dtype=np.uint16)).save(tmp_path / 'deep.png')
    with pytest.raises(ImageFormatError, match='16-bit'):
        load_png(tmp_path / 'deep.png')


@pytest.mark.parametrize("mode", ["RGBA", "P", "LA"])
def test_unsupported_color_types(tmp_path, mode):
    Image.new(mode, (4, 4)).save(tmp_path / 'x.png')
    with pytest.raises(ImageFormatError):
        load_png(tmp_path / 'x.png')


def test_not_a_png(tmp_path):
    (tmp_path / 'fake.png').write_bytes(b'definitely not a png file at all, no sir')
    with pytest.raises(ImageFormatError):
        load_png(tmp_path / 'fake.png')
    with pytest.raises(ImageFormatError):
        load_png(tmp_path / 'missing.png')


def test_save_rejects_float(tmp_path):
    with pytest.raises(ImageFormatError):
        save_png(np.zeros((2, 2, 3)), tmp_path / 'f.png')


# ── 色彩 ──────────────────────────────────────────────────────
def test_float_conversion_is_channel_first():
    img = np.zeros((2, 3, 3), dtype=np.uint8)
    img[..., 0] = 255
    f = to_float(img)
    assert f.shape == (3, 2, 3) and f.dtype == np.float32
    assert f[0].min() == 1.0 and f[1].max() == 0.0


def test_u8_rounding_and_clamp():
    arr = np.array([0.5, -0.2, 1.7]).reshape(3, 1, 1)
    np.testing.assert_array_equal(to_u8(arr)[0, 0], [128, 0, 255])


def test_all_levels_survive_round_trip():
    levels = np.repeat(np.arange(256, dtype=np.uint8), 3).reshape(16, 16, 3)
    np.testing.assert_array_equal(to_u8(to_float(levels)), levels)
    f = to_float(levels)
    np.testing.assert_array_equal(quantize(f), f)


def test_luma_range():
    white = np.ones((3, 1, 1))
    black = np.zeros((3, 1, 1))
    assert rgb_to_y(white)[0, 0] == pytest.approx(235 / 255)
    assert rgb_to_y(black)[0, 0] == pytest.approx(16 / 255)
    gray = np.full((3, 1, 1), 0.5)
    assert rgb_to_y(gray)[0, 0] == pytest.approx((0.5 * 219 + 16) / 255)


# ── bicubic ──────────────────────────────────────────────────
def _cubic_oracle(row, out_len):
    """逐點直接加總的 cubic convolution（不做邊界處理）"""
    n = len(row)
    s = out_len / n
    out = np.zeros(out_len)
    for x in range(1, out_len + 1):
        u = x / s + 0.5 * (1 - 1 / s)
        idx = np.arange(1, n + 1)
        w = s * cubic(s * (u - idx)) if s < 1 else cubic(u - idx)
        out[x - 1] = np.sum(w * row) / np.sum(w)
    return out


def test_constant_preserved():
    img = np.full((3, 13, 9), 0.3)
    for h, w in ((6, 4), (26, 18), (13, 20)):
        np.testing.assert_allclose(bicubic_resize(img, h, w), 0.3, atol=1e-6)


def test_resize_is_linear():
    rng = np.random.default_rng(3)
    a, b = rng.random((10, 12)), rng.random((10, 12))
    lhs = bicubic_resize(2 * a - 3 * b, 5, 6)
    rhs = 2 * bicubic_resize(a, 5, 6) - 3 * bicubic_resize(b, 5, 6)
    np.testing.assert_allclose(lhs, rhs, atol=1e-5)


def test_downscale_matches_oracle_interior():
    row = np.random.default_rng(4).random(32)
    got = bicubic_resize(row[None, :], 1, 16)[0]
    np.testing.assert_allclose(got[3:-3], _cubic_oracle(row, 16)[3:-3], atol=1e-6)


def test_downscale_ramp_interior():
    ramp = np.arange(32, dtype=np.float64)
    got = bicubic_resize(ramp[None, :], 1, 16)[0]
    np.testing.assert_allclose(got[3:-3], 2 * np.arange(16)[3:-3] + 0.5, atol=1e-4)


def test_upscale_matches_oracle_interior():
    row = np.random.default_rng(5).random(10)
    got = bicubic_resize(row[None, :], 1, 20)[0]
    np.testing.assert_allclose(got[6:15], _cubic_oracle(row, 20)[6:15], atol=1e-6)


def test_resize_rejects_bad_sizes():
    with pytest.raises(ValueError):
        bicubic_resize(np.zeros((4, 4)), 0, 2)
    with pytest.raises(ValueError):
        bicubic_resize(np.zeros(4), 2, 2)


# ── 退化 ──────────────────────────────────────────────────────
def test_degrade_crops_then_shrinks():
    hr = np.random.default_rng(6).random((3, 17, 17)).astype(np.float32)
    lr = degrade_image(hr, 2)
    assert lr.shape == (8, 8, 3) and lr.dtype == np.uint8
    assert modcrop(hr, 2).shape == (3, 16, 16)
    assert modcrop(hr, 3).shape == (3, 15, 15)


def test_white_stays_white():
    assert np.all(degrade_image(np.ones((3, 12, 12), dtype=np.float32), 3) == 255)


def test_degrade_directory_is_reproducible(tmp_path):
    hr_dir = tmp_path / 'HR'
    rng = np.random.default_rng(7)
    for i in range(2):
        save_png(rng.integers(0, 256, size=(10, 11, 3), dtype=np.uint8), hr_dir / f'{i}.png')
    out1 = degrade_directory(hr_dir, tmp_path / 'a', 2, show_progress=False)
    out2 = degrade_directory(hr_dir, tmp_path / 'b', 2, show_progress=False)
    assert out1.name == 'LRx2'
    for p in sorted(out1.iterdir()):
        assert p.read_bytes() == (out2 / p.name).read_bytes()
    assert load_png(out1 / '0.png').shape == (5, 5, 3)


def test_degrade_empty_dir(tmp_path):
    (tmp_path / 'HR').mkdir()
    with pytest.raises(DatasetError):
        degrade_directory(tmp_path / 'HR', tmp_path / 'out', 2, show_progress=False)


def test_degrade_then_upscale_is_close_on_smooth_image():
    yy, xx = np.mgrid[0:64, 0:64] / 64.0
    plane = 0.5 + 0.2 * np.sin(2 * np.pi * xx) * np.cos(2 * np.pi * yy)
    hr = np.stack([plane, plane * 0.9, plane * 1.1]).astype(np.float32)
    lr = to_float(degrade_image(hr, 2))
    up = bicubic_resize(lr, 64, 64)
    diff = np.abs(up - hr)[:, 8:-8, 8:-8]
    assert diff.mean() < 0.005
    assert diff.max() < 0.02


# ── patch ─────────────────────────────────────────────────────
def _nearest_pair(h=9, w=7, scale=3, seed=0):
    lr = np.random.default_rng(seed).random((3, h, w)).astype(np.float32)
    hr = lr.repeat(scale, axis=1).repeat(scale, axis=2)
    return lr, hr


def test_patches_stay_aligned():
    pair = _nearest_pair()
    rng = np.random.default_rng(1)
    for _ in range(50):
        lr, hr = sample_patch_pair(rng, pair, 4, 3)
        assert lr.shape == (3, 4, 4) and hr.shape == (3, 12, 12)
        np.testing.assert_array_equal(hr, lr.repeat(3, axis=1).repeat(3, axis=2))


def test_full_image_patch():
    pair = _nearest_pair(h=5, w=5, scale=2)
    lr, hr = sample_patch_pair(np.random.default_rng(0), pair, 5, 2)
    np.testing.assert_array_equal(lr, pair[0])
    np.testing.assert_array_equal(hr, pair[1])


def test_patch_too_large():
    with pytest.raises(DatasetError):
        sample_patch_pair(np.random.default_rng(0), _nearest_pair(h=4, w=8, scale=2), 5, 2)
    with pytest.raises(DatasetError):
        PatchBatchSampler([_nearest_pair(h=4, w=8, scale=2)], 5, 2, 1)
    with pytest.raises(DatasetError):
        PatchBatchSampler([], 4, 2, 1)


def test_batch_rng_consumption():
    sampler = PatchBatchSampler([_nearest_pair(scale=2), _nearest_pair(scale=2, seed=1)], 4, 2, 3)
    a = np.random.default_rng(9)
    lr, hr = sampler.next_batch(a)
    assert lr.shape == (3, 3, 4, 4) and hr.shape == (3, 3, 8, 8)
    b = np.random.default_rng(9)
    for _ in range(3):
        b.integers(0, 2)
        b.integers(0, 6)
        b.integers(0, 4)
    assert a.bit_generator.state == b.bit_generator.state


# ── 資料集 ────────────────────────────────────────────────────
def test_synth_dataset_is_deterministic(tmp_path):
    a = synthesize_dataset(tmp_path / 'a', count=3, size=16, scale=2, seed=4, show_progress=False)
    b = synthesize_dataset(tmp_path / 'b', count=3, size=16, scale=2, seed=4, show_progress=False)
    assert a.names == ['tex_000', 'tex_001', 'tex_002']
    assert a.scale == 2
    for (la, ha), (lb, hb) in zip(a.pairs, b.pairs):
        assert la.read_bytes() == lb.read_bytes()
        assert ha.read_bytes() == hb.read_bytes()
    lr, hr = load_pair(*a.pairs[0], 2)
    assert lr.shape == (3, 8, 8) and hr.shape == (3, 16, 16)


def test_index_infers_scale(tmp_path):
    synthesize_dataset(tmp_path, count=1, size=24, scale=3, show_progress=False)
    index = DatasetIndex.from_dirs(tmp_path / 'LRx3', tmp_path / 'HR')
    assert index.scale == 3 and len(index) == 1


def test_index_errors(tmp_path):
    with pytest.raises(DatasetError):
        DatasetIndex.from_root(tmp_path / 'nowhere', 2)
    (tmp_path / 'HR').mkdir()
    (tmp_path / 'LRx2').mkdir()
    with pytest.raises(DatasetError, match='空'):
        DatasetIndex.from_root(tmp_path, 2)
    save_png(np.zeros((4, 4, 3), dtype=np.uint8), tmp_path / 'HR' / 'lonely.png')
    with pytest.raises(DatasetError, match='配對'):
        DatasetIndex.from_root(tmp_path, 2)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
