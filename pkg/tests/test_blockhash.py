from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import ZIGZAG_TABLE, jacobi_eigvals, naive_dct2, sample_covariance
from percepthash.blockhash import (ALGORITHM_TAG, HASH_BITS, ZSCORE_TAG, BitHash, binarize,
                                   block_dct_features, block_histogram, extract_features,
                                   hash_image, inter_quantize)
from percepthash.imageio_prep import LumaImage, resize, standardize
from percepthash.metrics import ber


def test_histogram_examples():
    assert list(block_histogram(np.zeros((8, 8)))) == [64, 0, 0, 0, 0, 0, 0, 0]
    assert list(block_histogram(np.full((8, 8), 255.0))) == [0, 0, 0, 0, 0, 0, 0, 64]
    levels = np.repeat(np.arange(0, 256, 32), 8).reshape(8, 8)
    assert list(block_histogram(levels)) == [8] * 8


def test_histogram_bin_edges():
    block = np.zeros((8, 8))
    block[0, :4] = [31.99, 32.0, 223.9, 224.0]
    hist = block_histogram(block)
    assert hist[0] == 61 and hist[1] == 1 and hist[6] == 1 and hist[7] == 1


def test_dct_features_constant():
    assert np.allclose(block_dct_features(np.full((8, 8), 12.0)), [96, 0, 0, 0, 0, 0, 0, 0])


def test_dct_features_match_oracle_zigzag(rng):
    for _ in range(10):
        block = rng.uniform(0, 255, (8, 8))
        oracle = naive_dct2(block)
        assert np.allclose(block_dct_features(block), [oracle[r, c] for r, c in ZIGZAG_TABLE],
                           atol=1e-9)


def test_dct_features_transpose_symmetry(rng):
    block = rng.uniform(0, 255, (8, 8))
    a, b = block_dct_features(block), block_dct_features(block.T)
    assert a[0] == pytest.approx(b[0])
    # zigzag positions of (r, c) and (c, r)
    swap = {(r, c): ZIGZAG_TABLE.index((c, r)) for r, c in ZIGZAG_TABLE if (c, r) in ZIGZAG_TABLE}
    for i, rc in enumerate(ZIGZAG_TABLE):
        if rc in swap:
            assert a[i] == pytest.approx(b[swap[rc]], abs=1e-9)


def test_features_constant_image():
    feats = extract_features(LumaImage(np.full((64, 64), 100.0)))
    assert feats.shape == (64, 16)
    assert np.allclose(feats, [0, 0, 0, 64, 0, 0, 0, 0, 800, 0, 0, 0, 0, 0, 0, 0])


def test_features_block_locality():
    px = np.zeros((64, 64))
    px[16:24, 40:48] = 255.0  # block row 2, col 5 -> raster index 21
    feats = extract_features(LumaImage(px))
    differs = np.flatnonzero(np.any(feats != feats[0], axis=1))
    assert list(differs) == [21]


def test_features_lena_per_block_oracle(lena):
    std = standardize(lena).pixels
    feats = extract_features(LumaImage(std))
    for b in range(64):
        br, bc = divmod(b, 8)
        block = std[8 * br:8 * br + 8, 8 * bc:8 * bc + 8]
        hist = [int(np.sum((block >= 32 * i) & (block < 32 * (i + 1)))) for i in range(7)]
        hist.append(int(np.sum(block >= 224)))
        dct = naive_dct2(block)
        expected = hist + [dct[r, c] for r, c in ZIGZAG_TABLE]
        assert np.allclose(feats[b], expected, atol=1e-9)


def test_features_reject_nonstandard():
    with pytest.raises(ValueError):
        extract_features(LumaImage(np.zeros((32, 32))))


def test_inter_quantize_rank_one(rng):
    col = rng.normal(size=64)
    inter = inter_quantize(np.tile(col[:, None], (1, 16)))
    assert inter.shape == (10, 64)
    assert np.abs(inter[1:]).max() < 1e-8
    assert np.abs(inter[0]).max() > 0.1


def test_inter_quantize_constant_image():
    feats = extract_features(LumaImage(np.full((64, 64), 50.0)))
    assert not inter_quantize(feats).any()
    assert not inter_quantize(feats, standardize_columns=True).any()


@pytest.mark.parametrize("zscore", [False, True])
def test_inter_quantize_variance_matches_oracle(rng, zscore):
    feats = rng.normal(size=(64, 16)) * rng.uniform(1, 100, 16)
    inter = inter_quantize(feats, standardize_columns=zscore)
    data = feats
    if zscore:
        data = (feats - feats.mean(axis=0)) / feats.std(axis=0, ddof=1)
    oracle = jacobi_eigvals(sample_covariance(data))[:10]
    total = inter.var(axis=1, ddof=1).sum()
    assert abs(total - oracle.sum()) <= 1e-8 * oracle.sum()


def test_binarize_examples():
    inter = np.zeros((10, 64))
    inter[:, 0] = np.arange(1, 11)
    bits = binarize(inter).bits
    assert "".join(map(str, bits[:10])) == "0000011111"
    assert bits[10:].all()  # all-zero columns: 0 >= 0


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, 10, elements=st.floats(-1e6, 1e6), unique=True))
def test_distinct_column_has_five_ones(col):
    inter = np.tile(col[:, None], (1, 64))
    bits = binarize(inter).bits.reshape(64, 10)
    assert np.all(bits.sum(axis=1) == 5)


def test_binarize_column_major(rng):
    inter = rng.normal(size=(10, 64))
    bits = binarize(inter).bits
    for col in (0, 17, 63):
        med = np.median(inter[:, col])
        assert np.array_equal(bits[10 * col:10 * col + 10], (inter[:, col] >= med).astype(np.uint8))


def test_hash_length_and_determinism(rng):
    for shape in [(64, 64), (100, 37 + 27), (513, 300), (2048, 2048)]:
        img = LumaImage(rng.uniform(0, 255, shape))
        h = hash_image(img)
        assert h.bits.size == HASH_BITS
        assert h == hash_image(img)
        assert h.bits.sum() == 320


def test_hash_scale_independence(corpus):
    for name in ("lena", "aero", "camera", "moon"):
        img = corpus[name]
        assert ber(hash_image(img), hash_image(resize(img, 256, 256))).ber <= 0.05


def test_distinct_images(corpus):
    assert 0.35 <= ber(hash_image(corpus["lena"]), hash_image(corpus["barbara"])).ber <= 0.65


def test_serialization_roundtrip(lena):
    h = hash_image(lena)
    text = str(h)
    prefix, payload = text.split(":")
    assert prefix == f"{ALGORITHM_TAG}-v1"
    assert len(payload) == 160 and payload == payload.lower()
    assert BitHash.from_string(text) == h
    z = hash_image(lena, standardize_columns=True)
    assert str(z).startswith(ZSCORE_TAG + "-v1:")
    assert BitHash.from_string(str(z)) == z


@pytest.mark.parametrize("text", ["bdct-pca-v2:" + "0" * 160, "bdct-pca-v1:" + "0" * 159,
                                  "xyz-v1:" + "0" * 160, "0" * 160])
def test_bad_serialization(text):
    with pytest.raises(ValueError):
        BitHash.from_string(text)


def test_bithash_validation():
    with pytest.raises(ValueError):
        BitHash(np.zeros(639))
    with pytest.raises(ValueError):
        BitHash(np.full(640, 2))
