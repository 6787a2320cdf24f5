import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from sipolar import codec, construct, dist
from sipolar.codec import CompressedBlock
from sipolar.construct import CodeSpec
from sipolar.errors import SipolarError, UnknownSymbolError

import oracles


def _code(n, selected):
    N = 1 << n
    return CodeSpec(n=n, h=np.zeros(N), z=np.zeros(N), selected=selected)


def test_transform_examples():
    assert codec.polar_transform([1, 0]).tolist() == [1, 0]
    assert codec.polar_transform([0, 1]).tolist() == [1, 1]
    assert codec.polar_transform([1, 0, 1, 1]).tolist() == [1, 1, 0, 1]
    with pytest.raises(SipolarError):
        codec.polar_transform([1, 0, 1])
    with pytest.raises(SipolarError):
        codec.polar_transform([2, 0])


@pytest.mark.parametrize("n", range(0, 5))
def test_transform_matches_matrix_exhaustively(n):
    xs, us = oracles.transform_words(n) if n <= 4 else (None, None)
    got = codec.polar_transform(xs.astype(np.uint8))
    assert np.array_equal(got, us)
    assert np.array_equal(codec.generator_matrix(n), oracles.kron_matrix(n))
    assert np.array_equal(codec.polar_transform(got), xs)


@given(st.integers(0, 10).flatmap(lambda n: hnp.arrays(np.uint8, (2, 1 << n), elements=st.integers(0, 1))))
def test_involution_and_linearity(pair):
    a, b = pair
    assert np.array_equal(codec.polar_transform(codec.polar_transform(a)), a)
    assert np.array_equal(codec.polar_transform(a ^ b), codec.polar_transform(a) ^ codec.polar_transform(b))


def test_llr_examples():
    s = dist.bsc_source(0.11)
    assert codec.llr_from_side_info(s, [0])[0] == pytest.approx(math.log(0.89 / 0.11), abs=1e-12)
    assert codec.llr_from_side_info(s, [0])[0] == pytest.approx(2.09074, abs=1e-5)
    assert codec.llr_from_side_info(dist.erasure_source(0.3), [2])[0] == 0.0
    assert codec.llr_from_side_info(dist.noiseless_source(), [1, 0]).tolist() == [-40.0, 40.0]
    with pytest.raises(UnknownSymbolError):
        codec.llr_from_side_info(s, [5])
    assert codec.LlrTable(s).lookup([5], strict=False)[0] == 0.0


def test_compress_examples():
    code = _code(2, [0, 1])
    blk = codec.compress([1, 0, 1, 1], code)
    assert blk.payload.tolist() == [1, 1]
    assert codec.compress([1, 0, 1, 1], _code(2, [])).payload.size == 0
    with pytest.raises(SipolarError):
        codec.compress([1, 0, 1], code)


def test_wire_format():
    code = _code(4, list(range(11)))
    x = np.array([1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1, 1, 0, 1, 0, 0], dtype=np.uint8)
    blk = codec.compress(x, code)
    data = blk.to_bytes()
    assert data[:8] == (16).to_bytes(8, "big")
    assert data[8:16] == (11).to_bytes(8, "big")
    assert len(data) == 16 + 2
    bits = "".join(str(b) for b in blk.payload) + "00000"
    assert data[16:] == int(bits, 2).to_bytes(2, "big")
    back = CompressedBlock.from_bytes(data, code)
    assert np.array_equal(back.payload, blk.payload)
    with pytest.raises(SipolarError):
        CompressedBlock.from_bytes(data[:-1], code)
    with pytest.raises(SipolarError):
        CompressedBlock.from_bytes(data, _code(3, []))


@given(st.integers(0, 8), st.integers(0, 2**32 - 1))
def test_rate_one_roundtrip(n, seed):
    rng = np.random.default_rng(seed)
    N = 1 << n
    x = rng.integers(0, 2, N, dtype=np.uint8)
    code = _code(n, np.arange(N))
    llr = rng.normal(0, 10, N)
    assert np.array_equal(codec.decompress(codec.compress(x, code), llr), x)


def test_noiseless_side_info_rate_zero(rng):
    s = dist.noiseless_source()
    x = rng.integers(0, 2, 64, dtype=np.uint8)
    code = _code(6, [])
    assert np.array_equal(codec.decompress(codec.compress(x, code), codec.llr_from_side_info(s, x)), x)


def test_ties_decode_to_zero():
    code = _code(3, [])
    x_hat, u_hat, post = codec.sc_decode(np.zeros(8), code, [], return_posteriors=True)
    assert u_hat.tolist() == [0] * 8 and x_hat.tolist() == [0] * 8
    assert np.all(post == 0)


def test_payload_mismatch():
    with pytest.raises(SipolarError):
        codec.sc_decode(np.zeros(4), _code(2, [0, 1]), [1])
    with pytest.raises(SipolarError):
        codec.sc_decode(np.zeros(8), _code(2, [0, 1]), [1, 0])


@pytest.mark.parametrize("n", [1, 2, 3])
def test_posteriors_match_enumeration(n, rng):
    N = 1 << n
    for _ in range(15):
        s = dist.random_source(rng, int(rng.integers(1, 5)))
        masses = s.as_dict()
        ls_x = rng.integers(0, 2, N)
        y = rng.choice(s.ids, N)
        sel = np.flatnonzero(rng.random(N) < 0.5)
        code = _code(n, sel)
        payload = codec.polar_transform(ls_x.astype(np.uint8))[sel]
        llr = codec.llr_from_side_info(s, y)
        _, u_hat, post = codec.sc_decode(llr, code, payload, return_posteriors=True)
        want = oracles.sc_posteriors(masses, [int(v) for v in y], u_hat)
        got = 1.0 / (1.0 + np.exp(-post))
        assert np.allclose(got, want, atol=1e-9)


def test_batch_equals_single(rng):
    s = dist.bsc_source(0.2)
    code = construct.select_indices(construct.construct_degraded(s, 6, 16), rate=0.8)
    x = rng.integers(0, 2, (10, 64), dtype=np.uint8)
    y = x ^ (rng.random(x.shape) < 0.2)
    llr = codec.llr_from_side_info(s, y)
    batch = codec.sc_decode(llr, code, codec.compress_batch(x, code))
    for b in range(10):
        assert np.array_equal(batch[b], codec.decompress(codec.compress(x[b], code), llr[b]))


def test_decoding_is_deterministic(rng):
    s = dist.bsc_source(0.11)
    code = construct.select_indices(construct.construct_degraded(s, 8, 16), rate=0.6)
    x = rng.integers(0, 2, 256, dtype=np.uint8)
    y = x ^ (rng.random(256) < 0.11)
    llr = codec.llr_from_side_info(s, y)
    blk = codec.compress(x, code)
    assert np.array_equal(codec.decompress(blk, llr), codec.decompress(blk, llr))
