import numpy as np
import pytest

from sipolar import codec, sim, swsim
from sipolar.errors import SipolarError
from sipolar.swsim import MultiUserSource

TEXT = """# bits y mass
000 0 0.2
111 0 0.2
011 1 0.1
001 1 0.15
100 0 0.1
110 1 0.25
"""


def test_parse_and_entropy():
    src = MultiUserSource.from_text(TEXT)
    assert src.m == 3 and src.has_side
    # bits are written user 1 first: "100" means user 1 = 1
    assert src.table[1, 0] == pytest.approx(0.1)
    back = MultiUserSource.from_text(src.to_text())
    assert np.allclose(back.table, src.table)
    with pytest.raises(SipolarError):
        MultiUserSource.from_text("01 0 0.5\n011 0 0.5\n")


def test_exact_sum_rate_is_joint_entropy():
    src = MultiUserSource.from_text(TEXT)
    code = swsim.sw_construct(src, 3, None, eps=0.05)
    h = src.cond_entropy()
    assert sum(code.layers.layer_entropies) == pytest.approx(h, abs=1e-10)
    # exact metrics average to each user's conditional entropy
    assert sum(s.mean_h for s in code.layers.specs) == pytest.approx(h, abs=1e-10)
    assert 0 <= code.sum_rate - h <= sum(code.layers.slacks) + 1e-10


def test_order_changes_rates_not_sum():
    src = MultiUserSource.from_text(TEXT)
    a = swsim.sw_construct(src, 2, None, eps=0.0, order=(1, 2, 3))
    b = swsim.sw_construct(src, 2, None, eps=0.0, order=(3, 2, 1))
    assert sum(a.layers.layer_entropies) == pytest.approx(sum(b.layers.layer_entropies), abs=1e-10)
    assert a.entropy(1) != pytest.approx(b.entropy(1))
    with pytest.raises(SipolarError):
        swsim.sw_construct(src, 2, None, order=(1, 1, 2))


def test_independent_uniform_users_no_side_info():
    src = MultiUserSource.from_text("00 0.25\n01 0.25\n10 0.25\n11 0.25\n")
    assert not src.has_side
    code = swsim.sw_construct(src, 3, None, eps=0.0)
    assert code.rate(1) == 1.0 and code.rate(2) == 1.0 and code.sum_rate == 2.0


def test_copied_user_costs_nothing(rng):
    src = MultiUserSource.from_text("00 0 0.3\n11 0 0.2\n00 1 0.1\n11 1 0.4\n")
    code = swsim.sw_construct(src, 4, None, eps=0.0)
    assert code.rate(2) == 0.0
    bits, y = src.sample(rng, 16)
    blocks = [swsim.sw_encode(code, u, bits[:, u - 1]) for u in (1, 2)]
    out = swsim.sw_decode(code, src, blocks, y)
    if np.array_equal(out[0], bits[:, 0]):
        assert np.array_equal(out[1], bits[:, 1])


def test_encoder_isolation(rng):
    src = MultiUserSource.from_text(TEXT)
    code = swsim.sw_construct(src, 3, 8, eps=0.05)
    block = rng.integers(0, 2, 8, dtype=np.uint8)
    ref = swsim.sw_encode(code, 2, block)
    assert np.array_equal(ref.payload, codec.compress(block, code.spec_for(2)).payload)
    # the encoder has no way to see other users; re-encoding gives the same payload
    for _ in range(3):
        assert np.array_equal(swsim.sw_encode(code, 2, block).payload, ref.payload)
    with pytest.raises(SipolarError):
        swsim.sw_encode(code, 4, block)


def test_rate_one_recovery(rng):
    src = MultiUserSource.from_text(TEXT)
    code = swsim.sw_construct(src, 3, 4, eps=1.0)
    assert all(code.rate(u) == 1.0 for u in (1, 2, 3))
    bits, _ = src.sample(rng, 8)
    blocks = [swsim.sw_encode(code, u, bits[:, u - 1]) for u in (1, 2, 3)]
    out = swsim.sw_decode(code, src, blocks, rng.integers(0, 2, 8))
    assert all(np.array_equal(out[u], bits[:, u]) for u in range(3))


def test_roundtrip_small(rng):
    src = sim.chain_users(3, 0.05, 0.05)
    code = swsim.sw_construct(src, 6, 16, eps=0.2)
    bits, y = src.sample(rng, 64)
    blocks = [swsim.sw_encode(code, u, bits[:, u - 1]) for u in (1, 2, 3)]
    out = swsim.sw_decode(code, src, blocks, y)
    assert len(out) == 3 and out[0].shape == (64,)


def test_code_dict_roundtrip():
    src = MultiUserSource.from_text(TEXT)
    code = swsim.sw_construct(src, 2, 4, order=(2, 3, 1))
    back = swsim.SwCode.from_dict(code.to_dict())
    assert back.order == (2, 3, 1)
    assert np.array_equal(back.spec_for(1).selected, code.spec_for(1).selected)
