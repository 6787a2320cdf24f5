import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sipolar import codec, construct, dist, layered
from sipolar.construct import CodeSpec
from sipolar.errors import SipolarError
from sipolar.layered import LayeredSource, LayeredSpec


@st.composite
def layered_sources(draw, max_m=3, max_y=4):
    m = draw(st.integers(1, max_m))
    ny = draw(st.integers(1, max_y))
    seed = draw(st.integers(0, 2**32 - 1))
    t = np.random.default_rng(seed).dirichlet(np.ones((1 << m) * ny)).reshape(1 << m, ny)
    return LayeredSource(m, np.arange(ny) * 3 + 1, t)


@given(layered_sources())
def test_chain_rule(ls):
    total = sum(dist.cond_entropy(layered.layer_marginal(ls, i)) for i in range(1, ls.m + 1))
    assert total == pytest.approx(ls.cond_entropy(), abs=1e-10)


def test_layer_marginal_by_hand():
    # X uniform on 0..3, Y = X
    ls = LayeredSource.from_masses({(x, x): 0.25 for x in range(4)})
    for i in (1, 2):
        assert dist.cond_entropy(layered.layer_marginal(ls, i)) == 0.0
    s = layered.layer_marginal(ls, 2)
    # side id y * 2 + (bit 1 of x), and x = y
    assert sorted(s.ids.tolist()) == [0, 3, 4, 7]
    with pytest.raises(SipolarError):
        layered.layer_marginal(ls, 3)


def test_m1_is_the_source_itself():
    s = dist.bsc_source(0.11)
    ls = LayeredSource.from_joint(s)
    t = layered.layer_marginal(ls, 1)
    assert np.allclose(t.probs, s.probs) and np.array_equal(t.ids, s.ids)
    spec = layered.layered_construct(ls, 5, 16, eps=0.05)
    ref = construct.select_indices(construct.construct_degraded(s, 5, 16), rate=spec.specs[0].mean_h + 0.05)
    assert np.array_equal(spec.specs[0].selected, ref.selected)


def test_padding_to_power_of_two():
    ls = LayeredSource.from_masses({(0, 0): 0.3, (1, 0): 0.3, (2, 1): 0.4})
    assert ls.m == 2 and ls.table.shape == (4, 2)
    assert ls.table[3].sum() == 0


def test_text_roundtrip():
    ls = LayeredSource.from_text("# x y p\n0 0 0.4\n3 1 0.35\n2 1 0.25\n")
    back = LayeredSource.from_text(ls.to_text())
    assert np.allclose(back.table, ls.table)
    with pytest.raises(SipolarError):
        LayeredSource.from_text("0 0\n")


def test_first_layer_ignores_higher_layers(rng):
    t = rng.dirichlet(np.ones(8)).reshape(4, 2)
    a = LayeredSource(2, np.array([0, 1]), t)
    # swap the high bit's masses within each low-bit class
    t2 = t[[2, 3, 0, 1]]
    b = LayeredSource(2, np.array([0, 1]), t2)
    sa = layered.layered_construct(a, 3, 8, eps=0.05)
    sb = layered.layered_construct(b, 3, 8, eps=0.05)
    assert np.array_equal(sa.specs[0].h, sb.specs[0].h)


def test_sum_rate_within_slack(rng):
    t = rng.dirichlet(np.ones(12)).reshape(4, 3)
    ls = LayeredSource(2, np.arange(3), t)
    eps = 0.05
    spec = layered.layered_construct(ls, 3, None, eps=eps)
    h = ls.cond_entropy()
    assert sum(spec.layer_entropies) == pytest.approx(h, abs=1e-10)
    # ceil rounding adds at most 1/N per layer on top of eps
    assert h - 1e-12 <= spec.sum_rate <= h + 2 * (eps + 1 / spec.N) + 1e-12
    assert all(sl >= -1e-12 for sl in spec.slacks)


def test_deterministic_side_info_needs_nothing(rng):
    ls = LayeredSource.from_masses({(x, x): 0.125 for x in range(8)})
    spec = layered.layered_construct(ls, 4, 8, eps=0.0)
    assert spec.sum_rate == 0
    x = rng.integers(0, 8, 16)
    blocks = layered.layered_compress(spec, x)
    assert all(b.payload.size == 0 for b in blocks)
    assert np.array_equal(layered.layered_decompress(ls, spec, blocks, x), x)


def _rate_one(m, n):
    N = 1 << n
    full = CodeSpec(n=n, h=np.ones(N), z=np.ones(N), selected=np.arange(N))
    return LayeredSpec(tuple([full] * m), tuple([1.0] * m))


@given(layered_sources(max_m=3), st.integers(0, 2**32 - 1))
def test_rate_one_reassembly(ls, seed):
    rng = np.random.default_rng(seed)
    spec = _rate_one(ls.m, 3)
    x, _ = ls.sample(rng, 8)
    y = rng.integers(0, 50, 8)  # arbitrary, even unknown, side symbols
    got = layered.layered_decompress(ls, spec, layered.layered_compress(spec, x), y)
    assert np.array_equal(got, x)


def test_payloads_match_per_layer_codec():
    x = np.array([3, 0, 2, 1])
    code = CodeSpec(n=2, h=np.zeros(4), z=np.zeros(4), selected=[0, 1])
    spec = LayeredSpec((code, code), (0.0, 0.0))
    blocks = layered.layered_compress(spec, x)
    planes = [[1, 0, 0, 1], [1, 0, 1, 0]]
    for blk, plane in zip(blocks, planes):
        assert np.array_equal(blk.payload, codec.compress(plane, code).payload)
    empty = CodeSpec(n=2, h=np.zeros(4), z=np.zeros(4))
    assert all(b.payload.size == 0 for b in layered.layered_compress(LayeredSpec((empty, empty)), x))
    with pytest.raises(SipolarError):
        layered.layered_compress(spec, [0, 1, 2])


def test_spec_json_roundtrip(rng):
    t = rng.dirichlet(np.ones(8)).reshape(4, 2)
    spec = layered.layered_construct(LayeredSource(2, np.arange(2), t), 3, 4, eps=0.1)
    back = LayeredSpec.from_json(spec.to_json())
    assert back.m == 2 and back.bit_order == "lsb-first"
    assert all(np.array_equal(a.selected, b.selected) for a, b in zip(spec.specs, back.specs))
    d = spec.to_dict()
    d["bit_order"] = "msb-first"
    with pytest.raises(SipolarError):
        LayeredSpec.from_dict(d)


def test_genie_never_worse_than_onion_union(rng):
    from sipolar import sim

    ls = sim.qary_source(2, 0.1)
    spec = layered.layered_construct(ls, 7, 16, eps=0.05)
    e = sim.layered_errors(ls, spec, seed=3, trials=300)
    # the onion decoder fails exactly when some layer fails with true lower layers
    assert e["block_errors"] == e["isolated_any_errors"]
    assert e["block_errors"] <= sum(e["isolated_layer_errors"])
