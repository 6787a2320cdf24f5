import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sipolar import construct, dist
from sipolar.construct import CodeSpec
from sipolar.dist import JointSource, Step
from sipolar.errors import SipolarError

import oracles

ERASURE_Q = [0.9375, 0.5625, 0.4375, 0.0625]


def test_degrade_examples():
    s = dist.bsc_source(0.11)
    d = construct.degrade(s, 1)
    assert d.size == 2
    assert dist.cond_entropy(d) == pytest.approx(0.499916, abs=1e-6)
    ind = construct.degrade(dist.independent_source(0.5, [0.2, 0.3, 0.5]), 7)
    assert ind.size == 1 and ind.ids[0] == 14
    assert dist.cond_entropy(ind) == pytest.approx(1.0)


def test_degrade_bijective_case_keeps_entropy():
    # posteriors 0.9, 0.2, 0.5 sit in distinct (ML symbol, bin) cells for k = 8
    s = JointSource.from_masses([[0.27, 0.03], [0.08, 0.32], [0.15, 0.15]])
    d = construct.degrade(s, 8)
    assert d.size == 3
    assert dist.cond_entropy(d) == pytest.approx(dist.cond_entropy(s), abs=1e-12)


def test_bin_labels_follow_entropy_intervals():
    k = 4
    # posterior q with h(q) just below and just above 1/4
    for q, want_bin in ((0.04, 1), (0.05, 2), (0.3, 4)):
        s = JointSource.from_masses([[1 - q, q]])
        label = int(construct.degrade(s, k).ids[0])
        assert label == 2 * (want_bin - 1) + 0, (q, oracles.h2(q), label)
        s = JointSource.from_masses([[q, 1 - q]])
        assert int(construct.degrade(s, k).ids[0]) == 2 * (want_bin - 1) + 1


@st.composite
def small_sources(draw):
    size = draw(st.integers(1, 4))
    seed = draw(st.integers(0, 2**32 - 1))
    return dist.random_source(np.random.default_rng(seed), size)


@given(small_sources(), st.integers(1, 20))
def test_degrade_only_increases(s, k):
    d = construct.degrade(s, k)
    assert d.size <= 2 * k + 1
    assert dist.cond_entropy(d) >= dist.cond_entropy(s) - 1e-12
    assert dist.bhattacharyya(d) >= dist.bhattacharyya(s) - 1e-12


def test_erasure_quadruple():
    s = dist.erasure_source(0.5)
    for spec in (construct.exact_construct(s, 2), construct.construct_degraded(s, 2, 1024)):
        assert np.allclose(spec.z, ERASURE_Q, atol=1e-12)
        assert np.allclose(spec.h, ERASURE_Q, atol=1e-12)


def test_exact_construct_matches_enumeration(rng):
    for size in (2, 3):
        s = dist.random_source(rng, size)
        masses = s.as_dict()
        for n in (1, 2):
            h, z = oracles.synthetic_metrics(masses, n)
            spec = construct.exact_construct(s, n)
            assert np.allclose(spec.h, h, atol=1e-12)
            assert np.allclose(spec.z, z, atol=1e-12)


def test_exact_construct_merge_is_lossless(rng):
    s = dist.random_source(rng, 3)
    a = construct.exact_construct(s, 3, merge=False)
    b = construct.exact_construct(s, 3, merge=True)
    assert np.allclose(a.h, b.h, atol=1e-10)
    assert np.allclose(a.z, b.z, atol=1e-10)


def test_bsc_degraded_matches_exact_at_fine_bins():
    s = dist.bsc_source(0.11)
    ex = construct.exact_construct(s, 3)
    dg = construct.construct_degraded(s, 3, 2**20)
    assert np.allclose(ex.h, dg.h, atol=1e-9)
    assert np.allclose(ex.z, dg.z, atol=1e-9)


def test_trivial_constructions():
    s = dist.random_source(np.random.default_rng(0), 3)
    spec = construct.exact_construct(s, 0)
    assert spec.h[0] == pytest.approx(dist.cond_entropy(s))
    assert construct.construct_degraded(s, 0, 5).N == 1
    nl = construct.exact_construct(dist.noiseless_source(), 4)
    assert np.all(nl.h == 0) and np.all(nl.z == 0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_chain_rule_of_exact_construction(n, rng):
    s = dist.random_source(rng, 4)
    assert construct.exact_construct(s, n).mean_h == pytest.approx(dist.cond_entropy(s), abs=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_sandwich_and_monotone_refinement(n, rng):
    s = dist.random_source(rng, 4)
    h = dist.cond_entropy(s)
    prev = None
    for k in (2, 4, 8, 16, 32):
        spec = construct.construct_degraded(s, n, k)
        excess = spec.mean_h - h
        assert -1e-12 <= excess <= construct.degradation_excess_bound(n, k)
        if prev is not None:
            # refining 2k bins from k bins never raises a metric
            assert np.all(spec.h <= prev.h + 1e-12)
        prev = spec


def test_z_bounds_examples():
    assert construct.propagate_z_bounds(0.1, [Step.PLUS]) == pytest.approx(0.01)
    assert construct.propagate_z_bounds(0.1, [Step.MINUS]) == pytest.approx(0.19)
    assert construct.propagate_z_bounds(0.3, []) == 0.3


@given(small_sources(), st.lists(st.sampled_from([Step.MINUS, Step.PLUS]), max_size=3), st.floats(0, 1))
def test_z_bounds_dominate(s, path, extra):
    z0 = dist.bhattacharyya(s)
    z0 = z0 + (1 - z0) * extra
    exact = construct.exact_construct(s, len(path)).z[dist.index_for_path(path)]
    assert construct.propagate_z_bounds(z0, path) >= exact - 1e-12


def test_bound_construct_dominates_exact():
    s = dist.bsc_source(0.11)
    b = construct.bound_construct(s, 3)
    e = construct.exact_construct(s, 3)
    assert np.all(b.z >= e.z - 1e-12)
    assert np.all(b.h >= e.h - 1e-12)


def test_selection_examples():
    spec = construct.exact_construct(dist.erasure_source(0.5), 2)
    assert construct.select_indices(spec, rate=0.5).selected.tolist() == [0, 1]
    assert construct.select_indices(spec, rate=1.0).selected.tolist() == [0, 1, 2, 3]
    assert construct.select_indices(spec, z_threshold=0.5).selected.tolist() == [0, 1]
    assert construct.select_indices(spec, h_threshold=0.5).selected.tolist() == [0, 1]
    assert construct.select_indices(spec, count=3).selected.tolist() == [0, 1, 2]
    with pytest.raises(SipolarError):
        construct.select_indices(spec)
    with pytest.raises(SipolarError):
        construct.select_indices(spec, rate=0.5, count=2)


def test_tie_breaking():
    spec = CodeSpec(n=2, h=[0.5, 0.5, 0.5, 0.1], z=[0.3, 0.6, 0.6, 0.2])
    assert construct.ranking(spec).tolist() == [1, 2, 0, 3]
    assert construct.select_indices(spec, count=1).selected.tolist() == [1]


@given(st.integers(1, 8), st.floats(0, 1))
def test_rate_mode_count(n, rate):
    spec = CodeSpec(n=n, h=np.linspace(0, 1, 1 << n), z=np.linspace(0, 1, 1 << n))
    sel = construct.select_indices(spec, rate=rate).selected
    assert sel.size == math.ceil(rate * (1 << n) - 1e-9)


@given(st.floats(0, 1), st.floats(0, 1))
def test_threshold_monotone(a, b):
    spec = construct.construct_degraded(dist.bsc_source(0.2), 4, 8)
    lo, hi = sorted((a, b))
    big = set(construct.select_indices(spec, z_threshold=lo).selected.tolist())
    small = set(construct.select_indices(spec, z_threshold=hi).selected.tolist())
    assert small <= big


def test_codespec_json_roundtrip():
    spec = construct.select_indices(construct.construct_degraded(dist.bsc_source(0.11), 4, 8), rate=0.5)
    back = CodeSpec.from_json(spec.to_json())
    assert back.n == 4 and back.k == 8
    assert np.array_equal(back.selected, spec.selected)
    assert np.array_equal(back.h, spec.h) and np.array_equal(back.z, spec.z)
    with pytest.raises(SipolarError):
        CodeSpec.from_dict({"n": 1})


def test_default_bins():
    assert construct.default_bins(3, 0.1, cap=None) == math.ceil(3 * 8 / 0.05)
    assert construct.default_bins(12, 0.05) == construct.MAX_DEFAULT_BINS
    with pytest.raises(SipolarError):
        construct.default_bins(3, 0)
