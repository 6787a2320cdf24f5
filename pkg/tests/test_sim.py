import json
import os
import subprocess
import sys

import numpy as np
import pytest

from sipolar import construct, dist, sim
from sipolar.errors import ConfigError


def cfg(**kw):
    base = dict(task="simulate", source={"kind": "bsc", "p": 0.05}, n=6, k=16, rate=0.5, trials=64, seed=7, batch=16)
    base.update(kw)
    return sim.ExperimentConfig(**base)


@pytest.mark.parametrize("field,kw", [
    ("task", {"task": "dance"}),
    ("n", {"n": 30}),
    ("k", {"k": 0}),
    ("z_threshold", {"z_threshold": 0.5}),
    ("trials", {"trials": -1}),
    ("batch", {"batch": 0}),
    ("seed", {"seed": None}),
    ("seed", {"seed": 1 << 64}),
    ("eps", {"eps": 2.0}),
    ("target", {"target": 0.0}),
])
def test_validation_names_the_field(field, kw):
    with pytest.raises(ConfigError) as info:
        cfg(**kw).validate()
    assert info.value.field == field


def test_unknown_field_rejected():
    with pytest.raises(ConfigError) as info:
        sim.ExperimentConfig.from_dict({"task": "simulate", "blocklength": 3})
    assert info.value.field == "blocklength"


def test_config_dict_roundtrip():
    c = cfg(order=(2, 1), ns=(10, 12))
    assert sim.ExperimentConfig.from_dict(json.loads(json.dumps(c.to_dict()))) == c


def test_zero_trials():
    rep = sim.run_simulation(cfg(trials=0))
    assert rep.results["block_errors"] == 0 and rep.results["block_error_rate"] is None


def test_trial_streams_are_independent_of_batching():
    a = sim.trial_rng(5, 3).random(4)
    b = sim.trial_rng(5, 3).random(4)
    c = sim.trial_rng(5, 4).random(4)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    ls = sim.qary_source(2, 0.2)
    x1, y1 = sim.sample_layered(ls, 9, range(10), 32)
    x2, y2 = sim.sample_layered(ls, 9, range(4, 10), 32)
    assert np.array_equal(x1[4:], x2) and np.array_equal(y1[4:], y2)


@pytest.mark.parametrize("task,extra", [
    ("simulate", {}),
    ("layered", {"source": {"kind": "qary", "m": 2, "p": 0.05}, "rate": None}),
    ("keygen", {"source": {"kind": "bsc", "p": 0.05}, "rate": None}),
    ("sw", {"source": {"kind": "chain", "users": 2, "p": 0.1, "q": 0.05}, "rate": None}),
])
def test_csv_identical_across_runs_and_batches(task, extra):
    a = sim.run_simulation(cfg(task=task, **extra)).to_csv()
    b = sim.run_simulation(cfg(task=task, **extra)).to_csv()
    c = sim.run_simulation(cfg(task=task, batch=64, **extra)).to_csv()
    assert a == b == c and a.count("\n") >= 2


def test_json_without_timings_is_stable():
    a = sim.run_simulation(cfg()).to_json(timings=False)
    b = sim.run_simulation(cfg()).to_json(timings=False)
    assert a == b and "timings_s" not in a


def test_csv_identical_across_backends(tmp_path):
    code = ("from sipolar import sim; import sys; "
            "c = sim.ExperimentConfig(task='simulate', source={'kind': 'bsc', 'p': 0.11}, n=8, k=16, "
            "rate=0.6, trials=200, seed=3); sys.stdout.write(sim.run_simulation(c).to_csv())")
    outs = []
    for b in ("python", "compiled"):
        from sipolar import _backend
        if b not in _backend.available():
            pytest.skip("compiled backend not built")
        env = dict(os.environ, SIPOLAR_BACKEND=b)
        outs.append(subprocess.run([sys.executable, "-c", code], env=env, check=True,
                                   capture_output=True, text=True).stdout)
    assert outs[0] == outs[1]


def test_success_is_monotone_in_selected_set():
    s = dist.bsc_source(0.11)
    spec = construct.build(s, 7, 16)
    tr = sim._Trials(s, spec, seed=1, trials=200, batch=100)
    counts = list(range(40, 129, 8))
    errs = [tr.errors(c) for c in counts]
    assert all(b <= a for a, b in zip(errs, errs[1:]))
    assert errs[-1] == 0


def test_bisection_matches_linear_scan():
    s = dist.bsc_source(0.11)
    spec = construct.build(s, 6, 16)
    tr = sim._Trials(s, spec, seed=2, trials=100, batch=100)
    count, errs = sim.smallest_count(tr, 0.05)
    linear = next(c for c in range(spec.N + 1) if tr.errors(c) <= 5)
    assert count == linear and errs <= 5


def test_scaling_rows():
    out = sim.scaling_study(dist.bsc_source(0.11), (8, 9), k=16, target=0.05, trials=100, seed=4)
    assert [r["N"] for r in out["rows"]] == [256, 512]
    for r in out["rows"]:
        assert r["rate"] is None or r["rate"] * r["N"] == r["count"]


def test_sources():
    with pytest.raises(ConfigError):
        sim.binary_source({"kind": "bsc"})
    s = sim.binary_source({"kind": "text", "text": "0 0.45 0.05\n1 0.05 0.45\n"})
    assert dist.cond_entropy(s) == pytest.approx(dist.cond_entropy(dist.bsc_source(0.1)), abs=1e-12)
    ch = sim.chain_users(3, 0.1, 0.2)
    assert ch.m == 3 and ch.table.sum() == pytest.approx(1.0)


def test_timing_helpers_shape():
    t = sim.codec_timing(ns=(6, 7), reps=1)
    assert len(t["rows"]) == 2 and np.isfinite(t["loglog_slope"])
    assert sim.loglog_slope([1, 2, 4], [1, 2, 4]) == pytest.approx(1.0)
