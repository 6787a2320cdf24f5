"""Monte Carlo experiments, the blocklength scaling study and timing runs.

Trial ``t`` of an experiment with seed ``s`` draws all of its randomness from
a Philox stream keyed by ``s`` whose counter starts at ``(0, 0, t, 0)``, so
trials never share random numbers and any subset of trials can be replayed
or run in parallel with identical results.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import codec, construct, dist, gaussquant, keygen, layered, swsim
from .construct import CodeSpec
from .dist import JointSource
from .errors import ConfigError, SipolarError

TASKS = ("construct", "encode", "decode", "simulate", "layered", "keygen", "gauss", "sw", "scaling")
STOCHASTIC = ("simulate", "layered", "keygen", "sw", "scaling")
SEED_TAG = "philox4x64(key=seed, counter=(0, 0, trial, 0))"
U64 = 1 << 64


def trial_rng(seed: int, t: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, t, 0]))


@dataclass
class ExperimentConfig:
    """Everything that determines an experiment's outcome.

    ``source`` is a dict with a ``kind`` key: ``bsc`` (``p``), ``erasure``
    (``eps``), ``noiseless``, ``qary`` (``m``, ``p``: X uniform on ``2^m``
    symbols, Y equal to X with probability ``1-p`` and otherwise uniform over
    the other symbols), ``chain`` (``users``, ``p``, ``q``: user bits form a
    Markov chain with flip probability ``p``, Y is the last user through a
    BSC(``q``)), ``gaussian`` (``rho``), or ``text`` / ``file`` holding a
    source in the textual formats.
    """

    task: str = "simulate"
    source: dict = field(default_factory=lambda: {"kind": "bsc", "p": 0.11})
    n: int = 10
    k: int | None = 64
    rate: float | None = None
    z_threshold: float | None = None
    count: int | None = None
    eps: float = 0.05
    trials: int = 1000
    seed: int | None = None
    batch: int = 256
    genie: bool = False
    order: tuple | None = None
    m: int | None = None
    target: float = 1e-2
    ns: tuple = (10, 12, 14)
    k_y: int = 64

    def validate(self) -> "ExperimentConfig":
        if self.task not in TASKS:
            raise ConfigError("task", f"must be one of {', '.join(TASKS)}")
        if not isinstance(self.source, dict) or "kind" not in self.source:
            raise ConfigError("source", "must be a mapping with a 'kind' key")
        if not 0 <= int(self.n) <= 24:
            raise ConfigError("n", "must lie in 0..24")
        if self.k is not None and (int(self.k) != self.k or self.k < 1):
            raise ConfigError("k", "must be a positive integer or omitted for exact construction")
        modes = [f for f in ("rate", "z_threshold", "count") if getattr(self, f) is not None]
        if len(modes) > 1:
            raise ConfigError(modes[1], f"conflicts with {modes[0]}; give one selection mode")
        if self.rate is not None and not 0 <= self.rate <= 1:
            raise ConfigError("rate", "must lie in [0, 1]")
        if self.z_threshold is not None and not 0 <= self.z_threshold <= 1:
            raise ConfigError("z_threshold", "must lie in [0, 1]")
        if self.count is not None and not 0 <= self.count <= (1 << self.n):
            raise ConfigError("count", f"must lie in [0, {1 << self.n}]")
        if not 0 <= self.eps <= 1:
            raise ConfigError("eps", "must lie in [0, 1]")
        if int(self.trials) != self.trials or self.trials < 0:
            raise ConfigError("trials", "must be a non-negative integer")
        if int(self.batch) != self.batch or self.batch < 1:
            raise ConfigError("batch", "must be a positive integer")
        if self.task in STOCHASTIC and self.seed is None:
            raise ConfigError("seed", f"required for the stochastic task {self.task!r}")
        if self.seed is not None and not 0 <= int(self.seed) < U64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        if not 0 < self.target < 1:
            raise ConfigError("target", "must lie in (0, 1)")
        if self.task == "scaling" and (not self.ns or any(not 8 <= v <= 18 for v in self.ns)):
            raise ConfigError("ns", "scaling depths must lie in 8..18")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ns"] = list(self.ns)
        d["order"] = None if self.order is None else list(self.order)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown configuration field")
        d = dict(d)
        if d.get("ns") is not None:
            d["ns"] = tuple(d["ns"])
        if d.get("order") is not None:
            d["order"] = tuple(d["order"])
        return cls(**d)


@dataclass
class SimReport:
    config: dict
    results: dict
    rows: list
    timings: dict = field(default_factory=dict)
    seed_tag: str = SEED_TAG

    def to_dict(self, timings: bool = True) -> dict:
        d = {"config": self.config, "seed_derivation": self.seed_tag, "results": self.results, "rows": self.rows}
        if timings:
            d["timings_s"] = self.timings
        return d

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(self.to_dict(timings), indent=1, default=_json_default)

    def to_csv(self) -> str:
        """Data rows only; timings never appear here."""
        buf = io.StringIO()
        if self.rows:
            cols = list(self.rows[0])
            w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
            w.writeheader()
            for r in self.rows:
                w.writerow({c: _fmt(r.get(c)) for c in cols})
        return buf.getvalue()


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


# Sources

def _source_text(src: dict) -> str:
    if src["kind"] == "file":
        try:
            return Path(src["path"]).read_text()
        except OSError as exc:
            raise ConfigError("source", f"cannot read {src.get('path')!r}: {exc.strerror}") from None
    return src["text"]


def _need(src: dict, *keys):
    for key in keys:
        if key not in src:
            raise ConfigError("source", f"kind {src['kind']!r} needs {key!r}")
    return [src[key] for key in keys]


def binary_source(src: dict) -> JointSource:
    kind = src["kind"]
    try:
        if kind == "bsc":
            (p,) = _need(src, "p")
            return dist.bsc_source(float(p), float(src.get("prior0", 0.5)))
        if kind == "erasure":
            (e,) = _need(src, "eps")
            return dist.erasure_source(float(e))
        if kind == "noiseless":
            return dist.noiseless_source()
        if kind in ("file", "text"):
            return JointSource.from_text(_source_text(src))
    except SipolarError as exc:
        raise ConfigError("source", str(exc)) from None
    raise ConfigError("source", f"kind {kind!r} is not a binary source")


def qary_source(m: int, p: float) -> layered.LayeredSource:
    size = 1 << m
    table = np.full((size, size), p / (size - 1) / size if size > 1 else 0.0)
    np.fill_diagonal(table, (1 - p) / size)
    return layered.LayeredSource(m, np.arange(size), table)


def chain_users(users: int, p: float, q: float) -> swsim.MultiUserSource:
    masses = {}
    for x in range(1 << users):
        bits = [(x >> i) & 1 for i in range(users)]
        px = 0.5
        for a, b in zip(bits, bits[1:]):
            px *= p if a != b else 1 - p
        for y in (0, 1):
            masses[(tuple(bits), y)] = px * (q if y != bits[-1] else 1 - q)
    return swsim.MultiUserSource.from_masses(masses, users)


def layered_source(src: dict, m: int | None = None) -> layered.LayeredSource:
    kind = src["kind"]
    try:
        if kind == "qary":
            mm, p = _need(src, "m", "p")
            return qary_source(int(mm), float(p))
        if kind in ("file", "text"):
            return layered.LayeredSource.from_text(_source_text(src), m)
        return layered.LayeredSource.from_joint(binary_source(src))
    except SipolarError as exc:
        raise ConfigError("source", str(exc)) from None


def multiuser_source(src: dict, m: int | None = None) -> swsim.MultiUserSource:
    kind = src["kind"]
    try:
        if kind == "chain":
            users, p, q = _need(src, "users", "p", "q")
            return chain_users(int(users), float(p), float(q))
        if kind in ("file", "text"):
            return swsim.MultiUserSource.from_text(_source_text(src), m)
    except SipolarError as exc:
        raise ConfigError("source", str(exc)) from None
    raise ConfigError("source", f"kind {kind!r} is not a multi-user source")


def select(cfg: ExperimentConfig, spec: CodeSpec) -> CodeSpec:
    if cfg.rate is not None:
        return construct.select_indices(spec, rate=cfg.rate)
    if cfg.z_threshold is not None:
        return construct.select_indices(spec, z_threshold=cfg.z_threshold)
    if cfg.count is not None:
        return construct.select_indices(spec, count=cfg.count)
    return construct.select_indices(spec, rate=min(1.0, spec.mean_h + cfg.eps))


# Trial sampling

def _sample_table(table: np.ndarray, seed: int, trials: range, N: int):
    """``(x, column)`` index arrays of shape ``(len(trials), N)`` drawn from a joint table."""
    cdf = np.cumsum(table.ravel())
    cdf /= cdf[-1]
    draws = np.empty((len(trials), N))
    for row, t in enumerate(trials):
        draws[row] = trial_rng(seed, t).random(N)
    flat = np.minimum(np.searchsorted(cdf, draws, side="right"), cdf.size - 1)
    return np.divmod(flat, table.shape[1])


def sample_layered(ls: layered.LayeredSource, seed: int, trials: range, N: int):
    x, j = _sample_table(ls.table, seed, trials, N)
    return x, ls.ys[j]


def _chunks(total: int, batch: int):
    for start in range(0, total, batch):
        yield range(start, min(total, start + batch))


# Tasks

def _simulate(cfg: ExperimentConfig, timings: dict) -> tuple[dict, list]:
    s = binary_source(cfg.source)
    t0 = time.perf_counter()
    spec = select(cfg, construct.build(s, cfg.n, cfg.k))
    timings["construct"] = time.perf_counter() - t0
    ls = layered.LayeredSource.from_joint(s)
    table = codec.LlrTable(s)
    block_err = bit_err = 0
    t0 = time.perf_counter()
    for trials in _chunks(cfg.trials, cfg.batch):
        x, y = sample_layered(ls, cfg.seed, trials, spec.N)
        x = x.astype(np.uint8)
        xh = codec.sc_decode(table.lookup(y), spec, codec.compress_batch(x, spec))
        wrong = xh != x
        block_err += int(wrong.any(axis=1).sum())
        bit_err += int(wrong.sum())
    timings["simulate"] = time.perf_counter() - t0
    res = {
        "N": spec.N,
        "rate": spec.rate,
        "cond_entropy": dist.cond_entropy(s),
        "trials": cfg.trials,
        "block_errors": block_err,
        "bit_errors": bit_err,
        "block_error_rate": block_err / cfg.trials if cfg.trials else None,
    }
    row = {"task": "simulate", "n": cfg.n, "N": spec.N, "rate": spec.rate, "trials": cfg.trials,
           "block_errors": block_err, "bit_errors": bit_err, "seed": cfg.seed}
    return res, [row]


def _layered(cfg: ExperimentConfig, timings: dict) -> tuple[dict, list]:
    ls = layered_source(cfg.source, cfg.m)
    t0 = time.perf_counter()
    spec = layered.layered_construct(ls, cfg.n, cfg.k, eps=cfg.eps, z_threshold=cfg.z_threshold)
    timings["construct"] = time.perf_counter() - t0
    errs = layered_errors(ls, spec, cfg.seed, cfg.trials, cfg.batch)
    timings["simulate"] = time.perf_counter() - t0 - timings["construct"]
    res = {
        "N": spec.N, "m": spec.m, "rates": spec.rates, "sum_rate": spec.sum_rate,
        "layer_entropies": list(spec.layer_entropies), "slacks": spec.slacks,
        "cond_entropy": ls.cond_entropy(), "trials": cfg.trials, **errs,
    }
    rows = [{"layer": i + 1, "rate": spec.rates[i], "errors": errs["layer_errors"][i],
             "isolated_errors": errs["isolated_layer_errors"][i], "trials": cfg.trials, "seed": cfg.seed}
            for i in range(spec.m)]
    rows.append({"layer": "all", "rate": spec.sum_rate, "errors": errs["block_errors"],
                 "isolated_errors": errs["isolated_any_errors"], "trials": cfg.trials, "seed": cfg.seed})
    return res, rows


def layered_errors(ls, spec, seed: int, trials: int, batch: int = 256) -> dict:
    """Onion-peeling errors and genie-aided (isolated) per-layer errors on the same trials."""
    m = spec.m
    layer_err = np.zeros(m, dtype=np.int64)
    iso_err = np.zeros(m, dtype=np.int64)
    block_err = iso_any = 0
    for chunk in _chunks(trials, batch):
        x, y = sample_layered(ls, seed, chunk, spec.N)
        payloads = layered.layered_payloads(spec, x)
        truth = layered.bit_planes(x, m)
        planes = layered.decode_layers(ls, spec, payloads, y)
        bad = (planes != truth).any(axis=2)
        # where every layer was right the genie decoder follows the same path
        gbad = bad.copy()
        rows = np.flatnonzero(bad.any(axis=1))
        if rows.size:
            genie = layered.decode_layers(ls, spec, [p[rows] for p in payloads], y[rows], genie=x[rows])
            gbad[rows] = (genie != truth[rows]).any(axis=2)
        layer_err += bad.sum(axis=0)
        iso_err += gbad.sum(axis=0)
        block_err += int(bad.any(axis=1).sum())
        iso_any += int(gbad.any(axis=1).sum())
    return {"block_errors": block_err, "layer_errors": layer_err.tolist(),
            "isolated_layer_errors": iso_err.tolist(), "isolated_any_errors": iso_any}


def _keygen(cfg: ExperimentConfig, timings: dict) -> tuple[dict, list]:
    t0 = time.perf_counter()
    gaussian = cfg.source["kind"] == "gaussian"
    if gaussian:
        (rho,) = _need(cfg.source, "rho")
        m = cfg.m or 1
        ls = keygen.gaussian_key_source(float(rho), m, cfg.k_y)
    else:
        ls = layered_source(cfg.source, cfg.m)
    base = keygen.keygen_construct(ls, cfg.n, cfg.k, z_threshold=cfg.z_threshold, eps=cfg.eps)
    if cfg.rate is not None or cfg.count is not None:
        specs = tuple(select(cfg, s) for s in base.specs)
        spec = layered.LayeredSpec(specs, base.layer_entropies)
    else:
        spec = base
    timings["construct"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    disagree = 0
    for chunk in _chunks(cfg.trials, cfg.batch):
        if gaussian:
            xr, yr = sample_gaussian_pairs(float(rho), cfg.seed, chunk, spec.N)
            x = gaussquant.quantize(gaussquant.build_quantizer(1 << spec.m), xr)[0] - 1
            public, key = keygen.derive_batch(spec, x)
            khat = keygen.gaussian_recover_batch(spec, float(rho), yr, public)
        else:
            x, y = sample_layered(ls, cfg.seed, chunk, spec.N)
            public, key = keygen.derive_batch(spec, x)
            khat = keygen.recover_batch(spec, ls, y, public)
        wrong = np.zeros(len(chunk), dtype=bool)
        for a, b in zip(key, khat):
            wrong |= (a != b).any(axis=1)
        disagree += int(wrong.sum())
    timings["simulate"] = time.perf_counter() - t0
    res = {
        "N": spec.N, "m": spec.m, "key_rate": keygen.key_rate(spec), "public_rate": spec.sum_rate,
        "public_rates": spec.rates, "mutual_information": ls.entropy() - ls.cond_entropy(),
        "trials": cfg.trials, "key_disagreements": disagree,
    }
    if spec.N * spec.m <= keygen.AUDIT_MAX_BITS:
        res["audit"] = keygen.secrecy_audit(spec, ls)
    row = {"N": spec.N, "m": spec.m, "key_rate": res["key_rate"], "public_rate": spec.sum_rate,
           "errors": disagree, "trials": cfg.trials, "seed": cfg.seed}
    return res, [row]


def sample_gaussian_pairs(rho: float, seed: int, trials: range, N: int):
    z = np.empty((len(trials), 2, N))
    for row, t in enumerate(trials):
        z[row] = trial_rng(seed, t).standard_normal((2, N))
    x = z[:, 0]
    y = rho * x + math.sqrt(1 - rho * rho) * z[:, 1]
    return x, y


def _sw(cfg: ExperimentConfig, timings: dict) -> tuple[dict, list]:
    src = multiuser_source(cfg.source, cfg.m)
    t0 = time.perf_counter()
    code = swsim.sw_construct(src, cfg.n, cfg.k, eps=cfg.eps, order=cfg.order, z_threshold=cfg.z_threshold)
    timings["construct"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    errs = sw_errors(src, code, cfg.seed, cfg.trials, cfg.batch)
    timings["simulate"] = time.perf_counter() - t0
    res = {
        "N": code.N, "m": code.m, "order": list(code.order),
        "rates": [code.rate(u) for u in range(1, code.m + 1)],
        "entropies": [code.entropy(u) for u in range(1, code.m + 1)],
        "sum_rate": code.sum_rate, "cond_entropy": src.cond_entropy(), "trials": cfg.trials, **errs,
    }
    key = "isolated_user_errors" if cfg.genie else "user_errors"
    rows = [{"user": u, "rate": code.rate(u), "errors": errs[key][u - 1], "trials": cfg.trials, "seed": cfg.seed}
            for u in range(1, code.m + 1)]
    return res, rows


def sw_errors(src, code, seed: int, trials: int, batch: int = 256) -> dict:
    m = code.m
    user_err = np.zeros(m, dtype=np.int64)
    iso_err = np.zeros(m, dtype=np.int64)
    block_err = 0
    ls = layered.LayeredSource(src.m, src.ys, src.table)
    for chunk in _chunks(trials, batch):
        x, y = sample_layered(ls, seed, chunk, code.N)
        bits = layered.bit_planes(x, m)  # (B, m, N), user u at u-1
        payloads = {u: codec.compress_batch(bits[:, u - 1], code.spec_for(u)) for u in range(1, m + 1)}
        out = swsim.sw_decode_batch(code, src, payloads, y)
        bad = (out != bits).any(axis=2)
        gbad = bad.copy()
        rows = np.flatnonzero(bad.any(axis=1))
        if rows.size:
            gen = swsim.sw_decode_batch(code, src, {u: p[rows] for u, p in payloads.items()}, y[rows],
                                        genie=bits[rows])
            gbad[rows] = (gen != bits[rows]).any(axis=2)
        user_err += bad.sum(axis=0)
        iso_err += gbad.sum(axis=0)
        block_err += int(bad.any(axis=1).sum())
    return {"block_errors": block_err, "user_errors": user_err.tolist(),
            "isolated_user_errors": iso_err.tolist()}


def _scaling(cfg: ExperimentConfig, timings: dict) -> tuple[dict, list]:
    s = binary_source(cfg.source)
    t0 = time.perf_counter()
    table = scaling_study(s, cfg.ns, cfg.k, cfg.target, cfg.trials, cfg.seed, cfg.batch)
    timings["scaling"] = time.perf_counter() - t0
    return {k: v for k, v in table.items() if k != "rows"}, table["rows"]


def run_simulation(cfg: ExperimentConfig) -> SimReport:
    cfg.validate()
    runners = {"simulate": _simulate, "layered": _layered, "keygen": _keygen, "sw": _sw, "scaling": _scaling}
    if cfg.task not in runners:
        raise ConfigError("task", f"{cfg.task!r} is not a simulation task")
    timings = {}
    res, rows = runners[cfg.task](cfg, timings)
    return SimReport(cfg.to_dict(), res, rows, timings)


# Scaling study

class _Trials:
    """Fixed trial set of one blocklength, decoded against nested selected sets."""

    def __init__(self, s: JointSource, spec: CodeSpec, seed: int, trials: int, batch: int):
        self.spec = spec
        self.order = construct.ranking(spec)
        self.table = codec.LlrTable(s)
        self.ls = layered.LayeredSource.from_joint(s)
        self.seed, self.trials, self.batch = seed, trials, batch
        self.decodes = 0

    def errors(self, count: int, limit: int | None = None) -> int:
        """Block errors with the ``count`` top-ranked indices; stops once ``limit`` is exceeded."""
        code = construct.select_indices(self.spec, count=count)
        errs = 0
        for chunk in _chunks(self.trials, self.batch):
            x, y = sample_layered(self.ls, self.seed, chunk, code.N)
            x = x.astype(np.uint8)
            xh = codec.sc_decode(self.table.lookup(y), code, codec.compress_batch(x, code))
            self.decodes += len(chunk)
            errs += int((xh != x).any(axis=1).sum())
            if limit is not None and errs > limit:
                return errs
        return errs


def smallest_count(trials: _Trials, target: float, lo: int = 0) -> tuple[int | None, int]:
    """Smallest number of transmitted indices whose block error is at most ``target``.

    With the same trials, enlarging the selected set along the ranking never
    turns a decoding success into a failure, so the error count is monotone
    in ``count`` and bisection finds the exact minimum.
    """
    N = trials.spec.N
    allowed = math.floor(target * trials.trials + 1e-9)
    hi = N
    if trials.errors(hi, allowed) > allowed:
        return None, -1
    if trials.errors(lo, allowed) <= allowed:
        return lo, trials.errors(lo)
    # invariant: errors(lo) > allowed >= errors(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if trials.errors(mid, allowed) <= allowed:
            hi = mid
        else:
            lo = mid
    return hi, trials.errors(hi)


def scaling_study(s: JointSource, ns, k: int | None = 64, target: float = 1e-2, trials: int = 1000,
                  seed: int = 0, batch: int = 256) -> dict:
    """Smallest rate reaching ``target`` block error at each ``N = 2^n`` and its gap to ``H(X|Y)``."""
    h = dist.cond_entropy(s)
    rows = []
    for n in ns:
        t0 = time.perf_counter()
        spec = construct.build(s, n, k)
        tc = time.perf_counter() - t0
        tr = _Trials(s, spec, seed, trials, batch)
        lo = max(0, math.floor(h * spec.N) - 1)
        t0 = time.perf_counter()
        count, errs = smallest_count(tr, target, lo=lo)
        ts = time.perf_counter() - t0
        rate = None if count is None else count / spec.N
        rows.append({
            "n": n, "N": spec.N, "count": count, "rate": rate,
            "gap": None if rate is None else rate - h,
            "errors": errs, "trials": trials, "target": target, "seed": seed,
            "_time_construct": tc, "_time_search": ts, "_decodes": tr.decodes,
        })
    gaps = [r["gap"] for r in rows]
    reached = [g is not None for g in gaps]
    monotone = all(reached) and all(b <= a for a, b in zip(gaps, gaps[1:]))
    slope = None
    pos = [(r["N"], r["gap"]) for r in rows if r["gap"] is not None and r["gap"] > 0]
    if len(pos) >= 2:
        slope = float(np.polyfit(np.log([p[0] for p in pos]), np.log([p[1] for p in pos]), 1)[0])
    timing = {r["N"]: {"construct": r.pop("_time_construct"), "search": r.pop("_time_search"),
                       "decodes": r.pop("_decodes")} for r in rows}
    return {"cond_entropy": h, "target": target, "rows": rows, "monotone": monotone,
            "unreachable": [r["N"] for r in rows if r["rate"] is None],
            "loglog_slope": slope, "timing": timing}


# Timing

def loglog_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def codec_timing(ns=range(10, 19), reps: int = 5, p: float = 0.11, rate: float = 0.6, seed: int = 0) -> dict:
    """Median wall-clock of compress + decompress of one block per ``N``.

    Codes come from :func:`construct.bound_construct` since only the running
    time matters here.
    """
    s = dist.bsc_source(p)
    ls = layered.LayeredSource.from_joint(s)
    table = codec.LlrTable(s)
    rows = []
    for n in ns:
        code = construct.select_indices(construct.bound_construct(s, n), rate=rate)
        x, y = sample_layered(ls, seed, range(reps), code.N)
        times = []
        for r in range(reps):
            xb = x[r].astype(np.uint8)
            t0 = time.perf_counter()
            block = codec.compress(xb, code)
            codec.decompress(block, table.lookup(y[r]))
            times.append(time.perf_counter() - t0)
        rows.append({"n": n, "N": code.N, "seconds": float(np.median(times))})
    slope = loglog_slope([r["N"] for r in rows], [r["seconds"] for r in rows])
    return {"rows": rows, "loglog_slope": slope}


def construction_timing(ns=range(6, 13), p: float = 0.11, eps: float = 0.05, reps: int = 1) -> dict:
    """Wall-clock of the degraded construction with the default bin count per ``n``."""
    s = dist.bsc_source(p)
    rows = []
    for n in ns:
        k = construct.default_bins(n, eps)
        times = []
        for _ in range(reps):
            t0 = time.perf_counter()
            construct.construct_degraded(s, n, k)
            times.append(time.perf_counter() - t0)
        rows.append({"n": n, "N": 1 << n, "k": k, "seconds": float(min(times))})
    slope = loglog_slope([r["N"] for r in rows], [r["seconds"] for r in rows])
    return {"rows": rows, "loglog_slope": slope}
