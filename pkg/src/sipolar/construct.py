"""Code construction: degraded tracking of synthetic sources and index selection.

Synthetic index ``i`` at depth ``n`` is reached by the transform path whose
first step is the most significant bit of ``i`` (0 = minus).  A construction
records, for every index, an upper bound on ``H`` and ``Z`` of the synthetic
source.  The degraded construction re-bins the side alphabet into at most
``2k+1`` symbols after every transform, which only increases ``H`` and ``Z``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import dist
from ._backend import kernels as _kernels
from ._pykernels import bin_edges
from .dist import JointSource, Step
from .errors import SipolarError

# Ceiling applied to the gap-driven bin count; see default_bins.
MAX_DEFAULT_BINS = 64
EXACT_BUDGET = 10**6


@dataclass(frozen=True, eq=False)
class CodeSpec:
    """Blocklength, per-index reliability metrics and the transmitted set.

    ``h`` and ``z`` are upper bounds on the conditional entropy (bits) and the
    Bhattacharyya coefficient of each synthetic source; they are exact when
    ``k`` is None.  ``selected`` lists the transmitted indices in increasing
    order.
    """

    n: int
    h: np.ndarray
    z: np.ndarray
    k: int | None = None
    selected: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    selection: dict = field(default_factory=dict)

    def __post_init__(self):
        h = np.clip(np.asarray(self.h, dtype=np.float64), 0.0, 1.0)
        z = np.clip(np.asarray(self.z, dtype=np.float64), 0.0, 1.0)
        sel = np.unique(np.asarray(self.selected, dtype=np.int64))
        if h.shape != (1 << self.n,) or z.shape != h.shape:
            raise SipolarError(f"expected {1 << self.n} metrics, got {h.shape} and {z.shape}")
        if sel.size and (sel[0] < 0 or sel[-1] >= h.size):
            raise SipolarError("selected index out of range")
        for a in (h, z, sel):
            a.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "selected", sel)

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def rate(self) -> float:
        return self.selected.size / self.N

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.N, dtype=np.uint8)
        m[self.selected] = 1
        return m

    @property
    def mean_h(self) -> float:
        """Average per-index entropy: an upper bound on ``H(X|Y)``."""
        return float(self.h.mean())

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "metrics": [{"h": float(a), "z": float(b)} for a, b in zip(self.h, self.z)],
            "selected": [int(i) for i in self.selected],
            "selection": self.selection,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "CodeSpec":
        try:
            metrics = d["metrics"]
            return cls(
                n=int(d["n"]),
                k=None if d.get("k") is None else int(d["k"]),
                h=[m["h"] for m in metrics],
                z=[m["z"] for m in metrics],
                selected=d.get("selected", []),
                selection=dict(d.get("selection", {})),
            )
        except (KeyError, TypeError) as exc:
            raise SipolarError(f"malformed code description: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "CodeSpec":
        return cls.from_dict(json.loads(text))


def check_bins(k: int) -> int:
    if int(k) != k or k < 1:
        raise SipolarError(f"bin parameter k must be a positive integer, got {k!r}")
    return int(k)


def default_bins(n: int, eps: float, cap: int | None = MAX_DEFAULT_BINS) -> int:
    """Bins per most-likely symbol so that the degradation excess is at most ``eps/2``.

    The excess bound is ``n 2^n / k``.  With ``cap`` set the result is
    clipped, trading the guarantee for construction time; pass ``cap=None``
    for the uncapped value.
    """
    if eps <= 0:
        raise SipolarError("eps must be positive")
    k = max(1, math.ceil(n * (1 << n) / (eps / 2)))
    return k if cap is None else min(k, cap)


def degradation_excess_bound(n: int, k: int) -> float:
    return n * (1 << n) / k


def _compact(dense: np.ndarray) -> np.ndarray:
    keep = dense.sum(axis=1) > 0
    out = dense[keep]
    return out / out.sum()


def degrade(s: JointSource, k: int) -> JointSource:
    """Merge side symbols into entropy bins.

    Bin ``(i, j)`` (label ``2(i-1)+j``) holds symbols whose most likely ``X``
    is ``j`` and whose posterior entropy lies in ``[(i-1)/k, i/k)``; label
    ``2k`` holds symbols with equal posteriors.
    """
    k = check_bins(k)
    dense = _kernels.degrade(s.probs, k)
    keep = np.flatnonzero(dense.sum(axis=1) > 0)
    probs = dense[keep]
    return JointSource._trusted(keep.astype(np.int64), probs / probs.sum())


def _metrics(probs: np.ndarray) -> tuple[float, float]:
    s = JointSource._trusted(np.arange(probs.shape[0]), probs)
    return dist.cond_entropy(s), dist.bhattacharyya(s)


def construct_degraded(s: JointSource, n: int, k: int, kernels=None) -> CodeSpec:
    """Track all ``2^n`` synthetic sources with a degradation step after each transform."""
    k = check_bins(k)
    if n < 0:
        raise SipolarError("depth must be non-negative")
    kern = kernels or _kernels
    edges = bin_edges(k)
    level = [s.probs]
    for _ in range(n):
        nxt = []
        for probs in level:
            for step in (0, 1):
                nxt.append(_compact(kern.degrade_transform(probs, step, k, edges)))
        level = nxt
    hz = np.array([_metrics(p) for p in level])
    return CodeSpec(n=n, h=hz[:, 0], z=hz[:, 1], k=k)


def _streamed_metrics(probs: np.ndarray, step: int) -> tuple[float, float]:
    """``H`` and ``Z`` of a transform of ``probs`` without storing its alphabet."""
    h = z = mass = 0.0
    m = probs.shape[0]
    p0, p1 = probs[:, 0], probs[:, 1]
    rows = max(1, 2**20 // m)
    for start in range(0, m, rows):
        a0, a1 = p0[start:start + rows], p1[start:start + rows]
        if step == 0:
            parts = [(np.outer(a0, p0) + np.outer(a1, p1), np.outer(a1, p0) + np.outer(a0, p1))]
        else:
            parts = [(np.outer(a0, p0), np.outer(a1, p1)), (np.outer(a1, p0), np.outer(a0, p1))]
        for a, b in parts:
            h += float(dist._binary_entropy_terms(a.ravel(), b.ravel()).sum())
            z += 2.0 * float(np.sqrt(a * b).sum())
            mass += float(a.sum() + b.sum())
    return min(max(h / mass, 0.0), 1.0), min(z / mass, 1.0)


def merge_equal_posteriors(s: JointSource, decimals: int = 10) -> JointSource:
    """Merge side symbols whose log posterior ratios agree to ``decimals`` places.

    The posterior is a sufficient statistic for ``X``, so the merged source
    has the same ``H`` and ``Z`` as ``s``, and so do all its synthetic
    sources, up to the rounding (relative error about ``10**-decimals``).
    """
    with np.errstate(divide="ignore"):
        key = np.round(np.log(s.probs[:, 0]) - np.log(s.probs[:, 1]), decimals)
    uniq, inv = np.unique(key, return_inverse=True)
    if uniq.size == s.size:
        return s
    probs = np.stack([np.bincount(inv, weights=s.probs[:, c], minlength=uniq.size) for c in (0, 1)], axis=1)
    return JointSource._trusted(np.arange(uniq.size, dtype=np.int64), probs)


def exact_construct(s: JointSource, n: int, budget: int | None = EXACT_BUDGET,
                    merge: bool = True) -> CodeSpec:
    """Exact ``H`` and ``Z`` of every synthetic source (test oracle).

    Levels ``0..n-1`` are materialized and must fit ``budget`` symbols each;
    the last level is streamed.  With ``merge`` the side symbols of each
    level are first reduced by :func:`merge_equal_posteriors`.
    """
    if n < 0:
        raise SipolarError("depth must be non-negative")
    if n == 0:
        return CodeSpec(n=0, h=[dist.cond_entropy(s)], z=[dist.bhattacharyya(s)], k=None)
    reduce = merge_equal_posteriors if merge else (lambda src: src)
    level = [reduce(s)]
    for _ in range(n - 1):
        level = [reduce(dist.transform(src, step, budget))
                 for src in level for step in (Step.MINUS, Step.PLUS)]
    hz = []
    for src in level:
        for step in (0, 1):
            hz.append(_streamed_metrics(src.probs, step))
    hz = np.array(hz)
    return CodeSpec(n=n, h=hz[:, 0], z=hz[:, 1], k=None)


def propagate_z_bounds(z0: float, path: Sequence[Step]) -> float:
    """Worst-case ``Z`` after ``path``: plus squares, minus maps ``z`` to ``2z - z^2``."""
    z = float(z0)
    for step in path:
        z = z * z if Step(step) == Step.PLUS else min(1.0, 2.0 * z - z * z)
    return z


def ranking(spec: CodeSpec) -> np.ndarray:
    """Indices ordered by decreasing ``h``, then decreasing ``z``, then increasing index."""
    idx = np.arange(spec.N)
    return np.lexsort((idx, -spec.z, -spec.h))


def select_indices(
    spec: CodeSpec,
    rate: float | None = None,
    z_threshold: float | None = None,
    h_threshold: float | None = None,
    count: int | None = None,
) -> CodeSpec:
    """Choose the transmitted set.

    Exactly one mode is used: ``rate`` (the ``ceil(rate N)`` highest-entropy
    indices), ``count`` (that many), ``z_threshold`` (indices with
    ``z >= threshold``) or ``h_threshold`` (indices with ``h >= threshold``).
    """
    given = [m for m, v in (("rate", rate), ("count", count), ("z_threshold", z_threshold),
                            ("h_threshold", h_threshold)) if v is not None]
    if len(given) != 1:
        raise SipolarError(f"exactly one selection mode required, got {given or 'none'}")
    mode = given[0]
    if mode == "rate":
        if not 0.0 <= rate <= 1.0:
            raise SipolarError(f"rate must be in [0, 1], got {rate}")
        count = math.ceil(rate * spec.N - 1e-9)
    if mode in ("rate", "count"):
        if not 0 <= count <= spec.N:
            raise SipolarError(f"count must be in [0, {spec.N}], got {count}")
        chosen = ranking(spec)[:count]
        value = rate if mode == "rate" else count
    elif mode == "z_threshold":
        if not 0.0 <= z_threshold <= 1.0:
            raise SipolarError("z_threshold must be in [0, 1]")
        chosen = np.flatnonzero(spec.z >= z_threshold)
        value = z_threshold
    else:
        if not 0.0 <= h_threshold <= 1.0:
            raise SipolarError("h_threshold must be in [0, 1]")
        chosen = np.flatnonzero(spec.h >= h_threshold)
        value = h_threshold
    return replace(spec, selected=np.sort(chosen), selection={"mode": mode, "value": value})


def build(s: JointSource, n: int, k: int | None) -> CodeSpec:
    """Exact construction when ``k`` is None, degraded otherwise."""
    return exact_construct(s, n) if k is None else construct_degraded(s, n, k)


def bound_construct(s: JointSource, n: int) -> CodeSpec:
    """Cheap upper bounds from ``Z`` alone, for blocklengths where tracking is too slow.

    ``z`` follows :func:`propagate_z_bounds` for every index and ``h`` uses
    ``H <= log2(1 + Z)``.  Both are looser than the degraded construction.
    """
    z = np.array([dist.bhattacharyya(s)])
    for _ in range(n):
        # index order: the first step applied is the most significant bit
        z = np.stack([np.minimum(1.0, 2.0 * z - z * z), z * z], axis=1).reshape(-1)
    return CodeSpec(n=n, h=np.log2(1.0 + z), z=z, k=None, selection={})
