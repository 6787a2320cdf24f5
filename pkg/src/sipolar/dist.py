"""Finite joint distributions of a binary symbol and side information.

A :class:`JointSource` holds the masses ``P(X=0, Y=y)`` and ``P(X=1, Y=y)``
for every side symbol ``y``.  The single-step polarization transforms build
the distribution of ``(X1 xor X2, (Y1, Y2))`` (minus) and of
``(X2, (Y1, Y2, X1 xor X2))`` (plus) from two independent copies.

The Bhattacharyya coefficient uses the normalisation
``Z = 2 * sum_y sqrt(P(0, y) P(1, y))`` so that ``Z`` lies in ``[0, 1]``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import BudgetExceededError, SipolarError

MASS_TOL = 1e-12
DEFAULT_BUDGET = 10**6


class Step(enum.IntEnum):
    MINUS = 0
    PLUS = 1


TransformPath = tuple  # tuple[Step, ...], most significant step first


def path_for_index(i: int, n: int) -> tuple[Step, ...]:
    """Transform path of synthetic index ``i`` at depth ``n``.

    Bit ``n-1`` of ``i`` is the first step applied; a zero bit is MINUS.
    """
    if not 0 <= i < (1 << n):
        raise ValueError(f"index {i} out of range for depth {n}")
    return tuple(Step((i >> (n - 1 - t)) & 1) for t in range(n))


def index_for_path(path: Sequence[Step]) -> int:
    i = 0
    for step in path:
        i = (i << 1) | int(step)
    return i


@dataclass(frozen=True, eq=False)
class JointSource:
    """Joint masses of a binary ``X`` and an integer-labelled side symbol.

    Attributes
    ----------
    ids : ndarray of int64, shape (M,)
        Distinct side-symbol labels.
    probs : ndarray of float64, shape (M, 2)
        ``probs[j] = (P(X=0, Y=ids[j]), P(X=1, Y=ids[j]))``.
    """

    ids: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        ids = np.ascontiguousarray(self.ids, dtype=np.int64).reshape(-1)
        probs = np.ascontiguousarray(self.probs, dtype=np.float64).reshape(-1, 2)
        if ids.shape[0] != probs.shape[0]:
            raise SipolarError("ids and probs have different lengths")
        if probs.shape[0] == 0:
            raise SipolarError("source has an empty alphabet")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise SipolarError("masses must be finite and non-negative")
        total = probs.sum()
        if abs(total - 1.0) > MASS_TOL * max(1, probs.size) ** 0.5 + MASS_TOL:
            raise SipolarError(f"masses sum to {float(total)!r}, not 1")
        if np.unique(ids).shape[0] != ids.shape[0]:
            raise SipolarError("side-symbol ids are not distinct")
        ids.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_masses(cls, probs, ids=None, prune: bool = True) -> "JointSource":
        """Build a source from raw masses, renormalizing and pruning zeros.

        Without ``ids`` the symbols are labelled by row position, and the
        result skips the distinctness check.
        """
        probs = np.asarray(probs, dtype=np.float64).reshape(-1, 2)
        positional = ids is None
        if positional:
            ids = np.arange(probs.shape[0], dtype=np.int64)
        ids = np.asarray(ids, dtype=np.int64)
        if prune:
            keep = probs.sum(axis=1) > 0
            if not keep.all():
                probs, ids = probs[keep], ids[keep]
        total = probs.sum()
        if total <= 0 or not np.isfinite(total):
            raise SipolarError("source has no mass")
        probs = probs / total
        if positional and np.all(probs >= 0):
            return cls._trusted(ids, probs)
        return cls(ids, probs)

    @classmethod
    def _trusted(cls, ids: np.ndarray, probs: np.ndarray) -> "JointSource":
        obj = object.__new__(cls)
        ids = np.ascontiguousarray(ids, dtype=np.int64)
        probs = np.ascontiguousarray(probs, dtype=np.float64)
        ids.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(obj, "ids", ids)
        object.__setattr__(obj, "probs", probs)
        return obj

    @classmethod
    def from_mapping(cls, masses: Mapping[int, tuple[float, float]]) -> "JointSource":
        ids = sorted(masses)
        return cls(np.array(ids, dtype=np.int64), np.array([masses[y] for y in ids], dtype=np.float64))

    @property
    def size(self) -> int:
        return int(self.ids.shape[0])

    def side_marginal(self) -> np.ndarray:
        return self.probs.sum(axis=1)

    def x_marginal(self) -> np.ndarray:
        return self.probs.sum(axis=0)

    def posterior0(self) -> np.ndarray:
        """``P(X=0 | Y=y)`` per side symbol (nan where ``P(y)=0``)."""
        py = self.side_marginal()
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.probs[:, 0] / py

    def pruned(self) -> "JointSource":
        keep = self.probs.sum(axis=1) > 0
        if keep.all():
            return self
        return JointSource(self.ids[keep], self.probs[keep])

    def as_dict(self) -> dict[int, tuple[float, float]]:
        return {int(y): (float(a), float(b)) for y, (a, b) in zip(self.ids, self.probs)}

    def to_text(self) -> str:
        return "".join(f"{int(y)} {float(a)!r} {float(b)!r}\n" for y, (a, b) in zip(self.ids, self.probs))

    @classmethod
    def from_text(cls, text: str) -> "JointSource":
        """Parse the ``y p0 p1`` line format (``#`` starts a comment)."""
        ids, probs = [], []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise SipolarError(f"line {lineno}: expected 'y p0 p1', got {line!r}")
            try:
                ids.append(int(parts[0]))
                probs.append((float(parts[1]), float(parts[2])))
            except ValueError as exc:
                raise SipolarError(f"line {lineno}: {exc}") from None
        if not ids:
            raise SipolarError("no symbols in source description")
        return cls(np.array(ids, dtype=np.int64), np.array(probs, dtype=np.float64))


def bsc_source(p: float, prior0: float = 0.5) -> JointSource:
    """``Y = X xor noise`` with ``noise ~ Bernoulli(p)``."""
    q = 1.0 - prior0
    return JointSource.from_masses([[prior0 * (1 - p), q * p], [prior0 * p, q * (1 - p)]])


def erasure_source(eps: float) -> JointSource:
    """Uniform ``X`` observed through an erasure: symbols 0, 1 and 2 (erased)."""
    return JointSource.from_masses(
        [[(1 - eps) / 2, 0.0], [0.0, (1 - eps) / 2], [eps / 2, eps / 2]]
    )


def noiseless_source() -> JointSource:
    return JointSource.from_masses([[0.5, 0.0], [0.0, 0.5]])


def independent_source(prior0: float = 0.5, side: Sequence[float] = (1.0,)) -> JointSource:
    side = np.asarray(side, dtype=np.float64)
    return JointSource.from_masses(np.outer(side / side.sum(), [prior0, 1 - prior0]))


def random_source(rng: np.random.Generator, size: int, alpha: float = 1.0) -> JointSource:
    """Dirichlet-distributed joint masses on ``size`` side symbols."""
    return JointSource.from_masses(rng.dirichlet(np.full(2 * size, alpha)).reshape(size, 2))


def _binary_entropy_terms(p0: np.ndarray, p1: np.ndarray) -> np.ndarray:
    """Per-symbol ``P(y) h(P(X|y))`` in bits, with ``0 log 0 = 0``."""
    py = p0 + p1
    out = np.zeros_like(py)
    with np.errstate(divide="ignore", invalid="ignore"):
        for p in (p0, p1):
            m = p > 0
            out[m] -= p[m] * np.log2(p[m] / py[m])
    return out


def bhattacharyya(s: JointSource) -> float:
    z = 2.0 * float(np.sqrt(s.probs[:, 0] * s.probs[:, 1]).sum())
    return min(z, 1.0)


def cond_entropy(s: JointSource) -> float:
    """``H(X|Y)`` in bits."""
    h = float(_binary_entropy_terms(s.probs[:, 0], s.probs[:, 1]).sum())
    return min(max(h, 0.0), 1.0)


def _check_budget(size: int, budget: int | None):
    if budget is not None and size > budget:
        raise BudgetExceededError(
            f"exact alphabet of {size} symbols exceeds budget {budget}; "
            "use construct.construct_degraded instead"
        )


def minus_pair_masses(probs: np.ndarray) -> np.ndarray:
    """Unnormalized masses of the minus transform, shape ``(M*M, 2)``.

    Row ``a*M + b`` corresponds to side pair ``(y_a, y_b)``.
    """
    p0, p1 = probs[:, 0], probs[:, 1]
    out = np.empty((p0.size, p0.size, 2))
    out[..., 0] = np.outer(p0, p0) + np.outer(p1, p1)
    out[..., 1] = np.outer(p1, p0) + np.outer(p0, p1)
    return out.reshape(-1, 2)


def plus_pair_masses(probs: np.ndarray) -> np.ndarray:
    """Unnormalized masses of the plus transform, shape ``(2*M*M, 2)``.

    Row ``2*(a*M + b) + u`` corresponds to side triple ``(y_a, y_b, u)``.
    """
    p0, p1 = probs[:, 0], probs[:, 1]
    out = np.empty((p0.size, p0.size, 2, 2))
    out[:, :, 0, 0] = np.outer(p0, p0)
    out[:, :, 0, 1] = np.outer(p1, p1)
    out[:, :, 1, 0] = np.outer(p1, p0)
    out[:, :, 1, 1] = np.outer(p0, p1)
    return out.reshape(-1, 2)


def minus_transform(s: JointSource, budget: int | None = None) -> JointSource:
    """Distribution of ``(X1 xor X2, (Y1, Y2))``."""
    _check_budget(s.size * s.size, budget)
    return JointSource.from_masses(minus_pair_masses(s.probs))


def plus_transform(s: JointSource, budget: int | None = None) -> JointSource:
    """Distribution of ``(X2, (Y1, Y2, X1 xor X2))``."""
    _check_budget(2 * s.size * s.size, budget)
    return JointSource.from_masses(plus_pair_masses(s.probs))


def transform(s: JointSource, step: Step, budget: int | None = None) -> JointSource:
    if step == Step.MINUS:
        return minus_transform(s, budget)
    return plus_transform(s, budget)


def synthesize(s: JointSource, path: Iterable[Step], budget: int | None = DEFAULT_BUDGET) -> JointSource:
    """Apply ``path`` to ``s`` exactly, first step first.

    Raises :class:`BudgetExceededError` as soon as an intermediate alphabet
    would exceed ``budget`` symbols.
    """
    for step in path:
        s = transform(s, Step(step), budget)
    return s
