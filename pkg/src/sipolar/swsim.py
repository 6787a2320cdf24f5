"""Distributed compression of correlated binary users with one central decoder.

User ``i`` observes bit ``X[i]`` and compresses it on its own.  The decoder
peels users in a fixed order, decoding each against ``Y`` and the estimates
of the users before it, which reaches a corner point of the rate region.
Internally a joint source over ``m`` users is a :class:`LayeredSource` whose
layer ``j`` is the ``j``-th user in decoding order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import codec, layered
from .errors import SipolarError
from .layered import LayeredSource, LayeredSpec


@dataclass(frozen=True, eq=False)
class MultiUserSource:
    """Joint masses over ``{0,1}^m`` (and an optional decoder side symbol).

    ``table[x, j]`` is the mass of user bits ``x`` (user ``i`` is bit ``i-1``)
    with side symbol ``ys[j]``.  Without side information ``ys == [0]``.
    """

    m: int
    ys: np.ndarray
    table: np.ndarray
    has_side: bool = True

    def __post_init__(self):
        # validation is shared with the layered representation
        LayeredSource(self.m, self.ys, self.table)

    @classmethod
    def from_masses(cls, masses: dict, m: int) -> "MultiUserSource":
        """``{(bits, y): mass}`` with ``bits`` a tuple or string, user 1 first; ``y=None`` for no side info."""
        has_side = any(y is not None for _, y in masses)
        conv = {}
        for (bits, y), p in masses.items():
            bits = [int(b) for b in bits]
            if len(bits) != m or any(b not in (0, 1) for b in bits):
                raise SipolarError(f"expected {m} user bits, got {bits}")
            x = sum(b << i for i, b in enumerate(bits))
            key = (x, 0 if y is None else int(y))
            conv[key] = conv.get(key, 0.0) + p
        ls = LayeredSource.from_masses(conv, m)
        return cls(m, ls.ys, ls.table, has_side)

    @classmethod
    def from_text(cls, text: str, m: int | None = None) -> "MultiUserSource":
        """Parse ``bits y mass`` or ``bits mass`` lines, ``bits`` written user 1 first (e.g. ``011``)."""
        masses = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if len(parts) == 3:
                    key = (parts[0], int(parts[1]))
                elif len(parts) == 2:
                    key = (parts[0], None)
                else:
                    raise ValueError(f"expected 'bits [y] mass', got {line!r}")
                masses[key] = masses.get(key, 0.0) + float(parts[-1])
            except ValueError as exc:
                raise SipolarError(f"line {lineno}: {exc}") from None
        if not masses:
            raise SipolarError("no masses given")
        widths = {len(b) for b, _ in masses}
        if len(widths) != 1:
            raise SipolarError("bit vectors of different lengths")
        width = widths.pop()
        if m is not None and m != width:
            raise SipolarError(f"source has {width} users, expected {m}")
        if len({y is None for _, y in masses}) > 1:
            raise SipolarError("side symbol given on some lines only")
        return cls.from_masses(masses, width)

    def to_text(self) -> str:
        lines = []
        for x in range(1 << self.m):
            bits = "".join(str((x >> i) & 1) for i in range(self.m))
            for j, y in enumerate(self.ys):
                p = float(self.table[x, j])
                if p > 0:
                    lines.append(f"{bits} {int(y)} {p!r}\n" if self.has_side else f"{bits} {p!r}\n")
        return "".join(lines)

    def ordered(self, order=None) -> LayeredSource:
        """Layered view whose layer ``j`` is user ``order[j-1]`` (1-based users)."""
        order = check_order(self.m, order)
        x = np.arange(1 << self.m)
        src_x = np.zeros_like(x)
        for j, user in enumerate(order):
            src_x |= ((x >> j) & 1) << (user - 1)
        return LayeredSource(self.m, self.ys, self.table[src_x])

    def cond_entropy(self) -> float:
        """``H(X[1..m] | Y)`` in bits."""
        return LayeredSource(self.m, self.ys, self.table).cond_entropy()

    def sample(self, rng, size):
        """``(users, y)``: user bits of shape ``size + (m,)`` and side symbols of shape ``size``."""
        x, y = LayeredSource(self.m, self.ys, self.table).sample(rng, size)
        bits = ((x[..., None] >> np.arange(self.m)) & 1).astype(np.uint8)
        return bits, y


def check_order(m: int, order) -> tuple:
    order = tuple(range(1, m + 1)) if order is None else tuple(int(u) for u in order)
    if sorted(order) != list(range(1, m + 1)):
        raise SipolarError(f"decoding order must be a permutation of 1..{m}, got {order}")
    return order


@dataclass(frozen=True, eq=False)
class SwCode:
    """Per-user codes; ``layers`` holds them in decoding ``order``."""

    layers: LayeredSpec
    order: tuple

    @property
    def m(self) -> int:
        return self.layers.m

    @property
    def N(self) -> int:
        return self.layers.N

    def spec_for(self, user: int):
        if user not in self.order:
            raise SipolarError(f"user {user} out of range 1..{self.m}")
        return self.layers.specs[self.order.index(user)]

    def rate(self, user: int) -> float:
        return self.spec_for(user).rate

    def entropy(self, user: int) -> float:
        return self.layers.layer_entropies[self.order.index(user)]

    @property
    def sum_rate(self) -> float:
        return self.layers.sum_rate

    def to_dict(self) -> dict:
        return {"order": list(self.order), **self.layers.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "SwCode":
        layers = LayeredSpec.from_dict(d)
        return cls(layers, check_order(layers.m, d.get("order")))


def sw_construct(src: MultiUserSource, n: int, k: int | None, eps: float | None = 0.05,
                 order=None, z_threshold: float | None = None) -> SwCode:
    """Build user codes, each against ``Y`` and the users decoded before it."""
    order = check_order(src.m, order)
    spec = layered.layered_construct(src.ordered(order), n, k, eps=eps, z_threshold=z_threshold)
    return SwCode(spec, order)


def sw_encode(code: SwCode, user: int, block) -> codec.CompressedBlock:
    """Compress user ``user``'s own block; nothing else is read."""
    return codec.compress(block, code.spec_for(user))


def sw_decode_batch(code: SwCode, src: MultiUserSource, payloads: dict, y, genie=None) -> np.ndarray:
    """Decode a batch.

    Parameters
    ----------
    payloads : dict user -> array ``(B, |selected|)``
    y : array ``(B, N)`` of side symbols (zeros when the source has none)
    genie : array ``(B, m, N)`` of true user blocks, optional
        Decode every user against the true blocks of earlier users.

    Returns
    -------
    uint8 array ``(B, m, N)``, user ``i`` at position ``i-1``.
    """
    ls = src.ordered(code.order)
    ordered_payloads = [np.atleast_2d(payloads[u]) for u in code.order]
    g = None
    if genie is not None:
        genie = np.asarray(genie)
        g = sum(genie[:, u - 1].astype(np.int64) << j for j, u in enumerate(code.order))
    planes = layered.decode_layers(ls, code.layers, ordered_payloads, y, genie=g)
    out = np.empty_like(planes)
    for j, u in enumerate(code.order):
        out[:, u - 1] = planes[:, j]
    return out


def sw_decode(code: SwCode, src: MultiUserSource, blocks, y=None) -> list[np.ndarray]:
    """Recover all users' blocks from their compressed blocks (user 1 first)."""
    if len(blocks) != code.m:
        raise SipolarError(f"expected {code.m} blocks, got {len(blocks)}")
    for u, b in enumerate(blocks, 1):
        if b.code.selected.size != code.spec_for(u).selected.size:
            raise SipolarError(f"block {u} does not match user {u}'s code")
    if y is None:
        if src.has_side:
            raise SipolarError("this source needs side information")
        y = np.full(code.N, src.ys[0])
    payloads = {u: b.payload[None, :] for u, b in enumerate(blocks, 1)}
    out = sw_decode_batch(code, src, payloads, np.asarray(y)[None, :])
    return [out[0, u] for u in range(code.m)]
