"""Onion-peeling codes for sources on ``2^m`` symbols.

``X`` is split into bit-planes, layer 1 being the least significant bit.
Layer ``i`` is coded as a binary source whose side information is ``Y``
together with the lower layers ``1..i-1``; the side symbol of layer ``i`` is
the integer ``y * 2^(i-1) + (x mod 2^(i-1))``.  Decoding runs layer by
layer and feeds decoded (not true) lower layers forward.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import codec, construct, dist
from .construct import CodeSpec
from .dist import JointSource
from .errors import SipolarError

BIT_ORDER = "lsb-first"


@dataclass(frozen=True, eq=False)
class LayeredSource:
    """Joint masses of ``X`` in ``[0, 2^m)`` and an integer side symbol.

    ``table[x, j]`` is ``P(X=x, Y=ys[j])``.
    """

    m: int
    ys: np.ndarray
    table: np.ndarray

    def __post_init__(self):
        ys = np.asarray(self.ys, dtype=np.int64).reshape(-1)
        table = np.asarray(self.table, dtype=np.float64)
        if self.m < 1:
            raise SipolarError("m must be at least 1")
        if table.shape != (1 << self.m, ys.size):
            raise SipolarError(f"table shape {table.shape} does not match m={self.m}, |Y|={ys.size}")
        if np.any(table < 0) or not np.all(np.isfinite(table)):
            raise SipolarError("masses must be finite and non-negative")
        if abs(table.sum() - 1.0) > 1e-10:
            raise SipolarError(f"masses sum to {float(table.sum())!r}, not 1")
        if np.unique(ys).size != ys.size or (ys.size and ys.min() < 0):
            raise SipolarError("side ids must be distinct non-negative integers")
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "table", table)

    @classmethod
    def from_masses(cls, masses: dict, m: int | None = None) -> "LayeredSource":
        """Build from ``{(x, y): mass}``; the alphabet is padded to ``2^m``."""
        if not masses:
            raise SipolarError("no masses given")
        xs = [int(x) for x, _ in masses]
        ys = sorted({int(y) for _, y in masses})
        need = max(1, int(max(xs)).bit_length())
        m = need if m is None else m
        if m < need:
            raise SipolarError(f"symbol {max(xs)} does not fit in m={m} bits")
        col = {y: j for j, y in enumerate(ys)}
        table = np.zeros((1 << m, len(ys)))
        for (x, y), p in masses.items():
            table[int(x), col[int(y)]] += p
        return cls(m, np.array(ys), table / table.sum())

    @classmethod
    def from_joint(cls, s: JointSource) -> "LayeredSource":
        return cls(1, s.ids, s.probs.T.copy())

    @classmethod
    def from_text(cls, text: str, m: int | None = None) -> "LayeredSource":
        """Parse lines ``x y mass`` (``#`` starts a comment)."""
        masses = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise SipolarError(f"line {lineno}: expected 'x y mass', got {line!r}")
            try:
                key = (int(parts[0]), int(parts[1]))
                masses[key] = masses.get(key, 0.0) + float(parts[2])
            except ValueError as exc:
                raise SipolarError(f"line {lineno}: {exc}") from None
        return cls.from_masses(masses, m)

    def to_text(self) -> str:
        lines = []
        for x in range(1 << self.m):
            for j, y in enumerate(self.ys):
                if self.table[x, j] > 0:
                    lines.append(f"{x} {int(y)} {float(self.table[x, j])!r}\n")
        return "".join(lines)

    def x_marginal(self) -> np.ndarray:
        return self.table.sum(axis=1)

    def cond_entropy(self) -> float:
        """``H(X|Y)`` in bits."""
        py = self.table.sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(self.table > 0, self.table * np.log2(self.table / py), 0.0)
        return float(-terms.sum())

    def entropy(self) -> float:
        px = self.x_marginal()
        px = px[px > 0]
        return float(-(px * np.log2(px)).sum())

    def sample(self, rng: np.random.Generator, size) -> tuple[np.ndarray, np.ndarray]:
        """Draw i.i.d. ``(x, y)`` pairs; ``size`` may be an int or a shape."""
        cdf = np.cumsum(self.table.ravel())
        cdf /= cdf[-1]
        flat = np.searchsorted(cdf, rng.random(size), side="right")
        flat = np.minimum(flat, cdf.size - 1)
        x, j = np.divmod(flat, self.ys.size)
        return x.astype(np.int64), self.ys[j]


def layer_marginal(ls: LayeredSource, i: int) -> JointSource:
    """Binary source of bit ``i`` (1-based) with side information ``(Y, bits 1..i-1)``."""
    if not 1 <= i <= ls.m:
        raise SipolarError(f"layer {i} out of range 1..{ls.m}")
    low = 1 << (i - 1)
    # reshape x as (high bits, bit i, low bits)
    t = ls.table.reshape(1 << (ls.m - i), 2, low, ls.ys.size).sum(axis=0)
    probs = np.stack([t[0], t[1]], axis=-1)  # (low, |Y|, 2)
    ids = ls.ys[None, :] * low + np.arange(low)[:, None]
    return JointSource.from_masses(probs.reshape(-1, 2), ids=ids.reshape(-1))


def side_symbols(y, lower_bits, i: int) -> np.ndarray:
    """Side symbols of layer ``i`` from ``y`` and the integer of layers ``1..i-1``."""
    return np.asarray(y, dtype=np.int64) * (1 << (i - 1)) + np.asarray(lower_bits, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class LayeredSpec:
    """One :class:`CodeSpec` per layer, least significant layer first."""

    specs: tuple
    layer_entropies: tuple = ()
    bit_order: str = BIT_ORDER
    extra: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.specs)

    @property
    def N(self) -> int:
        return self.specs[0].N

    @property
    def rates(self) -> list[float]:
        return [s.rate for s in self.specs]

    @property
    def sum_rate(self) -> float:
        return float(sum(self.rates))

    @property
    def slacks(self) -> list[float]:
        """Per-layer ``rate_i - H(layer i)``."""
        return [r - h for r, h in zip(self.rates, self.layer_entropies)]

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "bit_order": self.bit_order,
            "layer_entropies": list(self.layer_entropies),
            "codes": [s.to_dict() for s in self.specs],
            **({"extra": self.extra} if self.extra else {}),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "LayeredSpec":
        if d.get("bit_order", BIT_ORDER) != BIT_ORDER:
            raise SipolarError(f"unsupported bit order {d.get('bit_order')!r}")
        specs = tuple(CodeSpec.from_dict(c) for c in d["codes"])
        if len(specs) != d.get("m", len(specs)):
            raise SipolarError("layer count does not match m")
        return cls(specs, tuple(d.get("layer_entropies", ())), extra=d.get("extra", {}))

    @classmethod
    def from_json(cls, text: str) -> "LayeredSpec":
        return cls.from_dict(json.loads(text))


def layered_construct(
    ls: LayeredSource,
    n: int,
    k: int | None,
    eps: float | None = 0.05,
    z_threshold: float | None = None,
) -> LayeredSpec:
    """Build one code per layer.

    ``k=None`` uses the exact construction.  Layer ``i`` transmits
    ``ceil((mean h_i + eps) N)`` indices, or with ``z_threshold`` the indices
    whose ``z`` reaches the threshold.
    """
    specs, entropies = [], []
    for i in range(1, ls.m + 1):
        s = layer_marginal(ls, i)
        base = construct.build(s, n, k)
        if z_threshold is not None:
            spec = construct.select_indices(base, z_threshold=z_threshold)
        else:
            spec = construct.select_indices(base, rate=min(1.0, max(0.0, base.mean_h + eps)))
        specs.append(spec)
        entropies.append(dist.cond_entropy(s))
    return LayeredSpec(tuple(specs), tuple(entropies))


def bit_planes(x, m: int) -> np.ndarray:
    """``planes[..., i-1, :]`` is layer ``i`` of the symbols ``x``."""
    x = np.asarray(x, dtype=np.int64)
    if x.size and (x.min() < 0 or x.max() >= (1 << m)):
        raise SipolarError(f"symbols must lie in [0, {1 << m})")
    shifts = np.arange(m).reshape((m,) + (1,) * 1)
    return ((x[..., None, :] >> shifts) & 1).astype(np.uint8)


def layered_compress(spec: LayeredSpec, x) -> list[codec.CompressedBlock]:
    x = np.asarray(x)
    if x.ndim != 1 or x.size != spec.N:
        raise SipolarError(f"expected {spec.N} symbols, got shape {x.shape}")
    planes = bit_planes(x, spec.m)
    return [codec.compress(planes[i], spec.specs[i]) for i in range(spec.m)]


def layered_payloads(spec: LayeredSpec, x) -> list[np.ndarray]:
    """Batch form of :func:`layered_compress`: per-layer payload arrays ``(B, |selected_i|)``."""
    planes = bit_planes(np.atleast_2d(x), spec.m)
    return [codec.compress_batch(planes[:, i], spec.specs[i]) for i in range(spec.m)]


def decode_layers(ls: LayeredSource, spec: LayeredSpec, payloads, y, genie=None, return_u: bool = False):
    """Onion-peeling decode of a batch.

    Parameters
    ----------
    payloads : list of arrays ``(B, |selected_i|)``
    y : array ``(B, N)`` of side symbols
    genie : array ``(B, N)`` of true symbols, optional
        When given, every layer is decoded with the true lower layers as side
        information, which isolates its own error.

    Returns
    -------
    planes_hat : uint8 array ``(B, m, N)`` (plus transform bits ``(B, m, N)``
    when ``return_u``).
    """
    if ls.m != spec.m:
        raise SipolarError(f"source has {ls.m} layers, spec has {spec.m}")
    y = np.atleast_2d(np.asarray(y, dtype=np.int64))
    b, n = y.shape
    if n != spec.N:
        raise SipolarError(f"side information length {n} does not match N={spec.N}")
    if len(payloads) != spec.m:
        raise SipolarError(f"expected {spec.m} payloads, got {len(payloads)}")
    truth = bit_planes(np.atleast_2d(genie), ls.m) if genie is not None else None
    planes = np.empty((b, spec.m, n), dtype=np.uint8)
    us = np.empty((b, spec.m, n), dtype=np.uint8) if return_u else None
    lower = np.zeros((b, n), dtype=np.int64)
    for i in range(1, spec.m + 1):
        table = codec.LlrTable(layer_marginal(ls, i))
        llr = table.lookup(side_symbols(y, lower, i), strict=False)
        if return_u:
            xh, uh, _ = codec.sc_decode(llr, spec.specs[i - 1], np.atleast_2d(payloads[i - 1]),
                                        return_posteriors=True)
            us[:, i - 1] = uh
        else:
            xh = codec.sc_decode(llr, spec.specs[i - 1], np.atleast_2d(payloads[i - 1]))
        planes[:, i - 1] = xh
        feed = truth[:, i - 1] if truth is not None else xh
        lower = lower + (feed.astype(np.int64) << (i - 1))
    if return_u:
        return planes, us
    return planes


def assemble(planes: np.ndarray) -> np.ndarray:
    m = planes.shape[-2]
    weights = (1 << np.arange(m, dtype=np.int64))[:, None]
    return (planes.astype(np.int64) * weights).sum(axis=-2)


def layered_decompress(ls: LayeredSource, spec: LayeredSpec, blocks, y) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise SipolarError("expected a single block of side information")
    if len(blocks) != spec.m:
        raise SipolarError(f"expected {spec.m} blocks, got {len(blocks)}")
    planes = decode_layers(ls, spec, [b.payload[None, :] for b in blocks], y[None, :])
    return assemble(planes)[0]
