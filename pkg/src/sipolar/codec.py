"""Polar transform, side-information LLRs and successive-cancellation decoding.

The transform is ``u = G_N x`` over GF(2) with ``G_N = [[1, 1], [0, 1]]``
Kronecker-powered ``n`` times and no bit-reversal, so for ``N = 2`` it maps
``(x1, x2)`` to ``(x1 ^ x2, x2)``.  Transform index ``i`` carries the
synthetic source reached by the path spelled by the bits of ``i``, most
significant first, which is the order :mod:`sipolar.construct` uses.

All functions accept a single block (1-D) or a batch of blocks (2-D, one per
row).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ._backend import kernels as _kernels
from .construct import CodeSpec
from .dist import JointSource
from .errors import SipolarError, UnknownSymbolError

LLR_CLAMP = 40.0


def _as_bits(x) -> np.ndarray:
    x = np.asarray(x)
    if x.size and (x.min() < 0 or x.max() > 1):
        raise SipolarError("bit sequences must contain only 0 and 1")
    return x.astype(np.uint8)


def _check_pow2(n: int):
    if n < 1 or n & (n - 1):
        raise SipolarError(f"block length {n} is not a power of two")


def polar_transform(x, kernels=None) -> np.ndarray:
    """Return ``G_N x``; the map is its own inverse."""
    bits = _as_bits(x)
    single = bits.ndim == 1
    work = np.ascontiguousarray(np.atleast_2d(bits)).copy()
    _check_pow2(work.shape[1])
    (kernels or _kernels).polar_transform_inplace(work)
    return work[0] if single else work


def generator_matrix(n: int) -> np.ndarray:
    """Explicit ``G_N`` as a uint8 matrix (for conformance checks)."""
    g = np.ones((1, 1), dtype=np.uint8)
    f = np.array([[1, 1], [0, 1]], dtype=np.uint8)
    for _ in range(n):
        g = np.kron(f, g)
    return g


class LlrTable:
    """Posterior log-ratio lookup for the side symbols of a source.

    ``strict=False`` maps unknown or zero-probability symbols to 0 instead
    of raising; decoders use it when side information contains estimates.
    """

    def __init__(self, s: JointSource):
        order = np.argsort(s.ids, kind="stable")
        self.ids = s.ids[order]
        p = s.probs[order]
        self.support = p.sum(axis=1) > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            llr = np.log(p[:, 0]) - np.log(p[:, 1])
        llr = np.where(np.isnan(llr), 0.0, llr)
        self.llr = np.clip(llr, -LLR_CLAMP, LLR_CLAMP)

    def lookup(self, y, strict: bool = True) -> np.ndarray:
        y = np.asarray(y, dtype=np.int64)
        pos = np.searchsorted(self.ids, y)
        pos_c = np.minimum(pos, self.ids.size - 1)
        found = (self.ids[pos_c] == y) & self.support[pos_c]
        if strict and not found.all():
            bad = y[~found].ravel()[0]
            raise UnknownSymbolError(f"side symbol {int(bad)} not in the support of the source")
        return np.where(found, self.llr[pos_c], 0.0)


def llr_from_side_info(s: JointSource, y) -> np.ndarray:
    """``ln P(X=0|y_t)/P(X=1|y_t)`` per position, clamped to +-40."""
    return LlrTable(s).lookup(y)


def sc_decode(llr, code: CodeSpec, payload, return_posteriors: bool = False, kernels=None):
    """Successive-cancellation decoding.

    Parameters
    ----------
    llr : array (N,) or (B, N)
    code : CodeSpec
        ``code.selected`` are the transform positions supplied by ``payload``.
    payload : array (|selected|,) or (B, |selected|)
        Transform bits at the selected positions, increasing index order.
    return_posteriors : bool
        Also return the decision LLR of every transform bit, i.e.
        ``ln P(u_j=0 | y, u_0..u_{j-1}) / P(u_j=1 | ...)`` with the earlier
        bits set to their decoded values.

    Returns
    -------
    x_hat, or ``(x_hat, u_hat, posteriors)`` when ``return_posteriors``.
    """
    llr = np.asarray(llr, dtype=np.float64)
    single = llr.ndim == 1
    llr = np.ascontiguousarray(np.atleast_2d(llr))
    payload = np.atleast_2d(_as_bits(payload))
    b, n = llr.shape
    if n != code.N:
        raise SipolarError(f"LLR length {n} does not match blocklength {code.N}")
    if payload.shape != (b, code.selected.size) and not (code.selected.size == 0 and payload.size == 0):
        raise SipolarError(
            f"payload has {payload.shape[-1]} bits, code selects {code.selected.size}"
        )
    full = np.zeros((b, n), dtype=np.uint8)
    if code.selected.size:
        full[:, code.selected] = payload
    u_hat = np.empty((b, n), dtype=np.uint8)
    x_hat = np.empty((b, n), dtype=np.uint8)
    post = np.empty((b, n)) if return_posteriors else None
    (kernels or _kernels).sc_decode(llr, code.mask, full, u_hat, x_hat, post)
    if single:
        x_hat, u_hat = x_hat[0], u_hat[0]
        post = post[0] if post is not None else None
    if return_posteriors:
        return x_hat, u_hat, post
    return x_hat


@dataclass(frozen=True, eq=False)
class CompressedBlock:
    """Transform bits of one block restricted to the code's selected set."""

    code: CodeSpec
    payload: np.ndarray

    def __post_init__(self):
        payload = _as_bits(self.payload).reshape(-1)
        if payload.size != self.code.selected.size:
            raise SipolarError(
                f"payload has {payload.size} bits, code selects {self.code.selected.size}"
            )
        object.__setattr__(self, "payload", payload)

    def to_bytes(self) -> bytes:
        """8-byte big-endian N, 8-byte big-endian bit count, bits packed MSB first."""
        header = struct.pack(">QQ", self.code.N, self.payload.size)
        return header + np.packbits(self.payload, bitorder="big").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, code: CodeSpec) -> "CompressedBlock":
        if len(data) < 16:
            raise SipolarError("truncated block header")
        n, nbits = struct.unpack(">QQ", data[:16])
        if n != code.N:
            raise SipolarError(f"block has N={n}, code has N={code.N}")
        body = np.frombuffer(data[16:], dtype=np.uint8)
        if body.size != (nbits + 7) // 8:
            raise SipolarError("payload size does not match bit count")
        bits = np.unpackbits(body, bitorder="big")[:nbits]
        return cls(code, bits)


def compress(x, code: CodeSpec) -> CompressedBlock:
    x = _as_bits(x)
    if x.ndim != 1 or x.size != code.N:
        raise SipolarError(f"expected a block of {code.N} bits, got shape {x.shape}")
    u = polar_transform(x)
    return CompressedBlock(code, u[code.selected])


def compress_batch(x, code: CodeSpec) -> np.ndarray:
    """Payloads of a batch of blocks, shape ``(B, |selected|)``."""
    x = np.atleast_2d(_as_bits(x))
    if x.shape[1] != code.N:
        raise SipolarError(f"expected blocks of {code.N} bits, got {x.shape[1]}")
    return polar_transform(x)[:, code.selected]


def decompress(block: CompressedBlock, llr) -> np.ndarray:
    llr = np.asarray(llr, dtype=np.float64)
    if llr.shape != (block.code.N,):
        raise SipolarError(f"expected {block.code.N} LLRs, got shape {llr.shape}")
    return sc_decode(llr, block.code, block.payload)
