"""Secret-key agreement from correlated observations.

Terminal A holds ``x`` (uniform on ``2^m`` symbols), terminal B holds ``y``.
For each bit-plane A transforms the plane and publishes the transform bits
at the code's selected (high-entropy) positions; the remaining positions
form the key.  B runs the layered decoder with the public bits as payload
and reads its key estimate off the decoded transform bits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import codec, layered
from .errors import BudgetExceededError, SipolarError
from .layered import LayeredSource, LayeredSpec

UNIFORM_TOL = 1e-9
AUDIT_MAX_BITS = 16


class NonUniformSourceError(SipolarError):
    """X is not uniform; degrade it to a uniform variable before key agreement."""


@dataclass(frozen=True, eq=False)
class KeyMaterial:
    """Public bits ``W`` and key bits ``K`` per layer."""

    public_w: tuple
    key_k: tuple
    rate_key: float

    def key_bits(self) -> np.ndarray:
        return np.concatenate([np.asarray(k, dtype=np.uint8) for k in self.key_k]) if self.key_k else np.zeros(0, np.uint8)

    def public_bits(self) -> np.ndarray:
        return np.concatenate([np.asarray(w, dtype=np.uint8) for w in self.public_w]) if self.public_w else np.zeros(0, np.uint8)


def key_sets(spec: LayeredSpec) -> list[np.ndarray]:
    """Per-layer key index sets (complements of the public sets)."""
    return [np.setdiff1d(np.arange(s.N), s.selected) for s in spec.specs]


def key_rate(spec: LayeredSpec) -> float:
    return spec.m - spec.sum_rate


def check_uniform(ls: LayeredSource, tol: float = UNIFORM_TOL):
    px = ls.x_marginal()
    dev = float(np.max(np.abs(px - 1.0 / px.size)))
    if dev > tol:
        raise NonUniformSourceError(
            f"X marginal deviates from uniform by {dev:.3g}; quantize or relabel X first"
        )


def keygen_construct(
    ls: LayeredSource,
    n: int,
    k: int | None,
    z_threshold: float | None = None,
    eps: float = 0.05,
) -> LayeredSpec:
    """Codes whose selected sets are published.

    With ``z_threshold`` layer ``i`` publishes the indices with ``z >= z_threshold``
    and keeps the rest as key; otherwise each layer publishes
    ``ceil((mean h_i + eps) N)`` indices.
    """
    check_uniform(ls)
    if z_threshold is not None:
        return layered.layered_construct(ls, n, k, eps=None, z_threshold=z_threshold)
    return layered.layered_construct(ls, n, k, eps=eps)


def derive_at_a(spec: LayeredSpec, x) -> KeyMaterial:
    x = np.asarray(x)
    if x.ndim != 1 or x.size != spec.N:
        raise SipolarError(f"expected {spec.N} symbols, got shape {x.shape}")
    planes = layered.bit_planes(x, spec.m)
    public, key = [], []
    for i, (code, ks) in enumerate(zip(spec.specs, key_sets(spec))):
        u = codec.polar_transform(planes[i])
        public.append(u[code.selected])
        key.append(u[ks])
    return KeyMaterial(tuple(public), tuple(key), key_rate(spec))


def derive_batch(spec: LayeredSpec, x) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Batch form of :func:`derive_at_a`: per-layer ``(B, .)`` public and key arrays."""
    planes = layered.bit_planes(np.atleast_2d(x), spec.m)
    public, key = [], []
    for i, (code, ks) in enumerate(zip(spec.specs, key_sets(spec))):
        u = codec.polar_transform(planes[:, i])
        public.append(u[:, code.selected])
        key.append(u[:, ks])
    return public, key


def recover_batch(spec: LayeredSpec, ls: LayeredSource, y, public) -> list[np.ndarray]:
    _, us = layered.decode_layers(ls, spec, public, y, return_u=True)
    return [us[:, i][:, ks] for i, ks in enumerate(key_sets(spec))]


def recover_at_b(spec: LayeredSpec, ls: LayeredSource, y, w) -> tuple:
    """Key estimate from B's observation ``y`` and the public material ``w``.

    ``w`` is a :class:`KeyMaterial` or a sequence of per-layer public bit arrays.
    """
    public = w.public_w if isinstance(w, KeyMaterial) else w
    if len(public) != spec.m:
        raise SipolarError(f"expected {spec.m} public layers, got {len(public)}")
    for code, p in zip(spec.specs, public):
        if np.asarray(p).size != code.selected.size:
            raise SipolarError("public bits do not match the code's selected set")
    y = np.asarray(y)
    keys = recover_batch(spec, ls, y[None, :], [np.asarray(p, dtype=np.uint8)[None, :] for p in public])
    return tuple(k[0] for k in keys)


def _entropy_bits(counts: dict) -> float:
    p = np.array(list(counts.values()), dtype=np.float64)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def secrecy_audit(spec: LayeredSpec, ls: LayeredSource) -> dict:
    """Exact ``H(K)``, ``H(W)``, ``H(K, W)`` and ``I(K; W)`` by enumerating all x-blocks.

    Requires ``N m <= 16``.
    """
    check_uniform(ls)
    total_bits = spec.N * spec.m
    if total_bits > AUDIT_MAX_BITS:
        raise BudgetExceededError(f"exact audit needs N*m <= {AUDIT_MAX_BITS}, got {total_bits}")
    px = ls.x_marginal()
    joint, pk, pw = {}, {}, {}
    blocks = np.array(list(itertools.product(range(1 << spec.m), repeat=spec.N)), dtype=np.int64)
    probs = np.prod(px[blocks], axis=1)
    public, key = derive_batch(spec, blocks)
    w_all = np.concatenate(public, axis=1) if public else np.zeros((blocks.shape[0], 0), np.uint8)
    k_all = np.concatenate(key, axis=1) if key else np.zeros((blocks.shape[0], 0), np.uint8)
    for w, kb, p in zip(w_all, k_all, probs):
        kw, ww = kb.tobytes(), w.tobytes()
        joint[(kw, ww)] = joint.get((kw, ww), 0.0) + p
        pk[kw] = pk.get(kw, 0.0) + p
        pw[ww] = pw.get(ww, 0.0) + p
    h_k, h_w, h_kw = _entropy_bits(pk), _entropy_bits(pw), _entropy_bits(joint)
    return {
        "key_bits": int(k_all.shape[1]),
        "public_bits": int(w_all.shape[1]),
        "key_entropy_bits": h_k,
        "public_entropy_bits": h_w,
        "mi_key_public_bits": max(0.0, h_k + h_w - h_kw),
        "key_given_public_bits": h_kw - h_w,
    }


# Gaussian sources.  X is quantized to 2^m equiprobable cells (uniform index),
# Y is quantized for code construction only; decoding uses exact densities.

def gaussian_key_source(rho: float, m: int, k_y: int = 64) -> LayeredSource:
    """Joint masses of (quantizer cell of X, quantizer cell of Y) for a standard pair."""
    from . import gaussquant

    if not -1.0 < rho < 1.0:
        raise SipolarError("rho must lie in (-1, 1)")
    qx = gaussquant.build_quantizer(1 << m)
    qy = gaussquant.build_quantizer(k_y)
    table = gaussquant.cell_pair_masses(qx, qy, rho)
    return LayeredSource(m, np.arange(k_y), table)


def gaussian_layer_llrs(rho: float, m: int, i: int, y, lower) -> np.ndarray:
    """Exact LLRs of bit ``i`` of the X cell index given real ``y`` and the lower bits."""
    from . import gaussquant

    q = gaussquant.build_quantizer(1 << m)
    lik = gaussquant.cell_likelihoods(q, rho, np.asarray(y, dtype=np.float64))  # (..., 2^m)
    cells = np.arange(1 << m)
    low = (1 << (i - 1)) - 1
    lower = np.asarray(lower, dtype=np.int64)[..., None]
    match = (cells & low) == lower
    bit = (cells >> (i - 1)) & 1
    p0 = np.where(match & (bit == 0), lik, 0.0).sum(axis=-1)
    p1 = np.where(match & (bit == 1), lik, 0.0).sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        llr = np.log(p0) - np.log(p1)
    llr = np.where(np.isnan(llr), 0.0, llr)
    return np.clip(llr, -codec.LLR_CLAMP, codec.LLR_CLAMP)


def gaussian_recover_batch(spec: LayeredSpec, rho: float, y, public) -> list[np.ndarray]:
    """Onion-peeling key recovery from real-valued ``y`` using exact Gaussian LLRs."""
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    lower = np.zeros(y.shape, dtype=np.int64)
    keys = []
    for i, (code, ks) in enumerate(zip(spec.specs, key_sets(spec)), start=1):
        llr = gaussian_layer_llrs(rho, spec.m, i, y, lower)
        xh, uh, _ = codec.sc_decode(llr, code, np.atleast_2d(public[i - 1]), return_posteriors=True)
        keys.append(uh[:, ks])
        lower = lower + (xh.astype(np.int64) << (i - 1))
    return keys
