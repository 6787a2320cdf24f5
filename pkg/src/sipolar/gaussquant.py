"""Equiprobable scalar quantizer of a standard Gaussian and related information measures.

For a standard pair ``(X, Y)`` with correlation ``rho``, ``X`` is mapped to
one of ``k`` equiprobable cells and reconstructed at the cell's conditional
mean.  ``X | Y=y`` is ``N(rho y, 1 - rho^2)``, so the cell posterior given
``y`` is a difference of normal CDFs; all quantities below are built on it.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import SipolarError

# Constant of the rate-loss bound, nudged above the sqrt(2/pi) + 2 sqrt(2 pi) threshold.
DEFAULT_C = math.sqrt(2 / math.pi) + 2 * math.sqrt(2 * math.pi) + 1e-6
QUAD_TOL = 1e-10
MC_CELLS = 4096
MC_SAMPLES = 200_000
_Y_SPAN = 12.0


@dataclass(frozen=True, eq=False)
class Quantizer:
    """``boundaries`` has ``k + 1`` entries from ``-inf`` to ``+inf``."""

    k: int
    boundaries: np.ndarray
    levels: np.ndarray

    @property
    def inner(self) -> np.ndarray:
        return self.boundaries[1:-1]

    def cell_probabilities(self) -> np.ndarray:
        return _interval_mass(self.boundaries[:-1], self.boundaries[1:])

    def second_moment(self) -> float:
        """``E[Xq^2]`` with every cell weighted ``1/k``."""
        return float(np.mean(self.levels ** 2))

    def mean(self) -> float:
        return float(np.mean(self.levels))


def _interval_mass(a, b, loc=0.0, scale=1.0):
    """``P(a <= Z < b)`` for ``Z ~ N(loc, scale^2)`` without cancellation in the upper tail."""
    za = (np.asarray(a) - loc) / scale
    zb = (np.asarray(b) - loc) / scale
    upper = za > 0
    with np.errstate(invalid="ignore"):
        lo_side = special.ndtr(zb) - special.ndtr(za)
        hi_side = special.ndtr(-za) - special.ndtr(-zb)
    return np.maximum(np.where(upper, hi_side, lo_side), 0.0)


@functools.lru_cache(maxsize=64)
def build_quantizer(k: int) -> Quantizer:
    """Boundaries at the normal quantiles ``i/k``; levels are cell conditional means."""
    if int(k) != k or k < 2:
        raise SipolarError(f"quantizer needs k >= 2 cells, got {k!r}")
    k = int(k)
    b = np.empty(k + 1)
    b[0], b[-1] = -np.inf, np.inf
    b[1:-1] = special.ndtri(np.arange(1, k) / k)
    dens = np.exp(-0.5 * b ** 2) / math.sqrt(2 * math.pi)  # zero at +-inf
    levels = k * (dens[:-1] - dens[1:])
    for a in (b, levels):
        a.setflags(write=False)
    return Quantizer(k, b, levels)


def quantize(q: Quantizer, x) -> tuple[np.ndarray, np.ndarray]:
    """Cell numbers (1-based, cells closed on the left) and reconstruction levels."""
    x = np.asarray(x, dtype=np.float64)
    cells = np.searchsorted(q.inner, x, side="right") + 1
    return cells, q.levels[cells - 1]


def induced_correlation(q: Quantizer, rho: float) -> float:
    """Correlation between the reconstruction and ``Y``: ``rho sqrt(E[Xq^2])``."""
    if abs(rho) > 1:
        raise SipolarError("|rho| must not exceed 1")
    return rho * math.sqrt(q.second_moment())


def _check_rho(rho: float):
    if not abs(rho) < 1:
        raise SipolarError(f"|rho| must be below 1, got {rho}")


def mi_gaussian(rho: float) -> float:
    """``I(X; Y)`` in bits for a jointly Gaussian pair."""
    _check_rho(rho)
    return -0.5 * math.log2(1.0 - rho * rho)


def mi_lower_bound(q: Quantizer, rho: float) -> float:
    """``1/2 log2 1/(1 - rt^2)`` with ``rt`` the induced correlation."""
    rt = induced_correlation(q, rho)
    return -0.5 * math.log2(1.0 - rt * rt)


def cell_likelihoods(q: Quantizer, rho: float, y) -> np.ndarray:
    """``P(X in cell i | Y = y)``, shape ``y.shape + (k,)``."""
    _check_rho(rho)
    y = np.asarray(y, dtype=np.float64)[..., None]
    s = math.sqrt(1.0 - rho * rho)
    return _interval_mass(q.boundaries[:-1], q.boundaries[1:], rho * y, s)


def _xlog2kx(c, k):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(c > 0, c * np.log2(k * c), 0.0)


def mi_quantized(q: Quantizer, rho: float, tol: float = QUAD_TOL, rng=None) -> float:
    """``I(Y; Xq)`` in bits.

    Cell ``i`` contributes ``int phi(y) c_i(y) log2(k c_i(y)) dy`` with ``c_i``
    the cell posterior; each is integrated adaptively.  Beyond
    :data:`MC_CELLS` cells a Monte Carlo average over ``Y`` is used instead
    (see :func:`mi_quantized_mc`).
    """
    _check_rho(rho)
    if rho == 0:
        return 0.0
    if q.k > MC_CELLS:
        return mi_quantized_mc(q, rho, rng=rng)[0]
    s = math.sqrt(1.0 - rho * rho)
    total = 0.0
    for i in range(q.k):
        a, b = q.boundaries[i], q.boundaries[i + 1]

        def f(y, a=a, b=b):
            c = float(_interval_mass(a, b, rho * y, s))
            return math.exp(-0.5 * y * y) / math.sqrt(2 * math.pi) * float(_xlog2kx(c, q.k))

        # the cell posterior is centered where rho*y sits in the cell
        mid = [v / rho for v in (a, b) if np.isfinite(v) and abs(v / rho) < _Y_SPAN]
        val, err = integrate.quad(f, -_Y_SPAN, _Y_SPAN, points=sorted(mid) or None,
                                  epsabs=tol, epsrel=1e-12, limit=200)
        if err > 1e-6:
            raise SipolarError(f"quadrature did not converge on cell {i + 1} (error {err:.2g})")
        total += val
    return total


def mi_quantized_mc(q: Quantizer, rho: float, samples: int = MC_SAMPLES, rng=None) -> tuple[float, float]:
    """Monte Carlo estimate of ``log2 k - E_Y[H(cell | Y)]`` and its standard error."""
    _check_rho(rho)
    rng = rng if rng is not None else np.random.default_rng(0)
    y = rng.standard_normal(samples)
    out = np.empty(samples)
    for start in range(0, samples, 1024):
        c = cell_likelihoods(q, rho, y[start:start + 1024])
        out[start:start + 1024] = _xlog2kx(c, q.k).sum(axis=-1)
    return float(out.mean()), float(out.std(ddof=1) / math.sqrt(samples))


def lemma7_bound(rho: float, k: int, C: float = DEFAULT_C) -> float:
    """Lower bound ``I(X;Y) - (log2 e / 2) rho^2 C / (1 - rho^2) sqrt(ln k / k)``; may be negative."""
    _check_rho(rho)
    penalty = 0.5 * math.log2(math.e) * rho * rho * C / (1.0 - rho * rho) * math.sqrt(math.log(k) / k)
    return mi_gaussian(rho) - penalty


def lemma7_threshold_scan(rho: float, ks=tuple(2 ** j for j in range(1, 11)),
                          C: float = DEFAULT_C, tol: float = 1e-5) -> dict:
    """Evaluate the bound over ``ks``; report rows and the smallest ``k`` from which it holds."""
    rows, smallest = [], None
    for k in ks:
        q = build_quantizer(k)
        mi = mi_quantized(q, rho)
        rhs = lemma7_bound(rho, k, C)
        ok = mi >= rhs - tol
        rows.append({"k": k, "mi_quantized": mi, "lemma7_rhs": rhs, "holds": bool(ok)})
        if ok and smallest is None:
            smallest = k
        elif not ok:
            smallest = None
    return {"rho": rho, "C": C, "rows": rows, "holds_from_k": smallest}


def _gauss_legendre_cells(edges: np.ndarray, nodes: int = 64):
    x, w = np.polynomial.legendre.leggauss(nodes)
    lo, hi = edges[:-1, None], edges[1:, None]
    pts = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    return pts, 0.5 * (hi - lo) * w


def cell_pair_masses(qx: Quantizer, qy: Quantizer, rho: float) -> np.ndarray:
    """``P(X in cell i, Y in cell j)``, shape ``(qx.k, qy.k)``.

    Integrates ``phi(y) P(X in cell i | y)`` over each Y cell by Gauss-Legendre
    rules (outer cells truncated at +-12), then rescales every row to the
    exact ``1/qx.k``.
    """
    _check_rho(rho)
    edges = np.clip(qy.boundaries, -_Y_SPAN, _Y_SPAN)
    pts, wts = _gauss_legendre_cells(edges)
    dens = np.exp(-0.5 * pts ** 2) / math.sqrt(2 * math.pi) * wts  # (ky, nodes)
    c = cell_likelihoods(qx, rho, pts)  # (ky, nodes, kx)
    table = np.einsum("jn,jni->ij", dens, c)
    table = np.maximum(table, 0.0)
    table *= (1.0 / qx.k) / table.sum(axis=1, keepdims=True)
    return table
