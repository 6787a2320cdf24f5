"""Pure-numpy implementations of the hot kernels.

Every function here has a twin with the same signature in the compiled
``_ckernels`` module.  The SC decoder is vectorized across the batch axis, so
its Python overhead is paid once per tree node rather than once per block.
"""

import numpy as np

LLR_CLAMP = 40.0
EQUAL_TOL = 1e-12
# Decision LLRs this close to 0 are ties (rounding noise around exact ties
# would otherwise pick the bit) and decode to 0.
TIE_TOL = 1e-10


def polar_transform_inplace(x):
    """``x <- G_N x`` over GF(2) for every row of the uint8 array ``x``."""
    b, n = x.shape
    half = n // 2
    while half >= 1:
        v = x.reshape(b, n // (2 * half), 2, half)
        v[:, :, 0, :] ^= v[:, :, 1, :]
        half //= 2


# log1p(exp(-x)) < 2e-22 beyond this point and is dropped
CORR_CUTOFF = 50.0


def _corr(x):
    x = np.abs(x)
    return np.where(x < CORR_CUTOFF, np.log1p(np.exp(-np.minimum(x, CORR_CUTOFF))), 0.0)


def boxplus(a, b):
    """LLR of ``X1 xor X2`` from the LLRs of independent bits (log-sum-exp form)."""
    return np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b)) + _corr(a + b) - _corr(a - b)


def _sc(llr, selected, payload, u_out, x_out, post):
    n = llr.shape[1]
    if n == 1:
        lv = llr[:, 0]
        if post is not None:
            post[:, 0] = lv
        if selected[0]:
            u = payload[:, 0]
        else:
            u = (lv < -TIE_TOL).astype(np.uint8)
        u_out[:, 0] = u
        x_out[:, 0] = u
        return
    h = n // 2
    la, lb = llr[:, :h], llr[:, h:]
    sub_post = post[:, :h] if post is not None else None
    _sc(boxplus(la, lb), selected[:h], payload[:, :h], u_out[:, :h], x_out[:, :h], sub_post)
    v = x_out[:, :h]
    lplus = lb + (1.0 - 2.0 * v) * la
    sub_post = post[:, h:] if post is not None else None
    _sc(lplus, selected[h:], payload[:, h:], u_out[:, h:], x_out[:, h:], sub_post)
    x_out[:, :h] ^= x_out[:, h:]


def sc_decode(llr, selected, payload, u_out, x_out, post=None):
    """Successive-cancellation decode a batch of blocks.

    Parameters
    ----------
    llr : float64 array (B, N)
        Per-symbol posterior log-ratios ``ln P(x=0|y)/P(x=1|y)``.
    selected : uint8 array (N,)
        1 where the transform bit is supplied by ``payload``.
    payload : uint8 array (B, N)
        Transform-domain bits; read only at selected positions.
    u_out, x_out : uint8 arrays (B, N)
        Receive the decided transform bits and the re-encoded source block.
    post : float64 array (B, N), optional
        Receives the decision LLR of every transform bit.
    """
    _sc(llr, selected, payload, u_out, x_out, post)


def _h2(q):
    return -(q * np.log2(q) + (1 - q) * np.log2(1 - q))


def bin_edges(k):
    """Minority posteriors ``t_i`` with ``h(t_i) = i/k`` for ``i = 1..k-1``.

    A symbol with minority posterior ``q`` has entropy in ``[(i-1)/k, i/k)``
    exactly when ``t_{i-1} <= q < t_i``.
    """
    targets = np.arange(1, k, dtype=np.float64) / k
    lo = np.zeros_like(targets)
    hi = np.full_like(targets, 0.5)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            below = np.where(mid > 0, _h2(mid), 0.0) < targets
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return hi


def _bin_ids(p0, p1, k, edges=None):
    if edges is None:
        edges = bin_edges(k)
    py = p0 + p1
    nz = py > 0
    q0 = np.where(nz, p0 / np.where(nz, py, 1.0), 0.5)
    q1 = 1.0 - q0
    i = np.searchsorted(edges, np.minimum(q0, q1), side="right")
    ids = 2 * i + (q1 > q0)
    ids[np.abs(q0 - q1) <= EQUAL_TOL] = 2 * k
    return ids


def degrade(probs, k, edges=None):
    """Bin the rows of ``probs`` into the ``2k+1`` entropy bins.

    Returns dense masses of shape ``(2k+1, 2)``; row ``2(i-1)+j`` holds bin
    ``(i, j)`` and row ``2k`` the equal-posterior bin.  ``edges`` caches
    :func:`bin_edges` across calls.
    """
    p0 = np.ascontiguousarray(probs[:, 0])
    p1 = np.ascontiguousarray(probs[:, 1])
    ids = _bin_ids(p0, p1, k, edges)
    out = np.empty((2 * k + 1, 2))
    out[:, 0] = np.bincount(ids, weights=p0, minlength=2 * k + 1)
    out[:, 1] = np.bincount(ids, weights=p1, minlength=2 * k + 1)
    return out


def _minus_plus_parts(probs, step):
    p0, p1 = probs[:, 0], probs[:, 1]
    if step == 0:
        return [(np.outer(p0, p0) + np.outer(p1, p1), np.outer(p1, p0) + np.outer(p0, p1))]
    return [(np.outer(p0, p0), np.outer(p1, p1)), (np.outer(p1, p0), np.outer(p0, p1))]


def degrade_transform(probs, step, k, edges=None):
    """Minus (``step=0``) or plus (``step=1``) transform followed by :func:`degrade`."""
    if edges is None:
        edges = bin_edges(k)
    out = np.zeros((2 * k + 1, 2))
    for a, b in _minus_plus_parts(probs, step):
        a, b = a.ravel(), b.ravel()
        ids = _bin_ids(a, b, k, edges)
        out[:, 0] += np.bincount(ids, weights=a, minlength=2 * k + 1)
        out[:, 1] += np.bincount(ids, weights=b, minlength=2 * k + 1)
    return out
