"""Pure numpy implementations of the hot kernels.

Every function here has a twin with an identical signature in the compiled
``_ckernels`` extension. :mod:`rbcx.kernels` picks one at import time.
"""

import numpy as np

NAME = "python"

# below this, the footprint collapses to a single triangle (cubic form cancels badly)
_THIN = 1e-3

_LBP_OFFSETS = [
    (-np.sin(2 * np.pi * p / 8), np.cos(2 * np.pi * p / 8)) for p in range(8)
]


def _footprint(x, a, b):
    """Projected bilinear pixel footprint at offset ``x`` (unit area).

    The projection of a tent x tent pixel basis along a direction with
    |cos| = a and |sin| = b is the convolution of two triangles of
    half-widths a and b, i.e. a piecewise cubic.
    """
    if a < _THIN or b < _THIN:
        h = max(a, b)
        return np.maximum(0.0, 1.0 - np.abs(x) / h) / h
    coef = ((-1.0, 1.0), (0.0, -2.0), (1.0, 1.0))
    total = np.zeros_like(x)
    for p, cp in coef:
        for q, cq in coef:
            total += cp * cq * np.maximum(x + p * a + q * b, 0.0) ** 3
    return total / (6.0 * a * a * b * b)


def radon_splat(img, cos_t, sin_t, length, origin):
    """Footprint-weighted splatting of every pixel into ``length`` bins.

    Pixel (i, j) projects to continuous bin coordinate
    ``(j - c) * cos_t + (i - c) * sin_t + origin`` with ``c = (N - 1) / 2``.
    Weights of each pixel are normalised to sum to one, so total mass is
    preserved exactly (up to rounding).
    """
    img = np.ascontiguousarray(img, dtype=np.float64)
    n_rows, n_cols = img.shape
    c = (n_cols - 1) / 2.0
    a, b = abs(cos_t), abs(sin_t)
    if a < _THIN or b < _THIN:
        reach = max(a, b)
    else:
        reach = a + b
    jj = np.arange(n_cols, dtype=np.float64) - c
    ii = np.arange(n_rows, dtype=np.float64) - (n_rows - 1) / 2.0
    t = (jj[None, :] * cos_t + ii[:, None] * sin_t + origin).ravel()
    v = img.ravel()
    k0 = np.floor(t - reach).astype(np.int64)
    span = int(np.ceil(2 * reach)) + 2
    ks = k0[None, :] + np.arange(span)[:, None]
    w = _footprint(ks - t[None, :], a, b)
    w /= w.sum(axis=0, keepdims=True)
    if ks.min() < 0 or ks.max() >= length:
        keep = (ks >= 0) & (ks < length)
        ks, w, vv = ks[keep], w[keep], np.broadcast_to(v, w.shape)[keep]
        return np.bincount(ks, weights=w * vv, minlength=length)
    return np.bincount(ks.ravel(), weights=(w * v[None, :]).ravel(), minlength=length)


def hamming_scan(words, query):
    """Hamming distance from ``query`` (w,) to every row of ``words`` (n, w)."""
    return np.bitwise_count(np.bitwise_xor(words, query)).sum(axis=1, dtype=np.int64)


def l1_scan(rows, query):
    """l1 distance, accumulated in float64, from ``query`` to each row."""
    return np.abs(rows.astype(np.float64) - query.astype(np.float64)).sum(axis=1)


def shifted_l1(query, cands, max_shift):
    """Per-angle minimum overlap-scaled l1 over integer shifts.

    query: (A, L) float64; cands: (m, A, L) float64. Returns (m, A) where
    entry [i, a] is min over |s| <= max_shift of
    ``sum |query[a, x] - cands[i, a, x + s]| * L / overlap``.
    """
    query = np.asarray(query, dtype=np.float64)
    cands = np.asarray(cands, dtype=np.float64)
    length = query.shape[-1]
    best = np.full(cands.shape[:2], np.inf)
    for s in range(-max_shift, max_shift + 1):
        overlap = length - abs(s)
        if overlap <= 0:
            continue
        if s >= 0:
            d = np.abs(query[None, :, : length - s] - cands[:, :, s:]).sum(axis=2)
        else:
            d = np.abs(query[None, :, -s:] - cands[:, :, : length + s]).sum(axis=2)
        np.minimum(best, d * (length / overlap), out=best)
    return best


def lbp_codes(img, bilinear=True):
    """8-neighbour radius-1 LBP codes for the interior pixels of ``img``."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    center = img[1:-1, 1:-1]
    codes = np.zeros((h - 2, w - 2), dtype=np.uint8)
    for p, (dy, dx) in enumerate(_LBP_OFFSETS):
        if abs(dy) < 1e-12 or abs(dx) < 1e-12 or not bilinear:
            ry, rx = int(round(dy)), int(round(dx))
            diff = img[1 + ry : h - 1 + ry, 1 + rx : w - 1 + rx] - center
        else:
            y0, x0 = int(np.floor(dy)), int(np.floor(dx))
            fy, fx = dy - y0, dx - x0
            diff = np.zeros_like(center)
            for oy, wy in ((y0, 1 - fy), (y0 + 1, fy)):
                for ox, wx in ((x0, 1 - fx), (x0 + 1, fx)):
                    diff += wy * wx * (img[1 + oy : h - 1 + oy, 1 + ox : w - 1 + ox] - center)
        codes |= (diff >= 0).astype(np.uint8) << p
    return codes
