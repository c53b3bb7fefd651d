"""Independent reference implementations used only by the tests."""

import math

import numpy as np

from rbcx.radon import projection_geometry


def bilinear_sample(img, rows, cols):
    """Bilinear interpolation of pixel centres; zero outside the image."""
    padded = np.pad(img, 1)
    r = np.asarray(rows) + 1.0
    c = np.asarray(cols) + 1.0
    r0 = np.floor(r).astype(int)
    c0 = np.floor(c).astype(int)
    fr = r - r0
    fc = c - c0
    h, w = padded.shape
    out = np.zeros_like(r, dtype=np.float64)
    for dr, wr in ((0, 1 - fr), (1, fr)):
        for dc, wc in ((0, 1 - fc), (1, fc)):
            rr, cc = r0 + dr, c0 + dc
            ok = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
            vals = np.zeros_like(out)
            vals[ok] = padded[rr[ok], cc[ok]]
            out += wr * wc * vals
    return out


def line_sampling_projection(img, angle, step=0.1):
    """Cropped projection by marching each line at ``step`` pixel spacing."""
    n = img.shape[0]
    _, start = projection_geometry(n)
    c = (n - 1) / 2.0
    theta = math.radians(angle)
    ct, st = math.cos(theta), math.sin(theta)
    s = np.arange(-n, n + step / 2, step)
    out = np.zeros(n)
    for k in range(n):
        rho = k - c
        x = rho * ct - s * st
        y = rho * st + s * ct
        out[k] = bilinear_sample(img, y + c, x + c).sum() * step
    return out


def brute_force_ranking(vectors, ids, query, dist):
    """Full sort of (distance, id) pairs with a plain Python loop."""
    pairs = []
    for image_id, vec in zip(ids, vectors):
        pairs.append((dist(vec, query), image_id))
    pairs.sort()
    return [(image_id, d) for d, image_id in pairs]


def toy_irma_error(truth, predicted, branching):
    """Hierarchical error by locating the first hard mismatch, then summing."""
    first_wrong = len(truth)
    for i, (t, p) in enumerate(zip(truth, predicted)):
        if p != t and p != "*":
            first_wrong = i
            break
    total = 0.0
    for i in range(len(truth)):
        if i >= first_wrong:
            delta = 1.0
        elif predicted[i] == "*":
            delta = 0.5
        else:
            delta = 0.0
        total += delta / (branching[i] * (i + 1))
    return total
