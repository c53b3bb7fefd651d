"""Synthetic radiograph-like images for retrieval tests."""

from dataclasses import replace

import numpy as np

from rbcx.imaging import PreprocessConfig
from rbcx.index import RetrievalConfig, build_index

# features are taken from the images as given
RAW = PreprocessConfig(pad_enabled=False, landmarks_enabled=False, circle_enabled=False)


def prototype(rng, side=64, varied=False):
    """An elliptical body with five Gaussian structures inside it.

    With ``varied`` the body's radii and centre are random too; otherwise
    all prototypes share one body and differ only in their structures.
    """
    yy, xx = np.mgrid[0:side, 0:side] + 0.5 - side / 2
    scale = side / 64
    ry, rx, oy, ox = (rng.uniform(16, 26), rng.uniform(11, 21), *rng.uniform(-4, 4, 2)) if varied else (22, 17, 0, 0)
    img = np.where(((yy - oy * scale) / (ry * scale)) ** 2 + ((xx - ox * scale) / (rx * scale)) ** 2 <= 1, 0.45, 0.0)
    for _ in range(5):
        cy, cx = rng.uniform(-14, 14, 2) * scale
        s = rng.uniform(1.5, 3.0) * scale
        amp = rng.uniform(0.25, 0.5)
        img = img + amp * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * s * s))
    return np.clip(img, 0, 1)


def translate(img, dy, dx):
    """Integer translation with zero fill."""
    out = np.zeros_like(img)
    h, w = img.shape
    out[max(dy, 0) : h + min(dy, 0), max(dx, 0) : w + min(dx, 0)] = img[
        max(-dy, 0) : h + min(-dy, 0), max(-dx, 0) : w + min(-dx, 0)
    ]
    return out


def random_index(rng, n, side=16, angles=(0.0, 45.0, 90.0, 135.0), codes=None):
    """Index of ``n`` uniform-noise images (no preprocessing)."""
    pcfg = replace(RAW, target_side=side)
    corpus = []
    for i in range(n):
        item = (f"img{i:04d}", rng.random((side, side)))
        corpus.append(item + ((codes[i],) if codes is not None else ()))
    return build_index(corpus, RetrievalConfig(angles=angles), pcfg, threads=1), corpus
