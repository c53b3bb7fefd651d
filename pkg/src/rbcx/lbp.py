"""Uniform LBP(8, 1) histograms for re-ranking."""

import numpy as np

from . import kernels
from .errors import ValidationError

N_BINS = 59


def _transitions(code: int) -> int:
    bits = [(code >> p) & 1 for p in range(8)]
    return sum(bits[p] != bits[(p + 1) % 8] for p in range(8))


def _uniform_lookup() -> np.ndarray:
    # uniform codes (<= 2 circular transitions) get bins 0..57 in code order;
    # every other code shares the last bin
    table = np.full(256, N_BINS - 1, dtype=np.intp)
    uniform = [c for c in range(256) if _transitions(c) <= 2]
    table[uniform] = np.arange(len(uniform))
    return table


UNIFORM_BIN = _uniform_lookup()


def lbp_histogram(img, bilinear: bool = True) -> np.ndarray:
    """L1-normalised 59-bin uniform LBP histogram over interior pixels.

    A neighbour at least as bright as the centre sets its bit. Diagonal
    neighbours are bilinearly interpolated unless ``bilinear`` is False, in
    which case the nearest pixel is used.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or min(img.shape) < 3:
        raise ValidationError(f"LBP needs an image of at least 3x3, got shape {img.shape}")
    codes = kernels.lbp_codes(img, bilinear)
    hist = np.bincount(UNIFORM_BIN[codes.ravel()], minlength=N_BINS).astype(np.float64)
    return hist / hist.sum()


def lbp_distance(a, b) -> float:
    """Sum of absolute bin differences; in [0, 2] for normalised histograms."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"histogram bin counts differ: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).sum())
