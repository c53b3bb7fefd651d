"""Timing comparison of the compiled and numpy kernel backends."""

import math
import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .radon import DEFAULT_ANGLES, projection_geometry, to_words


@dataclass
class BenchRow:
    kernel: str
    backend: str
    seconds: float
    speedup: float
    max_abs_diff: float


def _time(fn, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _cases(n_entries: int, side: int, pool: int, rng):
    img = rng.random((side, side))
    full, start = projection_geometry(side)
    origin = start + (side - 1) / 2.0
    trig = [(math.cos(math.radians(a)), math.sin(math.radians(a))) for a in DEFAULT_ANGLES]
    codes = rng.random((n_entries, side)) > 0.5
    words = to_words(codes)
    rows = rng.random((n_entries, side)).astype(np.float32)
    query = rng.random((len(DEFAULT_ANGLES), side))
    cands = rng.random((pool, len(DEFAULT_ANGLES), side))
    shift = int(0.1 * side)
    return {
        "radon_splat (8 angles)": lambda k: np.stack(
            [k.radon_splat(img, c, s, full, origin) for c, s in trig]
        ),
        f"hamming_scan ({n_entries} codes)": lambda k: k.hamming_scan(words, words[0]),
        f"l1_scan ({n_entries} rows)": lambda k: k.l1_scan(rows, rows[0]),
        f"shifted_l1 (pool {pool})": lambda k: k.shifted_l1(query, cands, shift),
        "lbp_codes": lambda k: k.lbp_codes(img, True).astype(np.float64),
    }


def run_benchmark(n_entries: int = 13000, side: int = 64, pool: int = 112, repeat: int = 5, seed: int = 0) -> list[BenchRow]:
    """Best-of-``repeat`` wall time per kernel for every available backend."""
    rng = np.random.default_rng(seed)
    backends = [kernels.get_backend(name) for name in kernels.available_backends()]
    rows = []
    for name, fn in _cases(n_entries, side, pool, rng).items():
        ref_time, ref_out = _time(lambda: fn(kernels.get_backend("python")), repeat)
        for backend in backends:
            t, out = _time(lambda: fn(backend), repeat)
            diff = float(np.max(np.abs(np.asarray(out, dtype=np.float64) - np.asarray(ref_out, dtype=np.float64))))
            rows.append(BenchRow(name, backend.NAME, t, ref_time / t if t > 0 else math.inf, diff))
    return rows


def format_rows(rows: list[BenchRow]) -> str:
    lines = [f"{'kernel':32s} {'backend':9s} {'ms':>10s} {'vs python':>10s} {'max|diff|':>10s}"]
    for r in rows:
        lines.append(
            f"{r.kernel:32s} {r.backend:9s} {r.seconds * 1e3:10.3f} {r.speedup:9.1f}x {r.max_abs_diff:10.2e}"
        )
    return "\n".join(lines)
