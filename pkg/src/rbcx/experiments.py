"""Run-level evaluation: IRMA scoring, error-vs-k sweeps and preprocessing ablations."""

import csv
import io
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from os import PathLike
from pathlib import Path

import numpy as np

from .errors import RbcxError, ValidationError
from .imaging import PreprocessConfig, load_image, preprocess
from .index import (
    Index,
    ImageFeatures,
    Mode,
    RetrievalConfig,
    exploit_search,
    extract_features,
    pool_from_rankings,
    rank_all_angles,
    resolve_threads,
)
from .irma import BranchingScheme, ErrorReport, IrmaCode, code_error, evaluate_run
from .radon import DEFAULT_ANGLES, project_all

IMAGE_SUFFIXES = {".png", ".pgm"}

ABLATIONS: dict[str, PreprocessConfig] = {
    "none": PreprocessConfig(pad_enabled=False, landmarks_enabled=False, circle_enabled=False),
    "pad": PreprocessConfig(landmarks_enabled=False, circle_enabled=False),
    "pad+circle": PreprocessConfig(landmarks_enabled=False),
    "landmarks": PreprocessConfig(pad_enabled=False, circle_enabled=False),
    "all": PreprocessConfig(),
}


def list_images(directory: str | PathLike) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ValidationError(f"{directory} is not a directory")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def _pmap(fn, items, threads=None):
    n = min(resolve_threads(threads), max(len(items), 1))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def load_query_features(idx: Index, paths: Sequence[Path], threads: int | None = None):
    """``[(query_id, features or None, error message or None)]`` in input order."""

    def work(path):
        try:
            return path.stem, extract_features(load_image(path), idx.angles, idx.pcfg), None
        except (RbcxError, OSError, ValueError) as exc:
            return path.stem, None, f"{type(exc).__name__}: {exc}"

    return _pmap(work, list(paths), threads)


def _code_or_worst(truth: IrmaCode, code: IrmaCode | None, scheme: BranchingScheme) -> float:
    return 1.0 if code is None else code_error(truth, code, scheme)


@dataclass
class QueryRow:
    query_id: str
    retrieved_id: str
    error: float | None
    pool_size: int
    latency_ms: float


def evaluate_queries(
    idx: Index,
    queries: Sequence[tuple[str, ImageFeatures]],
    labels: dict[str, IrmaCode | None],
    cfg: RetrievalConfig,
    scheme: BranchingScheme | None = None,
) -> tuple[ErrorReport, list[QueryRow]]:
    """Retrieve every query and score its rank-1 answer."""
    scheme = scheme or BranchingScheme.uniform()
    outcomes, rows = [], []
    k = cfg.top_k_per_projection
    for qid, feat in queries:
        t0 = time.perf_counter()
        rankings = rank_all_angles(idx, feat, cfg.mode, cfg.float_metric, k)
        pool = pool_from_rankings(idx, rankings, k)
        result = exploit_search(idx, pool, feat, cfg)
        latency = time.perf_counter() - t0
        top = result.best.image_id
        truth = labels.get(qid)
        outcomes.append((qid, top, truth, idx.code_of(top)))
        err = None if truth is None else _code_or_worst(truth, idx.code_of(top), scheme)
        rows.append(QueryRow(qid, top, err, len(pool), latency * 1e3))
    return evaluate_run(outcomes, scheme), rows


@dataclass
class SweepRow:
    mode: str
    angle: str
    k: int
    e_total: float
    n_zero: float
    n_queries: int
    pool_mean: float
    pool_min: int
    pool_max: int
    pool_floor: float
    mean_latency_ms: float


def _row(mode, angle, k, errors, pools, floors, latencies) -> SweepRow:
    errors = np.asarray(errors, dtype=np.float64)
    n = len(errors)
    return SweepRow(
        mode=mode,
        angle=angle,
        k=k,
        e_total=float(errors.sum()),
        n_zero=float(100.0 * np.mean(errors == 0.0)) if n else 0.0,
        n_queries=n,
        pool_mean=float(np.mean(pools)) if pools else 0.0,
        pool_min=int(min(pools)) if pools else 0,
        pool_max=int(max(pools)) if pools else 0,
        pool_floor=float(np.sum(floors)) if floors else 0.0,
        mean_latency_ms=float(np.mean(latencies) * 1e3) if latencies else 0.0,
    )


def sweep(
    idx: Index,
    queries: Sequence[tuple[str, ImageFeatures]],
    labels: dict[str, IrmaCode | None],
    modes: Sequence[Mode],
    ks: Sequence[int],
    base: RetrievalConfig | None = None,
    scheme: BranchingScheme | None = None,
    per_angle: bool = True,
) -> list[SweepRow]:
    """Error-vs-k table for every mode, plus single-projection rows.

    Only labeled queries are scored. ``pool_floor`` is the summed best IRMA
    error reachable inside each query's pool. Single-projection rows
    (``angle`` set, ``k`` = 1) score the first hit of that angle alone.
    """
    scheme = scheme or BranchingScheme.uniform()
    base = base or RetrievalConfig(angles=idx.angles)
    ks = sorted(set(int(k) for k in ks))
    if not ks or ks[0] < 1:
        raise ValidationError("k values must be >= 1")
    labeled = [(qid, f) for qid, f in queries if labels.get(qid) is not None]
    all_codes = idx.irma_codes
    rows = []
    for mode in modes:
        mode = Mode(mode)
        cfg = replace(base, mode=mode)
        per_k = {k: ([], [], [], []) for k in ks}
        per_a = [[] for _ in idx.angles]
        for qid, feat in labeled:
            truth = labels[qid]
            t0 = time.perf_counter()
            rankings = rank_all_angles(idx, feat, mode, cfg.float_metric, ks[-1])
            t_rank = time.perf_counter() - t0
            cand_err = {}

            def err_of(pos):
                if pos not in cand_err:
                    cand_err[pos] = _code_or_worst(truth, all_codes[pos], scheme)
                return cand_err[pos]

            for a, (order, _) in enumerate(rankings):
                per_a[a].append(err_of(int(order[0])))
            for k in ks:
                t1 = time.perf_counter()
                pool = pool_from_rankings(idx, rankings, k)
                result = exploit_search(idx, pool, feat, replace(cfg, top_k_per_projection=k))
                latency = t_rank + time.perf_counter() - t1
                errs, pools, floors, lats = per_k[k]
                errs.append(err_of(idx.position(result.best.image_id)))
                pools.append(len(pool))
                floors.append(min(err_of(p) for p in pool.positions))
                lats.append(latency)
        for k in ks:
            errs, pools, floors, lats = per_k[k]
            rows.append(_row(mode.value, "all", k, errs, pools, floors, lats))
        if per_angle:
            for angle, errs in zip(idx.angles, per_a):
                rows.append(_row(mode.value, f"{angle:g}", 1, errs, [1] * len(errs), errs, []))
    return rows


@dataclass
class AblationRow:
    preprocessing: str
    e_total: float
    n_zero: float
    n_queries: int


def concatenated_projections(paths: Sequence[Path], pcfg: PreprocessConfig, angles=DEFAULT_ANGLES, threads=None) -> np.ndarray:
    def work(path):
        return project_all(preprocess(load_image(path), pcfg), angles).as_array().ravel()

    return np.stack(_pmap(work, list(paths), threads))


def _readable(paths: Sequence[Path], threads=None) -> list[Path]:
    def ok(path):
        try:
            load_image(path)
            return True
        except (RbcxError, OSError, ValueError):
            return False

    return [p for p, good in zip(paths, _pmap(ok, list(paths), threads)) if good]


def ablate(
    train: Sequence[Path],
    test: Sequence[Path],
    labels: dict[str, IrmaCode | None],
    configs: dict[str, PreprocessConfig] | None = None,
    angles=DEFAULT_ANGLES,
    scheme: BranchingScheme | None = None,
    threads: int | None = None,
) -> list[AblationRow]:
    """Concatenated-projection 1-NN (l1) error for each preprocessing variant."""
    configs = configs or ABLATIONS
    scheme = scheme or BranchingScheme.uniform()
    train = _readable(train, threads)
    test = _readable([p for p in test if labels.get(p.stem) is not None], threads)
    if not train or not test:
        raise ValidationError("ablation needs training images and labeled test images")
    train_ids = [p.stem for p in train]
    id_rank = np.argsort(np.argsort(train_ids, kind="stable"), kind="stable")
    rows = []
    for name, pcfg in configs.items():
        db = concatenated_projections(train, pcfg, angles, threads)
        qs = concatenated_projections(test, pcfg, angles, threads)
        errors = []
        for path, q in zip(test, qs):
            dist = np.abs(db - q[None, :]).sum(axis=1)
            best = int(np.lexsort((id_rank, dist))[0])
            errors.append(_code_or_worst(labels[path.stem], labels.get(train_ids[best]), scheme))
        errors = np.asarray(errors)
        rows.append(AblationRow(name, float(errors.sum()), float(100.0 * np.mean(errors == 0.0)), len(errors)))
    return rows


def rows_to_csv(rows: Sequence, drop: Sequence[str] = ()) -> str:
    """Render dataclass rows as CSV text (floats with 6 decimals)."""
    if not rows:
        return ""
    fields = [f for f in asdict(rows[0]) if f not in drop]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        d = asdict(row)
        writer.writerow([f"{d[f]:.6f}" if isinstance(d[f], float) else ("" if d[f] is None else d[f]) for f in fields])
    return buf.getvalue()
