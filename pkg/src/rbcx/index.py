"""Per-projection search, Selection Pool assembly and pool re-ranking.

An :class:`Index` holds, for every image, one float projection and two
barcodes (Median, MinMax) per angle plus an LBP histogram. A query is
searched independently at every angle; the union of the per-angle top-k
hits forms the Selection Pool, which is re-ranked by the sum of the
min-max normalised shifted-Radon error and LBP error.
"""

import os
import time
from collections.abc import Iterable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from os import PathLike

import numpy as np

from . import kernels
from .errors import RbcxError, ValidationError
from .imaging import PreprocessConfig, load_image, preprocess
from .irma import IrmaCode
from .lbp import lbp_histogram
from .radon import (
    DEFAULT_ANGLES,
    BarcodeMethod,
    ProjectionSet,
    RadonBarcode,
    RadonProjection,
    binarize_median,
    binarize_minmax,
    max_shift_window,
    project_all,
    to_words,
)


class Mode(str, Enum):
    SP_R = "sp-r"
    RBC_MEDIAN = "rbc-median"
    RBC_MINMAX = "rbc-minmax"

    @property
    def is_binary(self) -> bool:
        return self is not Mode.SP_R


@dataclass(frozen=True)
class RetrievalConfig:
    """Search parameters.

    ``exploit=False`` replaces the re-ranking with the summed zero-shift l1
    distance of the float projections (no shift search, no LBP).
    ``float_metric`` selects l1 or l2 for the SP-R per-projection search.
    """

    mode: Mode = Mode.SP_R
    top_k_per_projection: int = 14
    angles: tuple[float, ...] = DEFAULT_ANGLES
    max_shift_fraction: float = 0.10
    fusion_weights: tuple[float, float] = (1.0, 1.0)
    exploit: bool = True
    float_metric: str = "l1"

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        object.__setattr__(self, "fusion_weights", tuple(float(w) for w in self.fusion_weights))
        if self.top_k_per_projection < 1:
            raise ValidationError("top_k_per_projection must be >= 1")
        w_radon, w_lbp = self.fusion_weights
        if w_radon < 0 or w_lbp < 0 or (w_radon == 0 and w_lbp == 0):
            raise ValidationError("fusion weights must be >= 0 and not both zero")
        if self.max_shift_fraction < 0:
            raise ValidationError("max_shift_fraction must be >= 0")
        if self.float_metric not in ("l1", "l2"):
            raise ValidationError(f"unknown float metric {self.float_metric!r}")


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit value, else ``RBCX_THREADS``; 0 means all CPUs."""
    if threads is None:
        try:
            threads = int(os.environ.get("RBCX_THREADS", "0") or 0)
        except ValueError:
            threads = 0
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


@dataclass(frozen=True, eq=False)
class ImageFeatures:
    """Everything the index stores about one preprocessed image."""

    projections: np.ndarray  # (A, N) float32
    median_codes: np.ndarray  # (A, N) bool
    minmax_codes: np.ndarray  # (A, N) bool
    lbp: np.ndarray  # (59,) float64

    def codes(self, mode: Mode) -> np.ndarray:
        if mode is Mode.RBC_MEDIAN:
            return self.median_codes
        if mode is Mode.RBC_MINMAX:
            return self.minmax_codes
        raise ValidationError(f"mode {mode.value} has no barcode")


def features_from_preprocessed(img: np.ndarray, angles) -> ImageFeatures:
    ps = project_all(img, angles)
    proj = ps.as_array().astype(np.float32)
    # barcodes come from the stored float32 values so they can be re-derived from an index
    median = np.stack([binarize_median(row) for row in proj])
    minmax = np.stack([binarize_minmax(row) for row in proj])
    return ImageFeatures(proj, median, minmax, lbp_histogram(img))


def extract_features(img, angles=DEFAULT_ANGLES, pcfg: PreprocessConfig | None = None) -> ImageFeatures:
    return features_from_preprocessed(preprocess(img, pcfg or PreprocessConfig()), angles)


@dataclass(frozen=True, eq=False)
class IndexEntry:
    image_id: str
    projections: ProjectionSet
    barcode_median: RadonBarcode
    barcode_minmax: RadonBarcode
    lbp: np.ndarray
    irma_code: IrmaCode | None
    source_path: str


@dataclass
class BuildSummary:
    n_indexed: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)

    def __str__(self):
        lines = [f"indexed {self.n_indexed} images, {len(self.failures)} failed"]
        lines += [f"  {image_id}: {msg}" for image_id, msg in self.failures]
        return "\n".join(lines)


class Index:
    """Immutable feature store; arrays are laid out angle-major for scans."""

    def __init__(
        self,
        image_ids: list[str],
        source_paths: list[str],
        irma_codes: list[IrmaCode | None],
        angles,
        pcfg: PreprocessConfig,
        projections: np.ndarray,
        median_codes: np.ndarray,
        minmax_codes: np.ndarray,
        lbp: np.ndarray,
        summary: BuildSummary | None = None,
    ):
        n = len(image_ids)
        if n == 0:
            raise ValidationError("an index needs at least one entry")
        if len(set(image_ids)) != n:
            raise ValidationError("image ids must be unique")
        self.image_ids = list(image_ids)
        self.source_paths = list(source_paths)
        self.irma_codes = list(irma_codes)
        self.angles = tuple(float(a) for a in angles)
        self.pcfg = pcfg
        # (A, n, N) / (A, n, N) / (n, B)
        self.projections = np.array(projections, dtype=np.float32, order="C")
        self.median_codes = np.array(median_codes, dtype=bool, order="C")
        self.minmax_codes = np.array(minmax_codes, dtype=bool, order="C")
        self.lbp = np.array(lbp, dtype=np.float64, order="C")
        a, n_p, side = self.projections.shape
        if a != len(self.angles) or n_p != n:
            raise ValidationError("projection array does not match angles/entries")
        if self.median_codes.shape != self.projections.shape or self.minmax_codes.shape != self.projections.shape:
            raise ValidationError("barcode arrays do not match projections")
        if self.lbp.shape[0] != n:
            raise ValidationError("LBP array does not match entries")
        self.summary = summary or BuildSummary(n_indexed=n)
        self._median_words = to_words(self.median_codes)
        self._minmax_words = to_words(self.minmax_codes)
        self._pos = {image_id: i for i, image_id in enumerate(self.image_ids)}
        order = sorted(range(n), key=self.image_ids.__getitem__)
        self._id_rank = np.empty(n, dtype=np.int64)
        self._id_rank[order] = np.arange(n)
        for arr in (self.projections, self.median_codes, self.minmax_codes, self.lbp,
                    self._median_words, self._minmax_words, self._id_rank):
            arr.flags.writeable = False

    def __len__(self):
        return len(self.image_ids)

    def __contains__(self, image_id):
        return image_id in self._pos

    @property
    def side(self) -> int:
        return self.projections.shape[2]

    def position(self, image_id: str) -> int:
        try:
            return self._pos[image_id]
        except KeyError:
            raise KeyError(f"image {image_id!r} is not in the index") from None

    def angle_index(self, angle: float) -> int:
        for i, a in enumerate(self.angles):
            if abs(a - float(angle)) < 1e-9:
                return i
        raise ValidationError(f"angle {angle} is not one of the index angles {self.angles}")

    def words(self, mode: Mode) -> np.ndarray:
        if mode is Mode.RBC_MEDIAN:
            return self._median_words
        if mode is Mode.RBC_MINMAX:
            return self._minmax_words
        raise ValidationError(f"mode {mode.value} has no barcode")

    def features(self, pos: int) -> ImageFeatures:
        return ImageFeatures(
            self.projections[:, pos].copy(),
            self.median_codes[:, pos].copy(),
            self.minmax_codes[:, pos].copy(),
            self.lbp[pos].copy(),
        )

    def entry(self, image_id: str) -> IndexEntry:
        pos = self.position(image_id)
        proj = self.projections[:, pos].astype(np.float64)
        ps = ProjectionSet(image_id, tuple(RadonProjection(a, row) for a, row in zip(self.angles, proj)))
        return IndexEntry(
            image_id,
            ps,
            RadonBarcode(image_id, BarcodeMethod.MEDIAN, self.median_codes[:, pos].copy()),
            RadonBarcode(image_id, BarcodeMethod.MINMAX, self.minmax_codes[:, pos].copy()),
            self.lbp[pos].copy(),
            self.irma_codes[pos],
            self.source_paths[pos],
        )

    def code_of(self, image_id: str) -> IrmaCode | None:
        return self.irma_codes[self.position(image_id)]


def _corpus_item(item):
    if len(item) == 2:
        return item[0], item[1], None
    return item[0], item[1], item[2]


def build_index(
    corpus: Iterable,
    cfg: RetrievalConfig | None = None,
    pcfg: PreprocessConfig | None = None,
    threads: int | None = None,
) -> Index:
    """Extract features for every corpus item and assemble an :class:`Index`.

    Items are ``(image_id, image, irma_code)`` or ``(image_id, image)``,
    where ``image`` is an array or a path to a PNG/PGM file. Items that fail
    to load or process are skipped and listed in ``index.summary``.
    """
    cfg = cfg or RetrievalConfig()
    pcfg = pcfg or PreprocessConfig()
    items = [_corpus_item(it) for it in corpus]
    if not items:
        raise ValidationError("corpus is empty")

    def work(item):
        image_id, image, _ = item
        try:
            if isinstance(image, (str, PathLike)):
                image = load_image(image)
            return extract_features(image, cfg.angles, pcfg), None
        except (RbcxError, OSError, ValueError) as exc:
            return None, f"{type(exc).__name__}: {exc}"

    n_workers = min(resolve_threads(threads), len(items))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(work, items))
    else:
        results = [work(it) for it in items]

    summary = BuildSummary()
    ids, paths, codes, feats = [], [], [], []
    seen = set()
    for (image_id, image, code), (feat, err) in zip(items, results):
        image_id = str(image_id)
        if err is None and image_id in seen:
            err = "duplicate image id"
        if err is not None:
            summary.failures.append((image_id, err))
            continue
        seen.add(image_id)
        ids.append(image_id)
        paths.append(os.fspath(image) if isinstance(image, (str, PathLike)) else "")
        codes.append(code)
        feats.append(feat)
    if not feats:
        raise RbcxError(f"no image could be indexed\n{summary}")
    summary.n_indexed = len(feats)
    return Index(
        ids,
        paths,
        codes,
        cfg.angles,
        pcfg,
        np.stack([f.projections for f in feats], axis=1),
        np.stack([f.median_codes for f in feats], axis=1),
        np.stack([f.minmax_codes for f in feats], axis=1),
        np.stack([f.lbp for f in feats]),
        summary,
    )


def angle_distances(idx: Index, query, angle_pos: int, mode: Mode, metric: str = "l1") -> np.ndarray:
    """Distances from one per-angle query vector to every index entry."""
    mode = Mode(mode)
    query = np.asarray(query)
    if query.shape != (idx.side,):
        raise ValidationError(f"query length {query.shape} does not match index length {idx.side}")
    if mode.is_binary:
        qwords = to_words(query.astype(bool))
        return kernels.hamming_scan(idx.words(mode)[angle_pos], qwords)
    if query.dtype == bool:
        raise ValidationError("SP-R search needs a float projection, got a bit vector")
    q32 = query.astype(np.float32)
    rows = idx.projections[angle_pos]
    if metric == "l2":
        diff = rows.astype(np.float64) - q32.astype(np.float64)
        return np.sqrt((diff * diff).sum(axis=1))
    return kernels.l1_scan(rows, q32)


def rank_order(idx: Index, dist: np.ndarray) -> np.ndarray:
    """Positions sorted by distance, ties by ascending image id."""
    return np.lexsort((idx._id_rank, dist))


def search_projection(idx: Index, q, angle: float, k: int, mode: Mode = Mode.SP_R, metric: str = "l1"):
    """Top-``k`` entries for a single projection (or barcode) at ``angle``.

    Returns ``[(image_id, distance), ...]`` ascending; l1/l2 for SP-R and
    Hamming for the barcode modes. ``k`` larger than the index returns the
    whole ranking.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    mode = Mode(mode)
    a = idx.angle_index(angle)
    if isinstance(q, RadonProjection):
        if mode.is_binary:
            q = binarize_median(q) if mode is Mode.RBC_MEDIAN else binarize_minmax(q)
        else:
            q = q.bins
    dist = angle_distances(idx, q, a, mode, metric)
    order = rank_order(idx, dist)[:k]
    cast = int if mode.is_binary else float
    return [(idx.image_ids[p], cast(dist[p])) for p in order]


def _query_vectors(q: ImageFeatures, mode: Mode) -> np.ndarray:
    return q.projections if mode is Mode.SP_R else q.codes(mode)


def rank_all_angles(idx: Index, q: ImageFeatures, mode: Mode, metric: str = "l1", depth: int | None = None):
    """Per-angle ``(order, distances)`` rankings truncated to ``depth``."""
    vecs = _query_vectors(q, mode)
    if vecs.shape[0] != len(idx.angles):
        raise ValidationError("query has a different number of angles than the index")
    out = []
    for a in range(len(idx.angles)):
        dist = angle_distances(idx, vecs[a], a, mode, metric)
        order = rank_order(idx, dist)
        if depth is not None:
            order = order[:depth]
        out.append((order, dist[order]))
    return out


@dataclass(frozen=True)
class PoolCandidate:
    image_id: str
    contributing_angles: frozenset
    best_rank_per_angle: dict  # angle -> 1-based rank


@dataclass(eq=False)
class SelectionPool:
    """Deduplicated union of per-angle top-k hits, in first-seen order."""

    candidates: dict[str, PoolCandidate]
    positions: list[int] = field(default_factory=list, repr=False)

    def __len__(self):
        return len(self.candidates)

    def __contains__(self, image_id):
        return image_id in self.candidates

    def __iter__(self):
        return iter(self.candidates)

    def ids(self) -> set[str]:
        return set(self.candidates)


def pool_from_rankings(idx: Index, rankings, k: int) -> SelectionPool:
    hits: dict[int, dict[float, int]] = {}
    for angle, (order, _) in zip(idx.angles, rankings):
        for rank, pos in enumerate(order[:k], start=1):
            hits.setdefault(int(pos), {}).setdefault(angle, rank)
    candidates = {
        idx.image_ids[pos]: PoolCandidate(idx.image_ids[pos], frozenset(ranks), ranks)
        for pos, ranks in hits.items()
    }
    return SelectionPool(candidates, list(hits))


def assemble_pool(idx: Index, q: ImageFeatures, cfg: RetrievalConfig) -> SelectionPool:
    k = cfg.top_k_per_projection
    return pool_from_rankings(idx, rank_all_angles(idx, q, cfg.mode, cfg.float_metric, k), k)


@dataclass(frozen=True)
class RankedCandidate:
    image_id: str
    fused_error: float
    radon_error_norm: float
    lbp_error_norm: float
    radon_error: float
    lbp_error: float


@dataclass(eq=False)
class QueryResult:
    ranked: list[RankedCandidate]
    pool: SelectionPool
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def best(self) -> RankedCandidate:
        return self.ranked[0]

    def to_dict(self, query_id: str | None = None, top: int | None = None, timings: bool = True) -> dict:
        rows = self.ranked if top is None else self.ranked[:top]
        out = {
            "query_id": query_id,
            "pool_size": len(self.pool),
            "ranked": [
                {
                    "image_id": r.image_id,
                    "fused_error": round(r.fused_error, 12),
                    "radon_error_norm": round(r.radon_error_norm, 12),
                    "lbp_error_norm": round(r.lbp_error_norm, 12),
                }
                for r in rows
            ],
        }
        if timings:
            out["timings_ms"] = {k: round(v * 1e3, 3) for k, v in self.timings.items()}
        return out


def _minmax_normalize(values: np.ndarray) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if hi <= lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def exploit_search(idx: Index, pool: SelectionPool, q: ImageFeatures, cfg: RetrievalConfig) -> QueryResult:
    """Re-rank the pool by normalised shifted-Radon error plus LBP error."""
    if len(pool) == 0:
        raise ValidationError("Selection Pool is empty")
    positions = np.array(pool.positions or [idx.position(i) for i in pool], dtype=np.int64)
    cands = idx.projections[:, positions, :].transpose(1, 0, 2).astype(np.float64)
    query = q.projections.astype(np.float64)
    w_radon, w_lbp = cfg.fusion_weights
    if cfg.exploit:
        shift = max_shift_window(idx.side, cfg.max_shift_fraction)
    else:
        shift, w_lbp = 0, 0.0
    radon_err = kernels.shifted_l1(query, cands, shift).sum(axis=1)
    lbp_err = np.abs(idx.lbp[positions] - q.lbp[None, :]).sum(axis=1)
    radon_norm = _minmax_normalize(radon_err)
    lbp_norm = _minmax_normalize(lbp_err)
    fused = w_radon * radon_norm + w_lbp * lbp_norm
    order = np.lexsort((idx._id_rank[positions], fused))
    ranked = [
        RankedCandidate(
            idx.image_ids[positions[i]],
            float(fused[i]),
            float(radon_norm[i]),
            float(lbp_norm[i]),
            float(radon_err[i]),
            float(lbp_err[i]),
        )
        for i in order
    ]
    return QueryResult(ranked, pool)


def query_features(idx: Index, query_image, pcfg: PreprocessConfig | None = None) -> ImageFeatures:
    if isinstance(query_image, (str, PathLike)):
        query_image = load_image(query_image)
    return extract_features(query_image, idx.angles, pcfg or idx.pcfg)


def _check_angles(idx: Index, cfg: RetrievalConfig) -> RetrievalConfig:
    if cfg.angles != idx.angles:
        if cfg.angles == DEFAULT_ANGLES:
            # default config against an index with its own angle set
            return replace(cfg, angles=idx.angles)
        raise ValidationError(f"config angles {cfg.angles} differ from index angles {idx.angles}")
    return cfg


def retrieve(
    idx: Index,
    query_image,
    cfg: RetrievalConfig | None = None,
    pcfg: PreprocessConfig | None = None,
) -> QueryResult:
    """Full pipeline: preprocess, project, binarize, pool, re-rank."""
    cfg = _check_angles(idx, cfg or RetrievalConfig(angles=idx.angles))
    pcfg = pcfg or idx.pcfg
    t0 = time.perf_counter()
    if isinstance(query_image, (str, PathLike)):
        query_image = load_image(query_image)
    img = preprocess(query_image, pcfg)
    t1 = time.perf_counter()
    q = features_from_preprocessed(img, idx.angles)
    t2 = time.perf_counter()
    pool = assemble_pool(idx, q, cfg)
    t3 = time.perf_counter()
    result = exploit_search(idx, pool, q, cfg)
    t4 = time.perf_counter()
    result.timings = {"preprocess": t1 - t0, "features": t2 - t1, "pool": t3 - t2, "exploit": t4 - t3}
    return result


def retrieve_features(idx: Index, q: ImageFeatures, cfg: RetrievalConfig | None = None) -> QueryResult:
    """Pool + re-rank for already extracted query features."""
    cfg = _check_angles(idx, cfg or RetrievalConfig(angles=idx.angles))
    t0 = time.perf_counter()
    pool = assemble_pool(idx, q, cfg)
    t1 = time.perf_counter()
    result = exploit_search(idx, pool, q, cfg)
    result.timings = {"pool": t1 - t0, "exploit": time.perf_counter() - t1}
    return result
