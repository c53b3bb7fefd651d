"""Single Radon projections, Radon barcodes and shift-tolerant projection distance."""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.ndimage import uniform_filter1d

from . import kernels
from .errors import ValidationError

DEFAULT_ANGLES: tuple[float, ...] = tuple(22.5 * i for i in range(8))


class BarcodeMethod(str, Enum):
    MEDIAN = "median"
    MINMAX = "minmax"


@dataclass(frozen=True, eq=False)
class RadonProjection:
    """Line-integral sums of an image at one angle (degrees in [0, 180))."""

    angle: float
    bins: np.ndarray

    def __len__(self):
        return len(self.bins)


@dataclass(frozen=True, eq=False)
class ProjectionSet:
    image_id: str | None
    projections: tuple[RadonProjection, ...]

    @property
    def angles(self) -> tuple[float, ...]:
        return tuple(p.angle for p in self.projections)

    def as_array(self) -> np.ndarray:
        """(n_angles, length) float64 stack of the bins."""
        return np.stack([p.bins for p in self.projections])


@dataclass(frozen=True, eq=False)
class RadonBarcode:
    image_id: str | None
    method: BarcodeMethod
    codes: np.ndarray = field(repr=False)  # (n_angles, length) bool

    @property
    def n_bits(self) -> int:
        return int(self.codes.size)


def projection_geometry(side: int) -> tuple[int, int]:
    """Return ``(full_length, crop_start)`` of the internal projection buffer.

    The buffer holds at least ceil(sqrt(2) * side) bins plus a guard band for
    the pixel footprint; ``full_length - side`` is even so that the kept
    middle ``side`` bins are centred exactly on the image centre.
    """
    full = math.ceil(math.sqrt(2.0) * side) + 4
    if (full - side) % 2:
        full += 1
    return full, (full - side) // 2


def _check_angle(angle: float) -> float:
    angle = float(angle)
    if not 0.0 <= angle < 180.0:
        raise ValidationError(f"angle {angle} outside [0, 180)")
    return angle


def radon_projection(img, angle: float, crop: bool = True) -> RadonProjection:
    """Project a square image along lines at ``angle`` degrees.

    Bin ``k`` collects intensity along x*cos(angle) + y*sin(angle) = rho_k,
    with x to the right, y down and the origin at the image centre; at 0
    degrees the bins are the column sums. Each pixel is spread over the
    neighbouring bins with its projected bilinear footprint, normalised so
    the pixel's mass is conserved.

    With ``crop`` (default) only the middle N bins are returned, otherwise
    the whole internal buffer.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] != img.shape[1]:
        raise ValidationError(f"expected a square 2-D image, got shape {img.shape}")
    angle = _check_angle(angle)
    side = img.shape[0]
    full, start = projection_geometry(side)
    theta = math.radians(angle)
    bins = kernels.radon_splat(
        img, math.cos(theta), math.sin(theta), full, start + (side - 1) / 2.0
    )
    if crop:
        bins = bins[start : start + side].copy()
    return RadonProjection(angle, bins)


def project_all(img, angles=DEFAULT_ANGLES, image_id: str | None = None) -> ProjectionSet:
    angles = [_check_angle(a) for a in angles]
    if not angles:
        raise ValidationError("angle list is empty")
    if any(b <= a for a, b in zip(angles, angles[1:])):
        raise ValidationError("angles must be strictly increasing")
    return ProjectionSet(image_id, tuple(radon_projection(img, a) for a in angles))


def _bins(p) -> np.ndarray:
    bins = np.asarray(p.bins if isinstance(p, RadonProjection) else p, dtype=np.float64)
    if bins.ndim != 1 or bins.size == 0:
        raise ValidationError("projection must be a non-empty 1-D vector")
    return bins


def binarize_median(p) -> np.ndarray:
    """1 where a bin is at or above the projection's median, else 0."""
    bins = _bins(p)
    return bins >= np.median(bins)


def binarize_minmax(p) -> np.ndarray:
    """Encode rising stretches as 1 and falling stretches as 0.

    The projection is smoothed with a 3-bin moving average. Each bin takes
    the direction of the step arriving at it (flat steps inherit the
    previous direction); bin 0 takes the direction of the first non-flat
    step. A projection without any non-flat step encodes to all zeros.
    """
    bins = _bins(p)
    smooth = uniform_filter1d(bins, size=3, mode="nearest")
    step = np.sign(np.diff(smooth))
    nonflat = np.flatnonzero(step)
    if nonflat.size == 0:
        return np.zeros(bins.size, dtype=bool)
    # forward-fill flat steps with the last direction, back-fill the lead-in
    last = np.maximum.accumulate(np.where(step != 0, np.arange(step.size), -1))
    last[last < 0] = nonflat[0]
    direction = step[last]
    return np.concatenate(([direction[0] > 0], direction > 0))


_BINARIZERS = {BarcodeMethod.MEDIAN: binarize_median, BarcodeMethod.MINMAX: binarize_minmax}


def binarize(p, method: BarcodeMethod | str) -> np.ndarray:
    return _BINARIZERS[BarcodeMethod(method)](p)


def make_barcode(ps: ProjectionSet, method: BarcodeMethod | str) -> RadonBarcode:
    method = BarcodeMethod(method)
    codes = np.stack([binarize(p, method) for p in ps.projections])
    return RadonBarcode(ps.image_id, method, codes)


def shifted_distance(a: RadonProjection, b: RadonProjection, max_shift_fraction: float = 0.10) -> float:
    """Smallest overlap-scaled l1 distance over integer shifts within the window.

    For each shift s with |s| <= floor(max_shift_fraction * L), bin x of ``a``
    is compared with bin x + s of ``b`` where both exist, and the sum of
    absolute differences is scaled by L / overlap.
    """
    if len(a) != len(b):
        raise ValidationError(f"projection lengths differ: {len(a)} vs {len(b)}")
    if not math.isclose(a.angle, b.angle, abs_tol=1e-9):
        raise ValidationError(f"projection angles differ: {a.angle} vs {b.angle}")
    if max_shift_fraction < 0:
        raise ValidationError("max_shift_fraction must be non-negative")
    max_shift = max_shift_window(len(a), max_shift_fraction)
    d = kernels.shifted_l1(_bins(a)[None, :], _bins(b)[None, None, :], max_shift)
    return float(d[0, 0])


def max_shift_window(length: int, fraction: float) -> int:
    # tiny epsilon guards against 0.1 * 60 landing at 5.999...
    return min(int(math.floor(fraction * length + 1e-9)), length - 1)


def pack_bits(codes: np.ndarray) -> np.ndarray:
    """Pack a (..., L) bool array MSB-first into (..., ceil(L / 8)) bytes."""
    return np.packbits(np.asarray(codes, dtype=bool), axis=-1, bitorder="big")


def unpack_bits(packed: np.ndarray, length: int) -> np.ndarray:
    return np.unpackbits(packed, axis=-1, count=length, bitorder="big").astype(bool)


def to_words(codes: np.ndarray) -> np.ndarray:
    """Pack (..., L) bits into uint64 words for popcount scans (zero padded)."""
    packed = pack_bits(codes)
    nbytes = packed.shape[-1]
    pad = (-nbytes) % 8
    if pad:
        packed = np.concatenate(
            [packed, np.zeros(packed.shape[:-1] + (pad,), dtype=np.uint8)], axis=-1
        )
    return np.ascontiguousarray(packed).view(np.uint64)
