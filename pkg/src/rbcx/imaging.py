"""Image ingestion and the normalisation chain applied before feature extraction.

Images are plain 2-D ``float64`` numpy arrays indexed ``[row, col]`` with
intensities in ``[0, 1]``. The chain is::

    square_pad -> remove_bright_landmarks -> apply_circular_mask -> downsample
"""

from dataclasses import dataclass
from os import PathLike

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .errors import ImageFormatError, ValidationError

_SUPPORTED_FORMATS = {"PNG", "PPM"}  # Pillow reports PGM files as "PPM"
_MODE_MAX = {"L": 255.0, "I;16": 65535.0, "I;16B": 65535.0, "I;16L": 65535.0, "I": 65535.0}

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class PreprocessConfig:
    """Parameters of the normalisation chain.

    ``pad_enabled``, ``landmarks_enabled`` and ``circle_enabled`` switch
    individual stages off for ablation runs. With padding disabled the image
    is resized to a square directly, which distorts its aspect ratio.
    """

    target_side: int = 64
    white_threshold_fraction: float = 0.98
    margin_band_fraction: float = 0.15
    circle_enabled: bool = True
    pad_enabled: bool = True
    landmarks_enabled: bool = True

    def __post_init__(self):
        if not 0.0 < self.white_threshold_fraction <= 1.0:
            raise ValidationError("white_threshold_fraction must be in (0, 1]")
        if not 0.0 <= self.margin_band_fraction <= 0.5:
            raise ValidationError("margin_band_fraction must be in [0, 0.5]")
        if int(self.target_side) != self.target_side or self.target_side < 8:
            raise ValidationError("target_side must be an integer >= 8")


def as_gray(img) -> np.ndarray:
    """Validate and convert ``img`` to a 2-D float64 array in [0, 1]."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"expected a 2-D grayscale image, got shape {arr.shape}")
    if arr.size == 0:
        raise ValidationError("image has zero size")
    if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
        raise ValidationError("intensities must be finite and within [0, 1]")
    return arr


def _require_square(img: np.ndarray) -> int:
    if img.shape[0] != img.shape[1]:
        raise ValidationError(f"expected a square image, got {img.shape[1]}x{img.shape[0]}")
    return img.shape[0]


def load_image(path: str | PathLike) -> np.ndarray:
    """Read an 8- or 16-bit grayscale PNG/PGM and rescale it to [0, 1].

    Raises ``OSError`` when the file cannot be read, :class:`ImageFormatError`
    for colour or otherwise unsupported rasters and :class:`ValidationError`
    for zero-sized images.
    """
    try:
        with Image.open(path) as im:
            fmt, mode = im.format, im.mode
            if fmt not in _SUPPORTED_FORMATS:
                raise ImageFormatError(f"{path}: unsupported raster format {fmt!r}")
            if mode not in _MODE_MAX:
                raise ImageFormatError(
                    f"{path}: image mode {mode!r} is not 8/16-bit grayscale"
                )
            if im.width == 0 or im.height == 0:
                raise ValidationError(f"{path}: zero-sized image")
            raw = np.asarray(im)
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"{path}: not a decodable PNG/PGM raster") from exc
    if raw.size == 0:
        raise ValidationError(f"{path}: zero-sized image")
    scale = _MODE_MAX[mode]
    if raw.max() > scale:
        raise ImageFormatError(f"{path}: pixel values exceed 16-bit range")
    return raw.astype(np.float64) / scale


def square_pad(img) -> np.ndarray:
    """Centre ``img`` on a zero canvas of side ``max(height, width)``.

    An odd leftover pixel goes to the bottom/right band.
    """
    img = as_gray(img)
    h, w = img.shape
    side = max(h, w)
    if h == w:
        return img.copy()
    out = np.zeros((side, side), dtype=np.float64)
    top = (side - h) // 2
    left = (side - w) // 2
    out[top : top + h, left : left + w] = img
    return out


def margin_band_mask(side: int, fraction: float) -> np.ndarray:
    """Boolean mask of pixels closer than ``fraction * side`` to any edge."""
    idx = np.arange(side)
    edge = np.minimum(idx, side - 1 - idx)
    dist = np.minimum(edge[:, None], edge[None, :])
    return dist < fraction * side


def remove_bright_landmarks(img, cfg: PreprocessConfig | None = None) -> np.ndarray:
    """Fill near-white marks lying in the border band with nearby median intensity.

    Pixels at or above ``white_threshold_fraction * max(img)`` inside the
    margin band are grouped into 8-connected components. Each component is
    replaced by the median of its one-pixel dilation ring, excluding other
    removed pixels. A component with an empty ring is left as is.
    """
    cfg = cfg or PreprocessConfig()
    img = as_gray(img)
    side = _require_square(img)
    peak = img.max()
    if peak <= 0.0:
        return img.copy()
    removed = (img >= cfg.white_threshold_fraction * peak) & margin_band_mask(
        side, cfg.margin_band_fraction
    )
    out = img.copy()
    if not removed.any():
        return out
    labels, count = ndimage.label(removed, structure=_EIGHT_CONNECTED)
    slices = ndimage.find_objects(labels)
    for lab, sl in enumerate(slices, start=1):
        # grow the bounding box by one pixel so the ring fits
        r0, r1 = max(sl[0].start - 1, 0), min(sl[0].stop + 1, side)
        c0, c1 = max(sl[1].start - 1, 0), min(sl[1].stop + 1, side)
        component = labels[r0:r1, c0:c1] == lab
        ring = ndimage.binary_dilation(component, structure=_EIGHT_CONNECTED)
        ring &= ~removed[r0:r1, c0:c1]
        if not ring.any():
            continue
        window = out[r0:r1, c0:c1]
        window[component] = np.median(img[r0:r1, c0:c1][ring])
    return out


def apply_circular_mask(img) -> np.ndarray:
    """Zero every pixel whose centre lies farther than N/2 from the image centre."""
    img = as_gray(img)
    side = _require_square(img)
    centres = np.arange(side) + 0.5 - side / 2.0
    dist2 = centres[:, None] ** 2 + centres[None, :] ** 2
    out = img.copy()
    out[dist2 > (side / 2.0) ** 2] = 0.0
    return out


def _area_weights(src: int, dst: int) -> np.ndarray:
    """(dst, src) matrix of source-pixel overlap fractions for box resampling."""
    scale = src / dst
    edges = np.arange(dst + 1) * scale
    lo = np.maximum(edges[:-1, None], np.arange(src)[None, :])
    hi = np.minimum(edges[1:, None], np.arange(src)[None, :] + 1)
    return np.clip(hi - lo, 0.0, None) / scale


def area_resize(img, height: int, width: int) -> np.ndarray:
    """Box-filter resample to ``height x width`` (exact fractional overlaps)."""
    img = as_gray(img)
    rows = _area_weights(img.shape[0], height)
    cols = _area_weights(img.shape[1], width)
    return np.clip(rows @ img @ cols.T, 0.0, 1.0)


def downsample(img, target_side: int = 64) -> np.ndarray:
    """Area-average a square image down to ``target_side`` (no upsampling)."""
    img = as_gray(img)
    side = _require_square(img)
    if side < target_side:
        raise ValidationError(f"cannot downsample side {side} to larger side {target_side}")
    if side == target_side:
        return img.copy()
    return area_resize(img, target_side, target_side)


def preprocess(img, cfg: PreprocessConfig | None = None) -> np.ndarray:
    """Run the full normalisation chain; output is ``target_side`` square."""
    cfg = cfg or PreprocessConfig()
    img = as_gray(img)
    if cfg.pad_enabled:
        img = square_pad(img)
    else:
        side = max(img.shape)
        img = area_resize(img, side, side)
    if cfg.landmarks_enabled:
        img = remove_bright_landmarks(img, cfg)
    if cfg.circle_enabled:
        img = apply_circular_mask(img)
    return downsample(img, cfg.target_side)
