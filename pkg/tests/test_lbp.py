import numpy as np
import pytest
from scipy.ndimage import map_coordinates

from rbcx import kernels
from rbcx.errors import ValidationError
from rbcx.lbp import N_BINS, UNIFORM_BIN, lbp_distance, lbp_histogram


def oracle_codes(img):
    """Per-pixel LBP codes via scipy bilinear sampling on the radius-1 circle."""
    h, w = img.shape
    rows, cols = np.mgrid[1 : h - 1, 1 : w - 1]
    codes = np.zeros(rows.shape, dtype=np.int64)
    for p in range(8):
        dy = -np.sin(2 * np.pi * p / 8)
        dx = np.cos(2 * np.pi * p / 8)
        dy, dx = (round(dy), round(dx)) if abs(dy) < 1e-9 or abs(dx) < 1e-9 else (dy, dx)
        sample = map_coordinates(img, [rows + dy, cols + dx], order=1)
        codes |= (sample >= img[1:-1, 1:-1]).astype(np.int64) << p
    return codes


def test_uniform_table():
    assert (UNIFORM_BIN < N_BINS - 1).sum() == 58
    assert UNIFORM_BIN[0] == 0 and UNIFORM_BIN[255] == 57
    assert UNIFORM_BIN[0b00000101] == N_BINS - 1


def test_constant_image_single_spike(backend):
    hist = lbp_histogram(np.full((6, 6), 0.4))
    assert hist[UNIFORM_BIN[255]] == 1.0 and hist.sum() == 1.0


def test_single_bright_pixel(backend):
    img = np.zeros((5, 5))
    img[2, 2] = 1.0
    codes = kernels.lbp_codes(img, True)
    # the bright centre sees only darker neighbours; everyone else sees >= centre
    expected = np.full((3, 3), 255)
    expected[1, 1] = 0
    np.testing.assert_array_equal(codes, expected)
    hist = lbp_histogram(img)
    assert hist[0] == pytest.approx(1 / 9) and hist[57] == pytest.approx(8 / 9)


def test_single_dark_pixel_hand_codes(backend):
    img = np.ones((5, 5))
    img[2, 2] = 0.0
    # bit p is the neighbour at angle 45p degrees counter-clockwise from east
    expected = np.array(
        [
            [255 - 128, 255 - 32 - 64 - 128, 255 - 32],
            [255 - 1 - 2 - 128, 255, 255 - 8 - 16 - 32],
            [255 - 2, 255 - 2 - 4 - 8, 255 - 8],
        ]
    )
    np.testing.assert_array_equal(kernels.lbp_codes(img, True), expected)
    # nearest sampling: only the neighbour pointing at the centre clears its bit
    nearest = np.array([[255 - 128, 255 - 64, 255 - 32], [255 - 1, 255, 255 - 16], [255 - 2, 255 - 4, 255 - 8]])
    np.testing.assert_array_equal(kernels.lbp_codes(img, False), nearest)


def test_codes_match_scipy_oracle(backend, rng):
    img = rng.random((20, 23))
    np.testing.assert_array_equal(kernels.lbp_codes(img, True), oracle_codes(img))


def test_normalised(rng):
    for shape in [(3, 3), (10, 7), (64, 64)]:
        assert lbp_histogram(rng.random(shape)).sum() == pytest.approx(1.0)


def test_nearest_invariant_to_monotone_transform(rng):
    img = rng.random((16, 16))
    np.testing.assert_array_equal(lbp_histogram(img, False), lbp_histogram(np.sqrt(img) ** 3 + 0.1, False))


def test_bilinear_invariant_to_affine(rng):
    img = rng.random((16, 16))
    np.testing.assert_array_equal(lbp_histogram(img), lbp_histogram(2.0 * img))


def test_too_small():
    with pytest.raises(ValidationError):
        lbp_histogram(np.zeros((2, 5)))


class TestDistance:
    def test_examples(self):
        assert lbp_distance([0.2, 0.8], [0.2, 0.8]) == 0
        assert lbp_distance([1, 0], [0, 1]) == 2
        assert lbp_distance([0.5, 0.5], [1, 0]) == 1.0

    def test_mismatch(self):
        with pytest.raises(ValidationError):
            lbp_distance([1, 0], [1, 0, 0])
