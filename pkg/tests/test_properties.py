import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.ndimage import uniform_filter1d

from rbcx.imaging import (
    PreprocessConfig,
    apply_circular_mask,
    margin_band_mask,
    preprocess,
    remove_bright_landmarks,
    square_pad,
)
from rbcx.irma import IrmaCode, axis_error, code_error, evaluate_run, parse_code
from rbcx.lbp import lbp_distance, lbp_histogram
from rbcx.radon import (
    RadonProjection,
    binarize_median,
    binarize_minmax,
    pack_bits,
    radon_projection,
    shifted_distance,
    unpack_bits,
)

unit = st.floats(0.0, 1.0, allow_nan=False)
square = st.integers(2, 12).flatmap(lambda n: arrays(np.float64, (n, n), elements=unit))
vectors = st.integers(1, 70).flatmap(lambda n: arrays(np.float64, n, elements=st.floats(-1e3, 1e3)))
angles = st.floats(0.0, 179.999)


@settings(max_examples=80, deadline=None)
@given(square, angles)
def test_mass_conserved(img, angle):
    total = radon_projection(img, angle, crop=False).bins.sum()
    assert abs(total - img.sum()) <= 1e-9 * max(1.0, img.sum())


@settings(max_examples=60, deadline=None)
@given(square, angles)
def test_projection_non_negative(img, angle):
    assert radon_projection(img, angle).bins.min() >= -1e-9


@given(vectors)
def test_median_at_least_half_ones(v):
    bits = binarize_median(v)
    assert bits.shape == v.shape
    assert bits.sum() >= (v.size + 1) // 2


@given(vectors)
def test_minmax_deterministic(v):
    a = binarize_minmax(v)
    assert a.shape == v.shape
    np.testing.assert_array_equal(a, binarize_minmax(v.copy()))


@given(vectors)
def test_minmax_reversal_flips_rising(v):
    # reversing a projection with no flat smoothed steps turns every rise into a fall
    fwd, back = binarize_minmax(v), binarize_minmax(v[::-1])
    steps = np.diff(uniform_filter1d(v, 3, mode="nearest"))
    if v.size > 2 and np.all(steps != 0):
        np.testing.assert_array_equal(fwd[1:], ~back[::-1][:-1])


@given(st.integers(1, 200).flatmap(lambda n: arrays(np.bool_, n)))
def test_pack_roundtrip(bits):
    np.testing.assert_array_equal(unpack_bits(pack_bits(bits), bits.size), bits)


@given(vectors, vectors)
def test_shifted_distance_symmetric_and_bounded(a, b):
    n = min(a.size, b.size)
    pa, pb = RadonProjection(0.0, a[:n]), RadonProjection(0.0, b[:n])
    d = shifted_distance(pa, pb)
    assert d >= 0
    assert d <= np.abs(a[:n] - b[:n]).sum() + 1e-9
    assert np.isclose(d, shifted_distance(pb, pa), rtol=1e-12, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 15).flatmap(lambda n: arrays(np.float64, (n, n), elements=unit)))
def test_lbp_is_distribution(img):
    h = lbp_histogram(img)
    assert h.shape == (59,) and np.all(h >= 0) and np.isclose(h.sum(), 1.0)


code_chars = st.sampled_from("0123456789abc*")


@st.composite
def codes(draw):
    return IrmaCode(tuple("".join(draw(st.lists(code_chars, min_size=n, max_size=n))) for n in (4, 3, 3, 3)))


@given(codes(), codes())
def test_code_error_range(a, b):
    e = code_error(a, b)
    assert 0.0 <= e <= 1.0
    assert code_error(a, a) == 0.0 or "*" in a.compact


@given(codes())
def test_code_text_roundtrip(c):
    assert parse_code(str(c)) == c
    assert parse_code(c.compact) == c


rect = st.tuples(st.integers(1, 20), st.integers(1, 20)).flatmap(lambda s: arrays(np.float64, s, elements=unit))
squares_3 = st.integers(3, 20).flatmap(lambda n: arrays(np.float64, (n, n), elements=unit))


@given(rect)
def test_square_pad_moves_content_only(img):
    out = square_pad(img)
    assert out.shape[0] == out.shape[1] == max(img.shape)
    assert np.sort(out[out != 0]).tolist() == np.sort(img[img != 0]).tolist()
    np.testing.assert_array_equal(square_pad(out), out)


@given(squares_3, st.floats(0.5, 1.0), st.floats(0.0, 0.5))
def test_landmark_removal_local_and_non_increasing(img, white, band):
    cfg = PreprocessConfig(white_threshold_fraction=white, margin_band_fraction=band)
    out = remove_bright_landmarks(img, cfg)
    inside = margin_band_mask(img.shape[0], band)
    np.testing.assert_array_equal(out[~inside], img[~inside])
    assert out.max() <= img.max()
    assert out.min() >= 0.0


@given(squares_3)
def test_circular_mask_idempotent_and_shrinking(img):
    once = apply_circular_mask(img)
    np.testing.assert_array_equal(apply_circular_mask(once), once)
    assert np.count_nonzero(once) <= np.count_nonzero(img)


@settings(max_examples=30, deadline=None)
@given(st.tuples(st.integers(8, 90), st.integers(8, 90)).flatmap(lambda s: arrays(np.float64, s, elements=unit)))
def test_preprocess_shape_and_range(img):
    out = preprocess(img, PreprocessConfig(target_side=8))
    assert out.shape == (8, 8)
    assert out.min() >= 0.0 and out.max() <= 1.0


hist = arrays(np.float64, 59, elements=st.floats(0, 1))


@given(hist, hist, hist)
def test_lbp_distance_is_metric(a, b, c):
    assert lbp_distance(a, b) == lbp_distance(b, a)
    assert (lbp_distance(a, b) == 0) == np.array_equal(a, b)
    assert lbp_distance(a, c) <= lbp_distance(a, b) + lbp_distance(b, c) + 1e-12


@given(st.text("0123456789", min_size=1, max_size=6), st.data())
def test_axis_error_monotone_in_wrong_positions(truth, data):
    branching = data.draw(st.lists(st.integers(1, 20), min_size=len(truth), max_size=len(truth)))
    pred = list(truth)
    last = axis_error(truth, "".join(pred), branching)
    for pos in data.draw(st.permutations(range(len(truth)))):
        pred[pos] = "x"
        err = axis_error(truth, "".join(pred), branching)
        assert err >= last - 1e-15
        last = err


@given(st.lists(st.integers(0, 2), min_size=1, max_size=30))
def test_e_total_is_plain_sum(choices):
    truth = parse_code("1121-127-700-500")
    preds = [parse_code("1121-127-700-500"), parse_code("2121-127-700-500"), parse_code("1121-*27-700-500")]
    picks = [preds[c] for c in choices]
    report = evaluate_run([(truth, p) for p in picks])
    assert abs(report.e_total - sum(code_error(truth, p) for p in picks)) <= 1e-9
