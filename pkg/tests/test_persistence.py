import struct

import numpy as np
import pytest

from rbcx.errors import IndexBoundsError, IndexFormatError
from rbcx.imaging import PreprocessConfig
from rbcx.irma import parse_code
from rbcx.persistence import MAGIC, dumps_index, load_index, loads_index, save_index

from synth import random_index


def assert_same(a, b):
    assert a.image_ids == b.image_ids
    assert a.source_paths == b.source_paths
    assert a.irma_codes == b.irma_codes
    assert a.angles == b.angles
    assert a.pcfg == b.pcfg
    for name in ("projections", "median_codes", "minmax_codes", "lbp"):
        x, y = getattr(a, name), getattr(b, name)
        assert x.dtype == y.dtype
        assert x.tobytes() == y.tobytes()


@pytest.fixture
def small(rng):
    codes = [parse_code("1121-127-700-500"), None, parse_code("1123-2*1-914-7**")]
    idx, _ = random_index(rng, 3, codes=codes)
    return idx


def test_roundtrip_file(small, tmp_path):
    path = tmp_path / "a.rbcx"
    save_index(small, path)
    assert not (tmp_path / "a.rbcx.tmp").exists()
    assert_same(small, load_index(path))


def test_bytes_deterministic(small):
    data = dumps_index(small)
    assert data.startswith(MAGIC)
    assert dumps_index(loads_index(data)) == data


def test_unicode_and_paths(rng):
    from rbcx.index import Index

    proj = rng.random((2, 2, 9)).astype(np.float32)
    pcfg = PreprocessConfig(target_side=9, circle_enabled=False, white_threshold_fraction=0.9)
    idx = Index(["röntgen", "b"], ["/data/ä.png", ""], [None, None], (10.0, 99.5), pcfg,
                proj, proj > 0.5, proj > 0.2, rng.random((2, 59)))
    assert_same(idx, loads_index(dumps_index(idx)))


def test_wrong_magic(small):
    data = bytearray(dumps_index(small))
    data[:4] = b"XXXX"
    with pytest.raises(IndexFormatError, match="magic"):
        loads_index(bytes(data))


def test_wrong_version(small):
    data = bytearray(dumps_index(small))
    data[4:6] = struct.pack("<H", 99)
    with pytest.raises(IndexFormatError, match="version"):
        loads_index(bytes(data))


@pytest.mark.parametrize("cut", [2, 10, 60, 200, -1])
def test_truncated(small, tmp_path, cut):
    data = dumps_index(small)
    path = tmp_path / "t.rbcx"
    path.write_bytes(data[:cut])
    with pytest.raises(IndexFormatError):
        load_index(path)


def test_truncated_payload_is_bounds_error(small):
    data = dumps_index(small)
    with pytest.raises(IndexBoundsError):
        loads_index(data[:-8])


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_index(tmp_path / "none.rbcx")
