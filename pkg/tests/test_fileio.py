import struct

import numpy as np
import pytest

from gatedcrf import fileio


def test_tensor_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    for shape in ((3,), (2, 4), (2, 3, 5), (1, 2, 3, 3)):
        x = rng.standard_normal(shape)
        path = tmp_path / "t.ten"
        fileio.write_tensor(path, x)
        back = fileio.read_tensor(path)
        assert back.shape == x.shape
        assert np.array_equal(back, x)


def test_tensor_header_layout(tmp_path):
    path = tmp_path / "t.ten"
    fileio.write_tensor(path, np.array([[1.0, 2.0]]))
    raw = path.read_bytes()
    assert raw[:4] == b"TEN1"
    assert struct.unpack_from("<I", raw, 4)[0] == 2
    assert struct.unpack_from("<2I", raw, 8) == (1, 2)
    assert np.frombuffer(raw[16:], dtype="<f8").tolist() == [1.0, 2.0]


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.ten"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ValueError, match="magic"):
        fileio.read_tensor(path)


def test_truncated_payload_rejected(tmp_path):
    path = tmp_path / "t.ten"
    fileio.write_tensor(path, np.ones((2, 2)))
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError, match="payload"):
        fileio.read_tensor(path)


def test_pgm_roundtrip_mm_quantization(tmp_path):
    depth = np.array([[[0.0005, 1.2345], [65.535, 3.0]]])
    path = tmp_path / "d.pgm"
    fileio.write_pgm16(path, depth)
    raw = path.read_bytes()
    assert raw.startswith(b"P5\n2 2\n65535\n")
    back = fileio.read_pgm16(path)
    # lossless at millimeter precision
    assert np.abs(back - depth).max() <= 0.0005


def test_pgm_big_endian_samples(tmp_path):
    path = tmp_path / "d.pgm"
    fileio.write_pgm16(path, np.array([[[1.0]]]))  # 1000 mm
    raw = path.read_bytes()
    assert raw[-2:] == struct.pack(">H", 1000)


def test_kv_roundtrip(tmp_path):
    path = tmp_path / "c.txt"
    fileio.write_kv(path, {"iterations": 3, "flag": "false"})
    assert fileio.read_kv(path) == {"iterations": "3", "flag": "false"}


def test_kv_comments_and_errors(tmp_path):
    path = tmp_path / "c.txt"
    path.write_text("# comment\niterations = 5\n\nbad-line\n")
    with pytest.raises(ValueError, match="key = value"):
        fileio.read_kv(path)
    path.write_text("# only comments\n\n")
    assert fileio.read_kv(path) == {}


def test_parse_bool():
    assert fileio.parse_bool("true") and fileio.parse_bool("1")
    assert not fileio.parse_bool("False") and not fileio.parse_bool("off")
    with pytest.raises(ValueError):
        fileio.parse_bool("maybe")
