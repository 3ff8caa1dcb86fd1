import struct

import numpy as np
import pytest

from eegarm import container


def test_round_trip_preserves_dtype_shape_and_values(tmp_path):
    arrays = {"a": np.arange(12, dtype=np.float64).reshape(3, 4), "b": np.array([1, -2], dtype=np.int64),
              "c": np.zeros((0, 5)), "d": np.array(3.5)}
    container.write(tmp_path / "x.bin", {"kind": "test", "n": 1}, arrays)
    meta, back = container.read(tmp_path / "x.bin")
    assert meta == {"kind": "test", "n": 1}
    for k, v in arrays.items():
        assert back[k].dtype == v.dtype and back[k].shape == v.shape and np.array_equal(back[k], v)


def test_encoding_is_deterministic():
    arrays = {"w": np.random.default_rng(0).random((4, 4))}
    assert container.dumps({"b": 1, "a": 2}, arrays) == container.dumps({"a": 2, "b": 1}, arrays)


def test_layout_header():
    data = container.dumps({}, {"x": np.array([1.0])})
    assert data[:8] == container.MAGIC
    (hlen,) = struct.unpack("<I", data[8:12])
    assert len(data) == 12 + hlen + 8
    assert struct.unpack("<d", data[-8:]) == (1.0,)


@pytest.mark.parametrize("data", [b"", b"NOTMAGIC" + b"\x00" * 8, container.MAGIC + b"\xff\xff\x00\x00{"])
def test_corrupt_input_raises(data):
    with pytest.raises(container.ContainerError):
        container.loads(data)


def test_truncated_payload_raises():
    data = container.dumps({}, {"x": np.arange(10.0)})
    with pytest.raises(container.ContainerError):
        container.loads(data[:-8])


def test_unsupported_dtype():
    with pytest.raises(container.ContainerError):
        container.dumps({}, {"s": np.array(["a"])})
