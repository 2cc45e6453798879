"""Array serialization: round trips and malformed-input errors."""

import io

import numpy as np
import pytest

from ssvc.autodiff import FormatError, load_array, read_ndar, save_array, write_ndar


@pytest.mark.parametrize("shape", [(), (1,), (5,), (3, 4), (2, 3, 4, 5)])
@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_round_trip_bit_exact(tmp_path, shape, dtype):
    arr = (np.arange(int(np.prod(shape)) or 1, dtype=dtype) * 0.7 - 3).reshape(shape)
    path = tmp_path / "a.ndar"
    save_array(path, arr)
    back = load_array(path)
    assert back.dtype == arr.dtype
    assert back.shape == arr.shape
    assert back.tobytes() == arr.tobytes()


def test_nan_and_inf_survive(tmp_path):
    arr = np.array([np.nan, np.inf, -np.inf, 0.0], dtype=np.float32)
    save_array(tmp_path / "x.ndar", arr)
    back = load_array(tmp_path / "x.ndar")
    assert np.array_equal(back.view(np.uint32), arr.view(np.uint32))


def test_multiple_blocks_in_one_stream():
    buf = io.BytesIO()
    a = np.ones((2, 2), dtype=np.float32)
    b = np.zeros(3, dtype=np.float64)
    write_ndar(buf, a)
    write_ndar(buf, b)
    buf.seek(0)
    assert np.array_equal(read_ndar(buf), a)
    assert np.array_equal(read_ndar(buf), b)


def test_bad_magic_reports_offset():
    buf = io.BytesIO(b"XXXX" + b"\x00" * 20)
    with pytest.raises(FormatError, match="magic") as exc:
        read_ndar(buf)
    assert exc.value.offset == 0


def test_bad_magic_offset_inside_stream():
    buf = io.BytesIO()
    write_ndar(buf, np.zeros(2, dtype=np.float32))
    pos = buf.tell()
    buf.write(b"JUNKJUNKJUNKJUNK")
    buf.seek(0)
    read_ndar(buf)
    with pytest.raises(FormatError) as exc:
        read_ndar(buf)
    assert exc.value.offset == pos


def test_truncated_data_is_an_error_not_a_crash():
    buf = io.BytesIO()
    write_ndar(buf, np.arange(100, dtype=np.float64))
    raw = buf.getvalue()[:-40]
    with pytest.raises(FormatError, match="truncated"):
        read_ndar(io.BytesIO(raw))


def test_unsupported_version_is_explicit():
    buf = io.BytesIO()
    write_ndar(buf, np.zeros(1, dtype=np.float32))
    raw = bytearray(buf.getvalue())
    raw[4] = 99  # bump the little-endian version field
    with pytest.raises(FormatError, match="version"):
        read_ndar(io.BytesIO(bytes(raw)))


def test_integer_arrays_are_rejected():
    with pytest.raises(TypeError, match="float32/float64"):
        write_ndar(io.BytesIO(), np.arange(3))
