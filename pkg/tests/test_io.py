import numpy as np
import pytest

from hdeta import io as hio
from hdeta.core_model import DataError, Dataset, GroundTruth


@pytest.fixture
def data(rng):
    return Dataset(rng.standard_normal((7, 3)), rng.standard_normal(7))


@pytest.mark.parametrize("name", ["d.csv", "d.bin"])
def test_dataset_round_trip_is_exact(tmp_path, data, name):
    path = tmp_path / name
    hio.write_dataset(path, data)
    back = hio.read_dataset(path)
    np.testing.assert_array_equal(back.x, data.x)
    np.testing.assert_array_equal(back.y, data.y)


def test_binary_header_layout(tmp_path):
    path = tmp_path / "m.bin"
    mat = np.arange(6.0).reshape(2, 3)
    hio.write_matrix(path, mat)
    raw = path.read_bytes()
    assert raw[:4] == b"VSH1"
    assert int.from_bytes(raw[4:12], "little") == 2
    assert int.from_bytes(raw[12:20], "little") == 3
    # column-major payload
    np.testing.assert_array_equal(np.frombuffer(raw[20:], "<f8"), mat.ravel(order="F"))
    np.testing.assert_array_equal(hio.read_matrix(path), mat)


def test_binary_errors(tmp_path):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"XXXX" + bytes(16))
    with pytest.raises(DataError, match="magic"):
        hio.read_matrix(bad)
    short = tmp_path / "short.bin"
    hio.write_matrix(short, np.ones((2, 2)))
    short.write_bytes(short.read_bytes()[:-8])
    with pytest.raises(DataError, match="bytes"):
        hio.read_matrix(short)


@pytest.mark.parametrize("text,line", [
    ("y,x1\n1,2\n3\n", "line 3"),
    ("y,x1\n1,abc\n", "line 2"),
    ("y,z1\n1,2\n", "line 1"),
])
def test_csv_errors_name_the_line(tmp_path, text, line):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(DataError, match=line):
        hio.read_dataset(path)


def test_ground_truth_json(tmp_path):
    gt = GroundTruth(np.array([1.0, 0.0]), 2.0, np.array([[1.0, 0.3], [0.3, 1.0]]))
    path = tmp_path / "gt.json"
    hio.write_ground_truth(path, gt)
    back = hio.read_ground_truth(path)
    np.testing.assert_array_equal(back.sigma_mat, gt.sigma_mat)
    path.write_text("{not json")
    with pytest.raises(DataError):
        hio.read_ground_truth(path)
