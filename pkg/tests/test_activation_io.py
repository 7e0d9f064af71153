import json
import struct

import numpy as np
import pytest

from repsim.activation_io import (
    ActivationSet, decimate, decimate_frames, global_average_pool, load_activation_set,
    read_array, read_matrix, write_activation_set, write_matrix,
)
from repsim.errors import FormatError, ManifestError
from repsim.metrics import DataMatrix

PAPER_LAYERS = [f"c{i}" for i in range(1, 10)] + ["fc1", "fc2", "softmax"]


def test_pool_small():
    t = np.array([[[[1, 1], [1, 1]], [[0, 2], [4, 6]]]], dtype=float)
    np.testing.assert_array_equal(global_average_pool(t), [[1, 3]])


def test_pool_is_reshape_for_dense_layers():
    t = np.random.default_rng(0).standard_normal((5, 3, 1, 1))
    out = global_average_pool(t)
    assert out.shape == (5, 3)
    np.testing.assert_array_equal(out, t[:, :, 0, 0])


def test_pool_constant():
    np.testing.assert_array_equal(global_average_pool(np.full((2, 3, 4, 5), 7.0)), 7.0)


def test_pool_rejects_bad_rank():
    with pytest.raises(ValueError):
        global_average_pool(np.ones((2, 3)))


def test_decimate_rows():
    m = np.arange(100.0)[:, None]
    out = decimate(m, 40)
    np.testing.assert_array_equal(out[:, 0], [0, 40, 80])


def test_decimate_hour_of_speech():
    # 943,280 frames kept every 40th frame
    m = np.zeros((943_280, 1))
    assert decimate(m, 40).shape == (23_582, 1)


def test_decimate_identity_and_datamatrix():
    m = DataMatrix(np.random.default_rng(1).standard_normal((7, 2)), "c1")
    out = decimate(m, 1)
    assert isinstance(out, DataMatrix) and out.label == "c1"
    np.testing.assert_array_equal(out.values, m.values)


@pytest.mark.parametrize("factor", [0, -1, 2.5])
def test_decimate_bad_factor(factor):
    with pytest.raises(ValueError):
        decimate(np.ones((4, 1)), factor)


@pytest.mark.parametrize("factor", [1, 2, 3, 7])
def test_pool_and_decimation_commute(factor):
    t = np.random.default_rng(factor).standard_normal((20, 4, 3, 2))
    a = decimate(global_average_pool(t), factor)
    b = global_average_pool(decimate_frames(t, factor))
    np.testing.assert_array_equal(a, b)


class TestRsam:
    def test_round_trip_bitwise(self, tmp_path):
        m = np.random.default_rng(2).standard_normal((13, 6))
        write_matrix(tmp_path / "m.rsam", m)
        back = read_matrix(tmp_path / "m.rsam")
        assert back.values.tobytes() == m.tobytes()

    def test_header_layout(self, tmp_path):
        write_matrix(tmp_path / "m.rsam", np.ones((2, 3)))
        raw = (tmp_path / "m.rsam").read_bytes()
        assert raw[:4] == bytes([0x52, 0x53, 0x41, 0x4D])
        assert struct.unpack("<HBB", raw[4:8]) == (1, 2, 2)
        assert struct.unpack("<2Q", raw[8:24]) == (2, 3)
        assert len(raw) == 24 + 6 * 8

    def test_tensor_round_trip(self, tmp_path):
        t = np.random.default_rng(3).standard_normal((4, 3, 2, 2))
        write_matrix(tmp_path / "t.rsam", t)
        np.testing.assert_array_equal(read_array(tmp_path / "t.rsam"), t)

    def test_float32_widened(self, tmp_path):
        m = np.random.default_rng(4).standard_normal((5, 2)).astype(np.float32)
        write_matrix(tmp_path / "m.rsam", m, dtype="float32")
        back = read_array(tmp_path / "m.rsam")
        assert back.dtype == np.float64
        np.testing.assert_array_equal(back, m.astype(np.float64))

    def test_bad_magic(self, tmp_path):
        write_matrix(tmp_path / "m.rsam", np.ones((2, 2)))
        raw = bytearray((tmp_path / "m.rsam").read_bytes())
        raw[:4] = b"XXXX"
        (tmp_path / "m.rsam").write_bytes(bytes(raw))
        with pytest.raises(FormatError, match="magic"):
            read_matrix(tmp_path / "m.rsam")

    def test_truncated(self, tmp_path):
        write_matrix(tmp_path / "m.rsam", np.ones((4, 4)))
        raw = (tmp_path / "m.rsam").read_bytes()
        (tmp_path / "m.rsam").write_bytes(raw[:-5])
        with pytest.raises(FormatError, match="123 bytes, expected 128"):
            read_matrix(tmp_path / "m.rsam")

    def test_nan_payload(self, tmp_path):
        write_matrix(tmp_path / "m.rsam", np.ones((2, 2)))
        raw = bytearray((tmp_path / "m.rsam").read_bytes())
        raw[-8:] = struct.pack("<d", float("nan"))
        (tmp_path / "m.rsam").write_bytes(bytes(raw))
        with pytest.raises(FormatError, match="NaN"):
            read_matrix(tmp_path / "m.rsam")

    def test_matrix_reader_rejects_tensor(self, tmp_path):
        write_matrix(tmp_path / "t.rsam", np.ones((2, 1, 1, 1)))
        with pytest.raises(FormatError):
            read_matrix(tmp_path / "t.rsam")


def _manifest(tmp_path, layers, probe="probe-1"):
    entries = []
    for name, values in layers:
        write_matrix(tmp_path / f"{name}.rsam", values)
        entries.append({"name": name, "path": f"{name}.rsam"})
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"probe_id": probe, "layers": entries}))
    return path


class TestManifest:
    def test_twelve_layers_in_order(self, tmp_path):
        rng = np.random.default_rng(5)
        path = _manifest(tmp_path, [(n, rng.standard_normal((6, 3))) for n in PAPER_LAYERS])
        s = load_activation_set(path)
        assert s.names == PAPER_LAYERS
        assert s.n_obs == 6 and s.probe_id == "probe-1"

    def test_deterministic(self, tmp_path):
        rng = np.random.default_rng(6)
        path = _manifest(tmp_path, [("c1", rng.standard_normal((4, 2))), ("c2", rng.standard_normal((4, 5)))])
        a, b = load_activation_set(path), load_activation_set(path)
        assert a.names == b.names
        for x, y in zip(a.layers, b.layers):
            assert x.values.tobytes() == y.values.tobytes()

    def test_inconsistent_rows(self, tmp_path):
        path = _manifest(tmp_path, [("c1", np.ones((4, 2))), ("c2", np.ones((5, 2)))])
        with pytest.raises(ManifestError, match="n_obs"):
            load_activation_set(path)

    def test_empty(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps({"probe_id": "p", "layers": []}))
        with pytest.raises(ManifestError, match="empty"):
            load_activation_set(path)

    def test_duplicate_names(self, tmp_path):
        write_matrix(tmp_path / "a.rsam", np.ones((3, 2)))
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps({"probe_id": "p", "layers": [
            {"name": "c1", "path": "a.rsam"}, {"name": "c1", "path": "a.rsam"}]}))
        with pytest.raises(ManifestError, match="duplicate"):
            load_activation_set(path)

    def test_missing_file(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps({"probe_id": "p", "layers": [{"name": "c1", "path": "nope.rsam"}]}))
        with pytest.raises(ManifestError, match="missing"):
            load_activation_set(path)

    def test_write_then_load(self, tmp_path):
        rng = np.random.default_rng(7)
        s = ActivationSet.from_arrays("p", [("l1", rng.standard_normal((5, 3))), ("l2", rng.standard_normal((5, 1)))])
        manifest = write_activation_set(tmp_path / "net", s)
        back = load_activation_set(manifest)
        assert back.names == ["l1", "l2"] and back.probe_id == "p"
        assert back["l2"].values.tobytes() == s["l2"].values.tobytes()
