import numpy as np
import pytest

from irsw.formats import (
    ResultRow,
    export_results,
    load_checkpoint,
    load_tensor,
    load_tensors,
    parse_results,
    save_checkpoint,
    save_tensor,
    save_tensors,
)


class TestCheckpoint:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        blobs = [
            ("can.conv_in.w", rng.standard_normal((4, 2, 3, 3))),
            ("can.conv_in.b", rng.standard_normal(4)),
            ("cmn.prelu.slope", np.array(0.25)),
        ]
        path = tmp_path / "model.irsw"
        save_checkpoint(path, blobs)
        loaded = load_checkpoint(path)
        assert [name for name, _ in loaded] == [name for name, _ in blobs]
        for (_, a), (_, b) in zip(blobs, loaded):
            assert np.array_equal(np.asarray(a, dtype=np.float64), b)

    def test_magic_bytes(self, tmp_path):
        path = tmp_path / "model.irsw"
        save_checkpoint(path, [("x", np.ones(2))])
        raw = path.read_bytes()
        assert raw[:4] == b"IRSW"
        assert raw[4:6] == (1).to_bytes(2, "little")

    def test_wrong_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.irsw"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ValueError, match="magic"):
            load_checkpoint(path)

    def test_truncated_rejected(self, tmp_path):
        path = tmp_path / "model.irsw"
        save_checkpoint(path, [("x", np.ones(8))])
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ValueError, match="truncated"):
            load_checkpoint(path)

    def test_unicode_names(self, tmp_path):
        path = tmp_path / "model.irsw"
        save_checkpoint(path, [("p/q.r", np.ones((1, 1)))])
        assert load_checkpoint(path)[0][0] == "p/q.r"


class TestTensorContainer:
    def test_roundtrip_f64(self, tmp_path):
        arr = np.random.default_rng(1).standard_normal((3, 4, 2))
        path = tmp_path / "t.irst"
        save_tensor(path, arr)
        assert np.array_equal(load_tensor(path), arr)

    def test_roundtrip_f32(self, tmp_path):
        arr = np.random.default_rng(2).standard_normal((5,)).astype(np.float32)
        path = tmp_path / "t.irst"
        save_tensor(path, arr)
        loaded = load_tensor(path)
        assert loaded.dtype == np.float32
        assert np.array_equal(loaded, arr)

    def test_magic_and_layout(self, tmp_path):
        path = tmp_path / "t.irst"
        save_tensor(path, np.arange(6, dtype=np.float64).reshape(2, 3))
        raw = path.read_bytes()
        assert raw[:4] == b"IRST"
        assert raw[6] == 1  # dtype code f64
        assert raw[7] == 2  # ndim
        assert int.from_bytes(raw[8:12], "little") == 2
        assert int.from_bytes(raw[12:16], "little") == 3
        assert np.frombuffer(raw[16:], dtype="<f8").tolist() == [0, 1, 2, 3, 4, 5]

    def test_multi_record_stream(self, tmp_path):
        rng = np.random.default_rng(3)
        records = [rng.standard_normal((2, 2)) for _ in range(5)]
        path = tmp_path / "s.irst"
        save_tensors(path, records)
        loaded = load_tensors(path)
        assert len(loaded) == 5
        for a, b in zip(records, loaded):
            assert np.array_equal(a, b)

    def test_unsupported_dtype(self, tmp_path):
        with pytest.raises(ValueError, match="dtype"):
            save_tensor(tmp_path / "t.irst", np.ones(3, dtype=np.int32))


class TestResultsCsv:
    def test_empty_table(self, tmp_path):
        path = tmp_path / "r.csv"
        export_results([], path)
        assert path.read_text() == "method,b,snr_db,nmse,wall_time_ms,flop_estimate\n"

    def test_single_row_roundtrip(self, tmp_path):
        row = ResultRow("mba", 8, 10.0, 0.123456789012345, 41.77, 2.5e5 * 4 * 16)
        path = tmp_path / "r.csv"
        export_results([row], path)
        back = parse_results(path)[0]
        assert back == row

    def test_bitwise_roundtrip_10k_rows(self, tmp_path):
        rng = np.random.default_rng(4)
        rows = [
            ResultRow("ls_aug", int(rng.integers(1, 64)), float(rng.normal() * 10),
                      float(np.abs(rng.normal())), float(np.abs(rng.normal()) * 100),
                      float(np.abs(rng.normal()) * 1e6))
            for _ in range(10_000)
        ]
        path = tmp_path / "r.csv"
        export_results(rows, path)
        back = parse_results(path)
        for a, b in zip(rows, back):
            assert a.nmse == b.nmse
            assert a.snr_db == b.snr_db
            assert a.wall_time_ms == b.wall_time_ms
            assert a.flop_estimate == b.flop_estimate

    def test_nine_significant_digits(self, tmp_path):
        path = tmp_path / "r.csv"
        export_results([ResultRow("can", 4, 0.0, 1.0 / 3.0, 0.0, 1.0)], path)
        nmse_field = path.read_text().splitlines()[1].split(",")[3]
        digits = nmse_field.replace(".", "").replace("-", "").lstrip("0")
        assert len(digits) >= 9

    def test_negative_nmse_rejected(self):
        with pytest.raises(ValueError):
            ResultRow("mba", 1, 0.0, -0.1, 0.0, 0.0)
