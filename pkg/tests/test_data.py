import hashlib

import numpy as np
import pytest

from irsw.config import ExperimentConfig
from irsw.data import (
    build_dataset,
    build_design,
    complex_to_planes,
    generate_samples,
    load_split,
    planes_to_complex,
)


def tiny_cfg(**kwargs):
    defaults = dict(
        n_t=2, irs_rows=2, irs_cols=2, n_subcarriers=4, b=2, pattern="column",
        train_samples=20, val_samples=8, test_samples=8, seed=11,
        l_bs_irs=2, l_mu_irs=2,
    )
    defaults.update(kwargs)
    return ExperimentConfig(**defaults).validate()


class TestPlaneConversion:
    def test_roundtrip(self):
        rng = np.random.default_rng(0)
        h = rng.standard_normal((5, 3, 4)) + 1j * rng.standard_normal((5, 3, 4))
        np.testing.assert_array_equal(planes_to_complex(complex_to_planes(h)), h)

    def test_plane_layout(self):
        h = np.array([[[1 + 2j]]])
        planes = complex_to_planes(h)
        assert planes.shape == (1, 2, 1, 1)
        assert planes[0, 0, 0, 0] == 1.0 and planes[0, 1, 0, 0] == 2.0


class TestGenerateSamples:
    def test_counts_one_per_realization_subcarrier(self):
        cfg = tiny_cfg()
        inputs, targets, snrs = generate_samples(cfg, 10 * cfg.n_subcarriers)
        assert inputs.shape == (40, 2, cfg.n_t, cfg.m)
        assert targets.shape == inputs.shape
        assert snrs.shape == (40,)

    def test_noiseless_full_design_exact(self):
        # b == M and a huge SNR make the stored estimate equal the channel.
        cfg = tiny_cfg(b=4, pattern="column", snr_db=[400.0])
        inputs, targets, _ = generate_samples(cfg, 12)
        np.testing.assert_allclose(inputs, targets, atol=1e-10)

    def test_snr_cycling(self):
        cfg = tiny_cfg(snr_db=[0.0, 10.0])
        _, _, snrs = generate_samples(cfg, 8)
        assert set(snrs) == {0.0, 10.0}
        np.testing.assert_array_equal(snrs[::2], 0.0)

    def test_deterministic(self):
        cfg = tiny_cfg()
        a = generate_samples(cfg, 16)
        b = generate_samples(cfg, 16)
        for x, y in zip(a, b):
            assert np.array_equal(x, y)

    def test_stream_offset_gives_fresh_samples(self):
        cfg = tiny_cfg()
        a, _, _ = generate_samples(cfg, 8)
        b, _, _ = generate_samples(cfg, 8, stream_offset=1000)
        assert not np.array_equal(a, b)

    def test_masked_columns_zero(self):
        cfg = tiny_cfg()
        pattern, _, _ = build_design(cfg)
        inputs, _, _ = generate_samples(cfg, 8)
        inactive = np.setdiff1d(np.arange(cfg.m), pattern.active_indices())
        assert np.all(inputs[:, :, :, inactive] == 0.0)


class TestBuildDataset:
    def test_split_sizes_and_reload(self, tmp_path):
        cfg = tiny_cfg()
        summary = build_dataset(cfg, tmp_path)
        assert summary == {"train": 20, "val": 8, "test": 8}
        train = load_split(tmp_path, "train")
        assert train["inputs"].shape == (20, 2, cfg.n_t, cfg.m)
        assert train["targets"].shape == (20, 2, cfg.n_t, cfg.m)
        assert train["snr"].shape == (20,)

    def test_identical_seed_bitwise_identical_files(self, tmp_path):
        cfg = tiny_cfg()
        d1, d2 = tmp_path / "a", tmp_path / "b"
        build_dataset(cfg, d1)
        build_dataset(cfg, d2)
        for split in ("train", "val", "test"):
            for suffix in ("inputs", "targets", "snr"):
                h1 = hashlib.sha256((d1 / f"dataset_{split}_{suffix}.irst").read_bytes()).hexdigest()
                h2 = hashlib.sha256((d2 / f"dataset_{split}_{suffix}.irst").read_bytes()).hexdigest()
                assert h1 == h2

    def test_different_seed_differs(self, tmp_path):
        d1, d2 = tmp_path / "a", tmp_path / "b"
        build_dataset(tiny_cfg(), d1)
        build_dataset(tiny_cfg(seed=12), d2)
        a = (d1 / "dataset_train_inputs.irst").read_bytes()
        b = (d2 / "dataset_train_inputs.irst").read_bytes()
        assert a != b

    def test_channel_dump_records(self, tmp_path):
        from irsw.formats import load_tensors

        cfg = tiny_cfg(dump_channels=True)
        build_dataset(cfg, tmp_path)
        records = load_tensors(tmp_path / "hcs_dump.irst")
        assert len(records) == 36  # one record per stored sample
        assert records[0].shape == (cfg.n_t, cfg.m, 2)
