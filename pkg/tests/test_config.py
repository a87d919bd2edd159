import numpy as np
import pytest

from irsw.config import ConfigError, ExperimentConfig, load_config, parse_config_text


BASE = """
# toy experiment
n_t = 4
irs_rows = 4
irs_cols = 4
n_subcarriers = 16
b = 8
pattern = proposed
psi_kind = dft
snr_db = 0, 10, 20
train_samples = 100
val_samples = 20
test_samples = 20
seed = 7
measure_time = false
"""


class TestParsing:
    def test_basic_keys(self):
        cfg = parse_config_text(BASE).validate()
        assert cfg.n_t == 4
        assert cfg.b == 8
        assert cfg.snr_db == [0.0, 10.0, 20.0]
        assert cfg.seed == 7
        assert cfg.measure_time is False

    def test_comments_and_blanks(self):
        cfg = parse_config_text("seed = 1  # inline comment\n\n# full comment\nn_t = 2\n")
        assert cfg.seed == 1 and cfg.n_t == 2

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown config key"):
            parse_config_text("bogus = 3")

    def test_bad_int(self):
        with pytest.raises(ConfigError, match="integer"):
            parse_config_text("n_t = four")

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="key = value"):
            parse_config_text("just a line")

    def test_seed_mandatory(self):
        with pytest.raises(ConfigError, match="seed"):
            parse_config_text("n_t = 4").validate()

    def test_b_range_checked(self):
        with pytest.raises(ConfigError, match="out of range"):
            parse_config_text("seed = 1\nirs_rows = 2\nirs_cols = 2\nb = 9").validate()

    def test_bad_pattern(self):
        with pytest.raises(ConfigError):
            parse_config_text("seed = 1\npattern = diagonal").validate()


class TestLoadConfig:
    def test_file_and_overrides(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(BASE)
        cfg = load_config(path, overrides=["b=12", "snr_db=5"])
        assert cfg.b == 12
        assert cfg.snr_db == [5.0]

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.cfg")

    def test_bad_override(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(BASE)
        with pytest.raises(ConfigError, match="override"):
            load_config(path, overrides=["b"])


class TestSystemConfig:
    def test_field_mapping(self):
        cfg = parse_config_text(BASE).validate()
        system = cfg.system_config()
        assert system.n_t == cfg.n_t
        assert system.m == 16
        assert system.irs_elevation_mu.mean == pytest.approx(np.pi / 2)
