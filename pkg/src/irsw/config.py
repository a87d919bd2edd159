"""Flat key = value experiment configuration."""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .channel import AngleSpec, SystemConfig


class ConfigError(Exception):
    pass


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"cannot parse boolean from {text!r}")


def _parse_float_list(text):
    return [float(part) for part in text.split(",") if part.strip()]


@dataclass
class ExperimentConfig:
    # system / channel
    n_t: int = 4
    irs_rows: int = 4
    irs_cols: int = 4
    n_subcarriers: int = 16
    sampling_rate: float = 100e6
    carrier_freq: float = 28.0
    l_bs_irs: int = 3
    l_mu_irs: int = 5
    noise_variance: float = 0.1
    pilot_power: float = 1.0
    r_tau: float = 2.1
    # Concentrated directional statistics keep masked-element recovery
    # learnable at desk scale; widen these to emulate richer scattering.
    bs_azimuth_mean: float = 0.0
    bs_azimuth_spread: float = 0.10
    irs_azimuth_bs_mean: float = 0.0
    irs_azimuth_bs_spread: float = 0.10
    irs_elevation_bs_mean: float = np.pi / 2
    irs_elevation_bs_spread: float = 0.08
    irs_azimuth_mu_mean: float = 0.0
    irs_azimuth_mu_spread: float = 0.10
    irs_elevation_mu_mean: float = np.pi / 2
    irs_elevation_mu_spread: float = 0.08
    ds_mu_log10: float | None = None
    ds_sigma_log10: float | None = None
    # pilot design
    pattern: str = "proposed"
    b: int = 8
    psi_kind: str = "dft"
    psi_quant_bits: int = 0
    # experiment
    snr_db: list = field(default_factory=lambda: [10.0])
    train_samples: int = 2000
    val_samples: int = 500
    test_samples: int = 500
    seed: int | None = None
    epochs_can: int = 150
    epochs_cmn: int = 60
    batch_size: int = 64
    can_lr: float = 2e-4
    cmn_lr: float = 1e-4
    lr_decay_factor: float = 0.6
    lr_decay_interval: int = 150
    trunk_width: int = 32
    attn_dim: int = 16
    output_dir: str = "runs"
    measure_time: bool = False
    dump_channels: bool = False

    @property
    def m(self):
        return self.irs_rows * self.irs_cols

    def validate(self):
        if self.seed is None:
            raise ConfigError("seed is mandatory; set 'seed = <int>' in the config")
        if not 1 <= self.b <= self.m:
            raise ConfigError(f"b={self.b} out of range for a {self.irs_rows}x{self.irs_cols} IRS")
        if self.psi_kind not in ("dft", "hadamard", "random_unimodular"):
            raise ConfigError(f"unknown psi_kind {self.psi_kind!r}")
        if self.pattern not in ("column", "row", "random", "proposed"):
            raise ConfigError(f"unknown pattern {self.pattern!r}")
        if not self.snr_db:
            raise ConfigError("snr_db must list at least one value")
        if min(self.train_samples, self.val_samples, self.test_samples) < 1:
            raise ConfigError("sample counts must be positive")
        if self.batch_size < 1 or self.epochs_can < 0 or self.epochs_cmn < 0:
            raise ConfigError("invalid training schedule")
        return self

    def system_config(self):
        return SystemConfig(
            n_t=self.n_t,
            irs_rows=self.irs_rows,
            irs_cols=self.irs_cols,
            n_subcarriers=self.n_subcarriers,
            sampling_rate=self.sampling_rate,
            carrier_freq=self.carrier_freq,
            l_bs_irs=self.l_bs_irs,
            l_mu_irs=self.l_mu_irs,
            noise_variance=self.noise_variance,
            pilot_power=self.pilot_power,
            r_tau=self.r_tau,
            bs_azimuth=AngleSpec(self.bs_azimuth_mean, self.bs_azimuth_spread),
            irs_azimuth_bs=AngleSpec(self.irs_azimuth_bs_mean, self.irs_azimuth_bs_spread),
            irs_elevation_bs=AngleSpec(self.irs_elevation_bs_mean, self.irs_elevation_bs_spread),
            irs_azimuth_mu=AngleSpec(self.irs_azimuth_mu_mean, self.irs_azimuth_mu_spread),
            irs_elevation_mu=AngleSpec(self.irs_elevation_mu_mean, self.irs_elevation_mu_spread),
            ds_mu_log10=self.ds_mu_log10,
            ds_sigma_log10=self.ds_sigma_log10,
        )


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key, text):
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    text = text.strip()
    ftype = _FIELD_TYPES[key]
    if key == "snr_db":
        return _parse_float_list(text)
    if ftype in ("bool",):
        return _parse_bool(text)
    if ftype in ("int", "int | None"):
        try:
            return int(text)
        except ValueError as exc:
            raise ConfigError(f"key {key!r} needs an integer, got {text!r}") from exc
    if ftype in ("float", "float | None"):
        try:
            return float(text)
        except ValueError as exc:
            raise ConfigError(f"key {key!r} needs a number, got {text!r}") from exc
    return text


def parse_config_text(text, base=None):
    cfg = base if base is not None else ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        setattr(cfg, key, _coerce(key, value))
    return cfg


def load_config(path, overrides=()):
    """Parse a config file, apply 'key=value' overrides, and validate."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, value = (part.strip() for part in item.split("=", 1))
        setattr(cfg, key, _coerce(key, value))
    return cfg.validate()
