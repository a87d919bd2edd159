"""CDL-style multipath synthesis and per-subcarrier cascaded channels.

The BS uses a half-wavelength ULA, the IRS a half-wavelength UPA. Path
delays follow the UMi log-normal delay-spread model with exponential
scaling; per-path powers decay exponentially in delay and are normalized to
unit total power. Angles are drawn from configurable wrapped-Gaussian
distributions per link.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AngleSpec:
    """Mean/spread (radians) of a wrapped-Gaussian angle distribution."""

    mean: float = 0.0
    spread: float = 0.35


@dataclass
class SystemConfig:
    n_t: int = 16
    irs_rows: int = 12
    irs_cols: int = 12
    n_subcarriers: int = 64
    sampling_rate: float = 100e6
    carrier_freq: float = 28.0  # GHz
    l_bs_irs: int = 4
    l_mu_irs: int = 10
    noise_variance: float = 0.1
    pilot_power: float = 1.0
    r_tau: float = 2.1
    bs_azimuth: AngleSpec = field(default_factory=AngleSpec)
    irs_azimuth_bs: AngleSpec = field(default_factory=AngleSpec)
    irs_elevation_bs: AngleSpec = field(default_factory=lambda: AngleSpec(np.pi / 2, 0.25))
    irs_azimuth_mu: AngleSpec = field(default_factory=AngleSpec)
    irs_elevation_mu: AngleSpec = field(default_factory=lambda: AngleSpec(np.pi / 2, 0.25))
    # Optional overrides for the delay-spread log-normal (alternate scenarios).
    ds_mu_log10: float | None = None
    ds_sigma_log10: float | None = None

    def __post_init__(self):
        for name in ("n_t", "irs_rows", "irs_cols", "n_subcarriers", "l_bs_irs", "l_mu_irs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.noise_variance <= 0:
            raise ValueError("noise_variance must be positive")
        if self.carrier_freq <= 0:
            raise ValueError("carrier_freq must be positive")
        if self.pilot_power <= 0:
            raise ValueError("pilot_power must be positive")

    @property
    def m(self):
        return self.irs_rows * self.irs_cols


@dataclass
class PathSet:
    """Delays, complex gains and angles for one multipath link."""

    delays: np.ndarray          # seconds, ascending, min == 0
    gains: np.ndarray           # complex, per-path variances sum to 1 in expectation
    irs_azimuth: np.ndarray
    irs_elevation: np.ndarray
    bs_azimuth: np.ndarray | None
    delay_spread: float         # the log-normal draw X_DS
    r_tau: float

    def __post_init__(self):
        if np.any(self.delays < 0):
            raise ValueError("delays must be non-negative")
        if not np.all(np.isfinite(self.gains)):
            raise ValueError("gains must be finite")

    def __len__(self):
        return self.delays.size


@dataclass
class ChannelRealization:
    """Per-subcarrier BS-IRS, IRS-user and cascaded channels."""

    g: np.ndarray      # (K, N_t, M)
    h_r: np.ndarray    # (K, M)
    h_cs: np.ndarray   # (K, N_t, M)


def ula_response(phi, n):
    """Unit-norm ULA steering vector, element m carrying phase pi*m*sin(phi)."""
    if n < 1:
        raise ValueError("element count must be >= 1")
    m = np.arange(n)
    return np.exp(1j * np.pi * m * np.sin(phi)) / np.sqrt(n)


def upa_response(phi, theta, nx, ny):
    """Unit-norm UPA steering vector, row-major over the (n_x, n_y) grid.

    Element (n_x, n_y) carries phase pi*(n_x sin(phi) sin(theta) + n_y cos(theta)),
    indices starting at 0.
    """
    if nx < 1 or ny < 1:
        raise ValueError("grid dims must be >= 1")
    ix = np.repeat(np.arange(nx), ny)
    iy = np.tile(np.arange(ny), nx)
    phase = np.pi * (ix * np.sin(phi) * np.sin(theta) + iy * np.cos(theta))
    return np.exp(1j * phase) / np.sqrt(nx * ny)


def delay_spread_log10_params(carrier_freq_ghz):
    """UMi log-normal delay-spread parameters (mu, sigma) in log10 seconds."""
    mu = -0.24 * np.log10(1.0 + carrier_freq_ghz) - 6.83
    sigma = 0.16 * np.log10(1.0 + carrier_freq_ghz) + 0.28
    return mu, sigma


def _wrapped_azimuth(rng, spec, size):
    raw = rng.normal(spec.mean, spec.spread, size)
    return np.mod(raw + np.pi, 2.0 * np.pi) - np.pi


def _folded_elevation(rng, spec, size):
    raw = np.mod(rng.normal(spec.mean, spec.spread, size), 2.0 * np.pi)
    return np.where(raw > np.pi, 2.0 * np.pi - raw, raw)


def sample_cdl_params(config, link, rng):
    """Draw a PathSet for the given link ('bs_irs' or 'mu_irs')."""
    if link == "bs_irs":
        n_paths = config.l_bs_irs
    elif link == "mu_irs":
        n_paths = config.l_mu_irs
    else:
        raise ValueError(f"unknown link {link!r}")

    mu, sigma = delay_spread_log10_params(config.carrier_freq)
    if config.ds_mu_log10 is not None:
        mu = config.ds_mu_log10
    if config.ds_sigma_log10 is not None:
        sigma = config.ds_sigma_log10
    x_ds = 10.0 ** rng.normal(mu, sigma)

    u = rng.uniform(0.0, 1.0, n_paths)
    raw = -config.r_tau * x_ds * np.log(u)
    delays = np.sort(raw - raw.min())

    # Exponential power-delay profile over the anchored delays, unit total power.
    powers = np.exp(-delays * (config.r_tau - 1.0) / (config.r_tau * x_ds))
    powers = powers / powers.sum()
    gains = np.sqrt(powers / 2.0) * (rng.standard_normal(n_paths) + 1j * rng.standard_normal(n_paths))

    if link == "bs_irs":
        bs_az = _wrapped_azimuth(rng, config.bs_azimuth, n_paths)
        irs_az = _wrapped_azimuth(rng, config.irs_azimuth_bs, n_paths)
        irs_el = _folded_elevation(rng, config.irs_elevation_bs, n_paths)
    else:
        bs_az = None
        irs_az = _wrapped_azimuth(rng, config.irs_azimuth_mu, n_paths)
        irs_el = _folded_elevation(rng, config.irs_elevation_mu, n_paths)

    return PathSet(
        delays=delays,
        gains=gains,
        irs_azimuth=irs_az,
        irs_elevation=irs_el,
        bs_azimuth=bs_az,
        delay_spread=x_ds,
        r_tau=config.r_tau,
    )


def _subcarrier_phases(paths, config, k):
    return np.exp(-2j * np.pi * paths.delays * config.sampling_rate * k / config.n_subcarriers)


def freq_response_g(paths, config, k):
    """BS-IRS frequency response G_k (N_t x M) at subcarrier k."""
    if len(paths) == 0:
        raise ValueError("empty path set")
    if not 0 <= k < config.n_subcarriers:
        raise ValueError(f"subcarrier index {k} out of range")
    if paths.bs_azimuth is None:
        raise ValueError("BS-IRS response needs BS azimuth angles")
    n_t, m = config.n_t, config.m
    scale = np.sqrt(n_t * m / len(paths))
    phases = _subcarrier_phases(paths, config, k)
    g = np.zeros((n_t, m), dtype=np.complex128)
    for i in range(len(paths)):
        a_bs = ula_response(paths.bs_azimuth[i], n_t)
        a_irs = upa_response(paths.irs_azimuth[i], paths.irs_elevation[i], config.irs_rows, config.irs_cols)
        g += paths.gains[i] * phases[i] * np.outer(a_bs, a_irs.conj())
    return scale * g


def freq_response_hr(paths, config, k):
    """IRS-user frequency response h_r,k (M x 1 vector) at subcarrier k."""
    if len(paths) == 0:
        raise ValueError("empty path set")
    if not 0 <= k < config.n_subcarriers:
        raise ValueError(f"subcarrier index {k} out of range")
    m = config.m
    scale = np.sqrt(m / len(paths))
    phases = _subcarrier_phases(paths, config, k)
    h = np.zeros(m, dtype=np.complex128)
    for j in range(len(paths)):
        a_irs = upa_response(paths.irs_azimuth[j], paths.irs_elevation[j], config.irs_rows, config.irs_cols)
        h += paths.gains[j] * phases[j] * a_irs
    return scale * h


def cascaded_channel(g, hr):
    """Cascade G with diag(h_r): column m of the result is G[:, m] * h_r[m]."""
    g = np.asarray(g)
    hr = np.asarray(hr).reshape(-1)
    if g.ndim != 2 or g.shape[1] != hr.size:
        raise ValueError(f"dimension mismatch: G is {g.shape}, h_r has {hr.size} entries")
    return g * hr[None, :]


def draw_realization(config, rng):
    """One multipath environment expanded to all K subcarriers."""
    bs_paths = sample_cdl_params(config, "bs_irs", rng)
    mu_paths = sample_cdl_params(config, "mu_irs", rng)
    k_all = np.arange(config.n_subcarriers)

    # Per-path rank-one terms, then per-subcarrier phase mixing.
    n_t, m = config.n_t, config.m
    outer = np.zeros((len(bs_paths), n_t, m), dtype=np.complex128)
    for i in range(len(bs_paths)):
        a_bs = ula_response(bs_paths.bs_azimuth[i], n_t)
        a_irs = upa_response(bs_paths.irs_azimuth[i], bs_paths.irs_elevation[i], config.irs_rows, config.irs_cols)
        outer[i] = bs_paths.gains[i] * np.outer(a_bs, a_irs.conj())
    g_phase = np.exp(-2j * np.pi * np.outer(k_all, bs_paths.delays) * config.sampling_rate / config.n_subcarriers)
    g = np.sqrt(n_t * m / len(bs_paths)) * np.tensordot(g_phase, outer, axes=(1, 0))

    steer = np.zeros((len(mu_paths), m), dtype=np.complex128)
    for j in range(len(mu_paths)):
        steer[j] = mu_paths.gains[j] * upa_response(
            mu_paths.irs_azimuth[j], mu_paths.irs_elevation[j], config.irs_rows, config.irs_cols
        )
    h_phase = np.exp(-2j * np.pi * np.outer(k_all, mu_paths.delays) * config.sampling_rate / config.n_subcarriers)
    h_r = np.sqrt(m / len(mu_paths)) * (h_phase @ steer)

    h_cs = g * h_r[:, None, :]
    return ChannelRealization(g=g, h_r=h_r, h_cs=h_cs)
