"""Uplink training simulation, LS estimation, zero augmentation and NMSE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pilots import CONDITION_LIMIT


@dataclass
class RxBlock:
    """Pilot-normalized received signals over B training slots."""

    y: np.ndarray  # (N_t, B) complex
    k: int = 0
    snr_db: float | None = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.complex128)
        if self.y.ndim != 2:
            raise ValueError("received block must be 2-dimensional")


@dataclass
class EstimateRecord:
    h_true: np.ndarray       # (N_t, M)
    h_ls_reduced: np.ndarray  # (N_t, B)
    h_aug: np.ndarray        # (N_t, M)
    pattern: object


def synthesize_rx(h_cs, psi, sigma_n2, pilot_power, rng, k=0, snr_db=None):
    """Simulate Y = H_cs Psi + N with pilot-normalized noise variance sigma^2/p."""
    h_cs = np.asarray(h_cs, dtype=np.complex128)
    values = psi.values if hasattr(psi, "values") else np.asarray(psi, dtype=np.complex128)
    if h_cs.ndim != 2 or values.ndim != 2 or h_cs.shape[1] != values.shape[0]:
        raise ValueError(f"dimension mismatch: H_cs is {h_cs.shape}, Psi is {values.shape}")
    if sigma_n2 < 0:
        raise ValueError("noise variance must be non-negative")
    if pilot_power <= 0:
        raise ValueError("pilot power must be positive")
    n_t, b = h_cs.shape[0], values.shape[1]
    noise_var = sigma_n2 / pilot_power
    noise = np.sqrt(noise_var / 2.0) * (
        rng.standard_normal((n_t, b)) + 1j * rng.standard_normal((n_t, b))
    )
    return RxBlock(y=h_cs @ values + noise, k=k, snr_db=snr_db)


def ls_estimate(rx, psi):
    """LS estimate Y Psi^H (Psi Psi^H)^-1 for a full or reduced design."""
    y = rx.y if isinstance(rx, RxBlock) else np.asarray(rx, dtype=np.complex128)
    values = psi.values if hasattr(psi, "values") else np.asarray(psi, dtype=np.complex128)
    m, b = values.shape
    if y.shape[1] != b:
        raise ValueError(f"received block has {y.shape[1]} slots but the design has {b}")
    if b < m:
        raise ValueError(
            f"LS needs at least as many training slots as design rows (B={b} < {m}); "
            "deactivate elements and use the reduced B x B design instead"
        )
    gram = values @ values.conj().T
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise np.linalg.LinAlgError(f"design Gram matrix is singular (cond={cond:.3g})")
    return y @ values.conj().T @ np.linalg.inv(gram)


def augment_zeros(h_reduced, pattern):
    """Insert zero columns at deactivated element indices (N_t x B -> N_t x M)."""
    h_reduced = np.asarray(h_reduced, dtype=np.complex128)
    active = pattern.active_indices()
    if h_reduced.shape[1] != active.size:
        raise ValueError(
            f"estimate has {h_reduced.shape[1]} columns but the pattern activates {active.size}"
        )
    out = np.zeros((h_reduced.shape[0], pattern.m), dtype=np.complex128)
    out[:, active] = h_reduced
    return out


def compress_columns(h_full, pattern):
    """Gather the active-element columns (inverse of augment_zeros)."""
    return np.asarray(h_full)[:, pattern.active_indices()]


def nmse(h_true, h_est):
    """Squared Frobenius error normalized by the true channel energy."""
    h_true = np.asarray(h_true)
    h_est = np.asarray(h_est)
    if h_true.shape != h_est.shape:
        raise ValueError(f"shape mismatch: {h_true.shape} vs {h_est.shape}")
    denom = np.linalg.norm(h_true) ** 2
    if denom == 0:
        raise ValueError("true channel has zero norm")
    return float(np.linalg.norm(h_true - h_est) ** 2 / denom)


def nmse_batch(h_true, h_est):
    """Mean of per-sample NMSE ratios over the leading axis."""
    h_true = np.asarray(h_true)
    h_est = np.asarray(h_est)
    if h_true.shape != h_est.shape:
        raise ValueError(f"shape mismatch: {h_true.shape} vs {h_est.shape}")
    flat_t = h_true.reshape(h_true.shape[0], -1)
    flat_e = h_est.reshape(h_est.shape[0], -1)
    denom = np.sum(np.abs(flat_t) ** 2, axis=1)
    if np.any(denom == 0):
        raise ValueError("a sample has zero true-channel norm")
    num = np.sum(np.abs(flat_t - flat_e) ** 2, axis=1)
    return float(np.mean(num / denom))
