"""Dataset construction: channel draws -> reduced LS -> zero-augmented pairs.

Every sample is one (realization, subcarrier) pair stored as two real
(2, N_t, M) tensors: the zero-augmented LS estimate and the true cascaded
channel. Randomness is splittable: realization ``i`` uses the generator
seeded with [master_seed, i]; the train/val/test shuffle uses
[master_seed, 2**32].
"""

from __future__ import annotations

import os

import numpy as np

from .channel import draw_realization
from .estimation import augment_zeros, ls_estimate, synthesize_rx
from .formats import save_tensor, save_tensors
from .pilots import dft_matrix, hadamard_matrix, make_pattern, quantize_phases, random_unimodular, reduce_psi

SHUFFLE_STREAM = 2 ** 32

SPLITS = ("train", "val", "test")


def pattern_rng(cfg):
    return np.random.default_rng([cfg.seed, SHUFFLE_STREAM + 1])


def build_design(cfg):
    """Activation pattern plus base (B x B) and lifted (M x B) phase matrices."""
    pattern = make_pattern(cfg.pattern, cfg.irs_rows, cfg.irs_cols, cfg.b, pattern_rng(cfg))
    if cfg.psi_kind == "dft":
        base = dft_matrix(cfg.b)
    elif cfg.psi_kind == "hadamard":
        base = hadamard_matrix(cfg.b)
    else:
        base = random_unimodular(cfg.b, cfg.b, pattern_rng(cfg))
    if cfg.psi_quant_bits > 0:
        base = quantize_phases(base, cfg.psi_quant_bits)
    return pattern, base, reduce_psi(base, pattern)


def complex_to_planes(h):
    """(..., N_t, M) complex -> (..., 2, N_t, M) real with [real, imag] planes."""
    return np.stack([h.real, h.imag], axis=-3)


def planes_to_complex(x):
    """(..., 2, N_t, M) real -> (..., N_t, M) complex."""
    return x[..., 0, :, :] + 1j * x[..., 1, :, :]


def generate_samples(cfg, n_samples, stream_offset=0):
    """Draw samples and return (h_aug, h_cs, snr) arrays.

    SNR values cycle deterministically through cfg.snr_db so one pool mixes
    every requested level.
    """
    system = cfg.system_config()
    pattern, base, psi_full = build_design(cfg)
    k_sub = cfg.n_subcarriers
    n_real = -(-n_samples // k_sub)  # ceil division
    snr_list = list(cfg.snr_db)

    inputs = np.empty((n_real * k_sub, 2, cfg.n_t, cfg.m))
    targets = np.empty_like(inputs)
    snrs = np.empty(n_real * k_sub)

    idx = 0
    for i in range(n_real):
        rng = np.random.default_rng([cfg.seed, stream_offset + i])
        real = draw_realization(system, rng)
        for k in range(k_sub):
            snr = snr_list[idx % len(snr_list)]
            sigma_n2 = cfg.pilot_power * 10.0 ** (-snr / 10.0)
            rx = synthesize_rx(real.h_cs[k], psi_full, sigma_n2, cfg.pilot_power, rng, k=k, snr_db=snr)
            h_reduced = ls_estimate(rx, base)
            h_aug = augment_zeros(h_reduced, pattern)
            inputs[idx] = complex_to_planes(h_aug)
            targets[idx] = complex_to_planes(real.h_cs[k])
            snrs[idx] = snr
            idx += 1
    return inputs[:n_samples], targets[:n_samples], snrs[:n_samples]


def split_paths(out_dir, split):
    return (
        os.path.join(out_dir, f"dataset_{split}_inputs.irst"),
        os.path.join(out_dir, f"dataset_{split}_targets.irst"),
        os.path.join(out_dir, f"dataset_{split}_snr.irst"),
    )


def build_dataset(cfg, out_dir=None):
    """Generate all splits, shuffle with the seeded rule, and write IRST files."""
    out_dir = out_dir or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    total = cfg.train_samples + cfg.val_samples + cfg.test_samples
    inputs, targets, snrs = generate_samples(cfg, total)

    order = np.random.default_rng([cfg.seed, SHUFFLE_STREAM]).permutation(total)
    inputs, targets, snrs = inputs[order], targets[order], snrs[order]

    bounds = {
        "train": (0, cfg.train_samples),
        "val": (cfg.train_samples, cfg.train_samples + cfg.val_samples),
        "test": (cfg.train_samples + cfg.val_samples, total),
    }
    summary = {}
    for split, (lo, hi) in bounds.items():
        in_path, tg_path, snr_path = split_paths(out_dir, split)
        save_tensor(in_path, inputs[lo:hi])
        save_tensor(tg_path, targets[lo:hi])
        save_tensor(snr_path, snrs[lo:hi])
        summary[split] = hi - lo

    if cfg.dump_channels:
        # One record per (realization, subcarrier), real/imag interleaved last.
        records = np.stack([targets[..., 0, :, :], targets[..., 1, :, :]], axis=-1)
        save_tensors(os.path.join(out_dir, "hcs_dump.irst"), list(records))
    return summary


def load_split(out_dir, split):
    from .formats import load_tensor

    in_path, tg_path, snr_path = split_paths(out_dir, split)
    return {
        "inputs": load_tensor(in_path),
        "targets": load_tensor(tg_path),
        "snr": load_tensor(snr_path),
    }
