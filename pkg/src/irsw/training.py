"""Two-stage training protocol and the stage-gain report.

The feature-recovery stage trains first; its parameters are then frozen (the
denoising stage sees only its precomputed outputs) so denoiser updates can
never touch them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .data import planes_to_complex
from .estimation import nmse_batch
from .optim import Adam, LrSchedule
from .tensor import Tensor


@dataclass
class EpochRow:
    epoch: int
    stage: str
    train_loss: float
    val_nmse: float


@dataclass
class GainReport:
    """Stage gains computed from NMSE ratios, plus both error-propagation
    reconstructions: the first-power identity (exact by construction) and
    the squared-amplitude model."""

    nmse_ls: float
    nmse_can: float
    nmse_cmn: float
    lambda_can: float
    lambda_cmn: float
    nmse_mba_first_power: float
    nmse_mba_squared_model: float


def gain_report(nmse_ls, nmse_can, nmse_cmn):
    if nmse_ls <= 0 or nmse_can <= 0:
        raise ValueError("reference NMSE values must be positive")
    lam_can = (nmse_ls - nmse_can) / nmse_ls
    lam_cmn = (nmse_can - nmse_cmn) / nmse_can
    first_power = (1.0 - lam_can) * (1.0 - lam_cmn) * nmse_ls
    squared = (1.0 - lam_can) ** 2 * (1.0 - lam_cmn) ** 2 * nmse_ls
    return GainReport(nmse_ls, nmse_can, nmse_cmn, lam_can, lam_cmn, first_power, squared)


def stage_loss(pred, target, n_samples):
    """Half mean squared Frobenius error over the batch."""
    diff = pred - target
    return T.scale((diff * diff).sum(), 1.0 / (2.0 * n_samples))


def _forward_in_chunks(fn, x, chunk=256):
    parts = []
    with T.no_grad():
        for lo in range(0, x.shape[0], chunk):
            parts.append(fn(Tensor(x[lo : lo + chunk])).data)
    return np.concatenate(parts, axis=0)


def predict_stage(model, stage, x, chunk=256):
    """Raw-array forward pass for one stage or the full pipeline, BN in eval mode."""
    was_training = model.cmn.bn.training
    model.set_training(False)
    try:
        if stage == "can":
            return _forward_in_chunks(model.forward_can, x, chunk)
        if stage == "cmn":
            return _forward_in_chunks(model.forward_cmn, x, chunk)
        if stage == "mba":
            return _forward_in_chunks(model.forward, x, chunk)
        raise ValueError(f"unknown stage {stage!r}")
    finally:
        model.set_training(was_training)


def eval_nmse(outputs, targets):
    return nmse_batch(planes_to_complex(targets), planes_to_complex(outputs))


def train_stage(model, stage, train_inputs, train_targets, val_inputs, val_targets,
                epochs, batch_size=64, schedule=None, seed=0, log=None):
    """Train one stage with Adam; returns the per-epoch trace.

    stage 'can' fits the feature-recovery network on augmented-LS inputs.
    stage 'cmn' requires a trained CAN; it precomputes frozen CAN outputs
    once and fits only denoiser parameters.
    """
    if stage == "can":
        params = model.can.params()
        stage_in, stage_tg = train_inputs, train_targets
        val_in = val_inputs
        forward = model.forward_can
        if schedule is None:
            schedule = LrSchedule(2e-4, 0.6, 150, "stepped")
    elif stage == "cmn":
        if not model.can_trained:
            raise RuntimeError("CAN must be trained (or loaded) before the CMN stage")
        params = model.cmn.params()
        stage_in = predict_stage(model, "can", train_inputs)
        stage_tg = train_targets
        val_in = predict_stage(model, "can", val_inputs)
        forward = model.forward_cmn
        if schedule is None:
            schedule = LrSchedule(1e-4)
    else:
        raise ValueError(f"unknown stage {stage!r}")

    opt = Adam(params, learning_rate=schedule.rate_at(0), beta1=0.9, beta2=0.999)
    rng = np.random.default_rng([seed, 0xBA7C4])
    n = stage_in.shape[0]
    trace = []
    model.set_training(True)
    for epoch in range(epochs):
        opt.learning_rate = schedule.rate_at(epoch)
        order = rng.permutation(n)
        total_loss = 0.0
        for lo in range(0, n, batch_size):
            idx = order[lo : lo + batch_size]
            x = Tensor(stage_in[idx])
            y = Tensor(stage_tg[idx])
            loss = stage_loss(forward(x), y, len(idx))
            value = loss.item()
            if not np.isfinite(value):
                raise FloatingPointError(
                    f"non-finite loss in stage {stage!r} at epoch {epoch}, batch offset {lo}"
                )
            opt.zero_grad()
            loss.backward()
            opt.step()
            total_loss += value * len(idx)
        val_out = predict_stage(model, stage, val_in)
        row = EpochRow(epoch, stage, total_loss / n, eval_nmse(val_out, val_targets))
        trace.append(row)
        if log:
            log(f"stage={stage} epoch={epoch} train_loss={row.train_loss:.6g} val_nmse={row.val_nmse:.6g}")

    if stage == "can":
        model.can_trained = True
    else:
        model.cmn_trained = True
    model.set_training(False)
    return trace


def train_two_stage(model, train_inputs, train_targets, val_inputs, val_targets,
                    epochs_can, epochs_cmn, batch_size=64, seed=0,
                    can_schedule=None, cmn_schedule=None, log=None):
    trace = train_stage(
        model, "can", train_inputs, train_targets, val_inputs, val_targets,
        epochs_can, batch_size, can_schedule, seed=seed, log=log,
    )
    trace += train_stage(
        model, "cmn", train_inputs, train_targets, val_inputs, val_targets,
        epochs_cmn, batch_size, cmn_schedule, seed=seed + 1, log=log,
    )
    return trace


def save_trace(trace, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "stage", "train_loss", "val_nmse"])
        for row in trace:
            writer.writerow([row.epoch, row.stage, format(row.train_loss, ".17g"), format(row.val_nmse, ".17g")])


def evaluate_methods(model, inputs, targets):
    """Held-out NMSE of the augmented-LS baseline, CAN alone and the full MBA."""
    h_true = planes_to_complex(targets)
    results = {"ls_aug": nmse_batch(h_true, planes_to_complex(inputs))}
    can_out = predict_stage(model, "can", inputs)
    results["can"] = nmse_batch(h_true, planes_to_complex(can_out))
    results["mba"] = nmse_batch(h_true, planes_to_complex(predict_stage(model, "cmn", can_out)))
    return results
