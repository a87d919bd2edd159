"""Command-line harness: dataset generation, pilot design, training,
evaluation, sweeps and theory verification.

Exit codes: 0 success, 1 config error, 2 verification failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import replace

import numpy as np

from .config import ConfigError, load_config
from .data import build_dataset, build_design, generate_samples, load_split, split_paths
from .estimation import nmse_batch
from .formats import ResultRow, export_results, load_checkpoint, save_checkpoint, save_tensor
from .network import MbaModel, flops_can, flops_ls, flops_mba
from .optim import LrSchedule
from .pilots import export_pattern, ls_mse_objective
from .theory import check_etf_optimality, check_lambda_identity, check_linear_scaling, check_trace_formula
from .training import evaluate_methods, gain_report, predict_stage, save_trace, train_two_stage
from .data import planes_to_complex

EVAL_STREAM_OFFSET = 10_000_000


def _log(msg):
    print(msg, flush=True)


def ensure_dataset(cfg, out_dir):
    missing = any(
        not os.path.exists(p) for split in ("train", "val", "test") for p in split_paths(out_dir, split)
    )
    if missing:
        summary = build_dataset(cfg, out_dir)
        _log(f"generated dataset in {out_dir}: " + ", ".join(f"{k}={v}" for k, v in summary.items()))
    return {split: load_split(out_dir, split) for split in ("train", "val", "test")}


def train_model(cfg, dataset, log=None):
    model = MbaModel(seed=cfg.seed, width=cfg.trunk_width, d=cfg.attn_dim)
    can_schedule = LrSchedule(cfg.can_lr, cfg.lr_decay_factor, cfg.lr_decay_interval, "stepped")
    cmn_schedule = LrSchedule(cfg.cmn_lr)
    trace = train_two_stage(
        model,
        dataset["train"]["inputs"], dataset["train"]["targets"],
        dataset["val"]["inputs"], dataset["val"]["targets"],
        epochs_can=cfg.epochs_can, epochs_cmn=cfg.epochs_cmn,
        batch_size=cfg.batch_size, seed=cfg.seed,
        can_schedule=can_schedule, cmn_schedule=cmn_schedule, log=log,
    )
    return model, trace


def checkpoint_path(out_dir, tag="mba"):
    return os.path.join(out_dir, f"{tag}.irsw")


def load_model(cfg, path):
    model = MbaModel(seed=cfg.seed, width=cfg.trunk_width, d=cfg.attn_dim)
    model.load_state(load_checkpoint(path))
    model.cmn_trained = True
    return model


def _method_rows(cfg, model, inputs, targets, snr, measure_time=False):
    h_true = planes_to_complex(targets)
    rows = []

    def timed(fn):
        if not measure_time:
            return fn(), 0.0
        start = time.perf_counter()
        out = fn()
        return out, (time.perf_counter() - start) * 1e3

    ls_nmse, ls_ms = timed(lambda: nmse_batch(h_true, planes_to_complex(inputs)))
    rows.append(ResultRow("ls_aug", cfg.b, snr, ls_nmse, ls_ms, float(flops_ls(cfg.n_t, cfg.b, cfg.n_subcarriers))))

    can_out, can_ms = timed(lambda: predict_stage(model, "can", inputs))
    rows.append(ResultRow(
        "can", cfg.b, snr, nmse_batch(h_true, planes_to_complex(can_out)), can_ms,
        float(flops_can(cfg.n_t, cfg.m, cfg.n_subcarriers, cfg.trunk_width, cfg.attn_dim)),
    ))

    mba_out, mba_ms = timed(lambda: predict_stage(model, "cmn", can_out))
    rows.append(ResultRow(
        "mba", cfg.b, snr, nmse_batch(h_true, planes_to_complex(mba_out)), can_ms + mba_ms,
        float(flops_mba(cfg.n_t, cfg.m, cfg.n_subcarriers, cfg.trunk_width, cfg.attn_dim)),
    ))
    return rows


def eval_pool(cfg, snr, n_samples=None):
    """Fresh held-out samples at one SNR, disjoint from training streams."""
    point = replace(cfg, snr_db=[float(snr)])
    return generate_samples(point, n_samples or cfg.test_samples, stream_offset=EVAL_STREAM_OFFSET)


# -- subcommands ----------------------------------------------------------------


def cmd_generate(cfg):
    summary = build_dataset(cfg, cfg.output_dir)
    _log("dataset written to " + cfg.output_dir + ": " + ", ".join(f"{k}={v}" for k, v in summary.items()))
    return 0


def cmd_design_psi(cfg):
    pattern, base, psi_full = build_design(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)
    export_pattern(pattern, os.path.join(cfg.output_dir, "pattern.txt"))
    stacked = np.stack([psi_full.values.real, psi_full.values.imag], axis=-1)
    save_tensor(os.path.join(cfg.output_dir, "psi.irst"), stacked)
    j_design = ls_mse_objective(base, cfg.n_t, cfg.noise_variance)
    j_normalized = cfg.n_t * cfg.noise_variance * cfg.b  # Gram normalized to identity
    _log(f"pattern kind={pattern.kind} b={pattern.b} written to pattern.txt")
    _log(f"psi kind={base.kind} shape={psi_full.values.shape} written to psi.irst")
    _log(f"ls objective (unimodular design): {j_design:.9g}")
    _log(f"ls objective (normalized-Gram convention): {j_normalized:.9g}")
    return 0


def cmd_train(cfg):
    dataset = ensure_dataset(cfg, cfg.output_dir)
    model, trace = train_model(cfg, dataset, log=_log)
    save_trace(trace, os.path.join(cfg.output_dir, "train_trace.csv"))
    save_checkpoint(checkpoint_path(cfg.output_dir), model.state())
    metrics = evaluate_methods(model, dataset["test"]["inputs"], dataset["test"]["targets"])
    report = gain_report(metrics["ls_aug"], metrics["can"], metrics["mba"])
    _log(f"test NMSE: ls_aug={metrics['ls_aug']:.6g} can={metrics['can']:.6g} mba={metrics['mba']:.6g}")
    _log(f"gains: lambda_can={report.lambda_can:.4f} lambda_cmn={report.lambda_cmn:.4f}")
    _log(f"checkpoint saved to {checkpoint_path(cfg.output_dir)}")
    return 0


def cmd_eval(cfg):
    path = checkpoint_path(cfg.output_dir)
    if not os.path.exists(path):
        raise FileNotFoundError(f"no checkpoint at {path}; run the train subcommand first")
    model = load_model(cfg, path)
    rows = []
    for snr in cfg.snr_db:
        inputs, targets, _ = eval_pool(cfg, snr)
        rows.extend(_method_rows(cfg, model, inputs, targets, snr, cfg.measure_time))
    out = os.path.join(cfg.output_dir, "eval.csv")
    export_results(rows, out)
    for row in rows:
        _log(f"method={row.method} b={row.b} snr={row.snr_db} nmse={row.nmse:.6g}")
    _log(f"results written to {out}")
    return 0


def _sweep_points(cfg, axis, values):
    if axis == "snr":
        vals = values or cfg.snr_db
        return [(f"snr{v:g}", replace(cfg, snr_db=[float(v)]), float(v)) for v in vals]
    if axis == "pilots":
        vals = values or [cfg.b]
        return [(f"b{int(v)}", replace(cfg, b=int(v)), float(cfg.snr_db[0])) for v in vals]
    if axis == "irs_size":
        vals = values or [cfg.irs_rows]
        return [
            (f"irs{int(v)}x{int(v)}", replace(cfg, irs_rows=int(v), irs_cols=int(v)), float(cfg.snr_db[0]))
            for v in vals
        ]
    if axis == "pattern":
        vals = [str(v) for v in values] if values else ["column", "row", "random", "proposed"]
        return [(f"pat_{v}", replace(cfg, pattern=v), float(cfg.snr_db[0])) for v in vals]
    raise ConfigError(f"unknown sweep axis {axis!r}")


def cmd_sweep(cfg, axis, values, train_missing):
    rows = []
    ckpt_dir = os.path.join(cfg.output_dir, "checkpoints")
    for tag, point, snr in _sweep_points(cfg, axis, values):
        point = replace(point, output_dir=os.path.join(cfg.output_dir, "sweep_data", tag))
        base_ckpt = checkpoint_path(cfg.output_dir)
        if axis == "snr" and os.path.exists(base_ckpt):
            model = load_model(point, base_ckpt)
        else:
            path = checkpoint_path(ckpt_dir, tag)
            if os.path.exists(path):
                model = load_model(point, path)
            elif train_missing:
                dataset = ensure_dataset(point, point.output_dir)
                model, _ = train_model(point, dataset)
                os.makedirs(ckpt_dir, exist_ok=True)
                save_checkpoint(path, model.state())
            else:
                raise FileNotFoundError(
                    f"no checkpoint for sweep point {tag!r} at {path}; rerun with --train"
                )
        inputs, targets, _ = eval_pool(point, snr)
        rows.extend(_method_rows(point, model, inputs, targets, snr, cfg.measure_time))
        _log(f"sweep point {tag}: done")
    out = os.path.join(cfg.output_dir, f"sweep_{axis}.csv")
    os.makedirs(cfg.output_dir, exist_ok=True)
    export_results(rows, out)
    _log(f"sweep results written to {out}")
    return 0


def cmd_verify(cfg):
    results = []
    results += check_trace_formula(np.random.default_rng([cfg.seed, 1]))
    results += check_etf_optimality()
    results += check_linear_scaling(np.random.default_rng([cfg.seed, 2]))

    ckpt = checkpoint_path(cfg.output_dir)
    if os.path.exists(ckpt):
        model = load_model(cfg, ckpt)
    else:
        _log("no checkpoint found; training a small model for the gain-identity check")
        micro = replace(
            cfg,
            train_samples=min(cfg.train_samples, 400),
            val_samples=min(cfg.val_samples, 100),
            epochs_can=min(cfg.epochs_can, 15),
            epochs_cmn=min(cfg.epochs_cmn, 10),
            output_dir=os.path.join(cfg.output_dir, "verify_micro"),
        )
        dataset = ensure_dataset(micro, micro.output_dir)
        model, _ = train_model(micro, dataset)
    inputs, targets, _ = eval_pool(cfg, cfg.snr_db[0])
    metrics = evaluate_methods(model, inputs, targets)
    results += check_lambda_identity(metrics["ls_aug"], metrics["can"], metrics["mba"])

    os.makedirs(cfg.output_dir, exist_ok=True)
    report_path = os.path.join(cfg.output_dir, "verify_report.txt")
    with open(report_path, "w", encoding="utf-8") as fh:
        for res in results:
            _log(res.line())
            fh.write(res.line() + "\n")
    _log(f"report written to {report_path}")
    return 0 if all(r.passed for r in results) else 2


def build_parser():
    parser = argparse.ArgumentParser(prog="irsw", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("generate", "design-psi", "train", "eval", "sweep", "verify"):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="path to a key = value config file")
        cmd.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                         help="override a config key (repeatable)")
        if name == "sweep":
            cmd.add_argument("--axis", required=True, choices=["snr", "pilots", "irs_size", "pattern"])
            cmd.add_argument("--values", default=None,
                             help="comma-separated axis values (defaults per axis)")
            cmd.add_argument("--train", action="store_true",
                             help="train models for sweep points missing a checkpoint")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.set)
        if args.command == "generate":
            return cmd_generate(cfg)
        if args.command == "design-psi":
            return cmd_design_psi(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "eval":
            return cmd_eval(cfg)
        if args.command == "sweep":
            values = None
            if args.values:
                values = [float(v) for v in args.values.split(",")] if args.axis != "pattern" \
                    else [v.strip() for v in args.values.split(",")]
            return cmd_sweep(cfg, args.axis, values, args.train)
        if args.command == "verify":
            return cmd_verify(cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
