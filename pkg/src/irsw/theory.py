"""Closed-form identity checks: trace formula, ETF optimality, linear-in-M
scaling and the stage-gain error-propagation identity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pilots import dft_matrix, hadamard_matrix, ls_mse_objective, random_unimodular
from .training import gain_report


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: measured={self.measured:.6g} threshold={self.threshold:.6g} ({self.detail})"


def _empirical_ls_mse(psi_values, n_t, sigma2, draws, rng):
    """Mean squared Frobenius LS error over Monte-Carlo noise draws.

    The channel term cancels in the LS error, so only noise is simulated:
    error = N Psi^H (Psi Psi^H)^-1.
    """
    m, b = psi_values.shape
    gram = psi_values @ psi_values.conj().T
    projector = psi_values.conj().T @ np.linalg.inv(gram)  # (B, M)
    noise = np.sqrt(sigma2 / 2.0) * (
        rng.standard_normal((draws * n_t, b)) + 1j * rng.standard_normal((draws * n_t, b))
    )
    err = noise @ projector
    per_draw = np.sum(np.abs(err) ** 2, axis=1).reshape(draws, n_t).sum(axis=1)
    return float(per_draw.mean())


def check_trace_formula(rng=None, n_t=4, draws=10_000, tolerance=0.03):
    """Monte-Carlo LS MSE against N_t sigma^2 tr{(Psi Psi^H)^-1}."""
    rng = rng or np.random.default_rng(0)
    results = []
    for m in (8, 16):
        for sigma2 in (0.1, 1.0):
            psi = dft_matrix(m)
            analytic = ls_mse_objective(psi, n_t, sigma2)
            empirical = _empirical_ls_mse(psi.values, n_t, sigma2, draws, rng)
            ratio_err = abs(empirical / analytic - 1.0)
            results.append(CheckResult(
                name=f"trace_formula[M={m},sigma2={sigma2}]",
                passed=ratio_err < tolerance,
                measured=ratio_err,
                threshold=tolerance,
                detail=f"empirical={empirical:.6g} analytic={analytic:.6g} draws={draws}",
            ))
    return results


def check_etf_optimality(seeds=1000, tolerance=1e-12):
    """DFT never loses to random unimodular designs; Hadamard ties the DFT."""
    results = []
    for m in (4, 8, 16):
        ref = ls_mse_objective(dft_matrix(m), 1, 1.0)
        beaten = 0
        worst_margin = np.inf
        for seed in range(seeds):
            psi = random_unimodular(m, m, np.random.default_rng(seed))
            try:
                obj = ls_mse_objective(psi, 1, 1.0)
            except np.linalg.LinAlgError:
                continue
            worst_margin = min(worst_margin, obj - ref)
            if obj < ref - 1e-9:
                beaten += 1
        results.append(CheckResult(
            name=f"etf_optimality[M={m}]",
            passed=beaten == 0,
            measured=float(beaten),
            threshold=0.0,
            detail=f"closest random margin={worst_margin:.6g} over {seeds} seeds",
        ))
    for order in (4, 8, 16):
        gap = abs(
            ls_mse_objective(hadamard_matrix(order), 1, 1.0)
            - ls_mse_objective(dft_matrix(order), 1, 1.0)
        )
        results.append(CheckResult(
            name=f"hadamard_equals_dft[M={order}]",
            passed=gap < tolerance,
            measured=gap,
            threshold=tolerance,
            detail="both Grams are M*I",
        ))
    return results


def check_linear_scaling(rng=None, n_t=4, sigma2=0.5, draws=10_000, tolerance=0.05):
    """Under the normalized-Gram convention (Psi Psi^H = I), LS MSE grows
    linearly in M with slope N_t sigma^2."""
    rng = rng or np.random.default_rng(1)
    ms = np.array([4, 8, 16, 32], dtype=float)
    mses = []
    for m in ms.astype(int):
        psi_norm = dft_matrix(m).values / np.sqrt(m)  # rows now orthonormal
        mses.append(_empirical_ls_mse(psi_norm, n_t, sigma2, draws, rng))
    slope = float(np.polyfit(ms, mses, 1)[0])
    expected = n_t * sigma2
    rel_err = abs(slope / expected - 1.0)
    return [CheckResult(
        name="linear_in_m_scaling",
        passed=rel_err < tolerance,
        measured=rel_err,
        threshold=tolerance,
        detail=f"slope={slope:.6g} expected={expected:.6g} over M={ms.astype(int).tolist()}",
    )]


def check_lambda_identity(nmse_ls, nmse_can, nmse_cmn, tolerance=1e-12):
    """The first-power propagation identity is exact arithmetic on the gains."""
    report = gain_report(nmse_ls, nmse_can, nmse_cmn)
    gap = abs(report.nmse_mba_first_power - nmse_cmn)
    results = [CheckResult(
        name="lambda_first_power_identity",
        passed=gap < tolerance,
        measured=gap,
        threshold=tolerance,
        detail=(
            f"lambda_can={report.lambda_can:.6g} lambda_cmn={report.lambda_cmn:.6g} "
            f"squared-model={report.nmse_mba_squared_model:.6g}"
        ),
    )]
    results.append(CheckResult(
        name="stage_gains_positive",
        passed=report.lambda_can > 0.0 and report.lambda_cmn > 0.0,
        measured=min(report.lambda_can, report.lambda_cmn),
        threshold=0.0,
        detail="both stages reduce NMSE on held-out data",
    ))
    return results
