"""Central-difference gradient verification for the tensor engine."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, find_nonfinite, no_grad


def grad_check(computation, input_tensor, epsilon=1e-6):
    """Compare the analytic input gradient against central differences.

    ``computation`` maps a Tensor to a scalar-loss Tensor. Returns the max
    over elements of |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
    """
    if not (1e-7 <= epsilon <= 1e-4):
        raise ValueError(f"epsilon must lie in [1e-7, 1e-4], got {epsilon}")
    if not isinstance(input_tensor, Tensor) or input_tensor.data.size == 0:
        raise ValueError("grad_check needs a non-empty input tensor")

    x = Tensor(input_tensor.data, requires_grad=True)
    loss = computation(x)
    if loss.data.size != 1:
        raise ValueError("computation must return a scalar loss")
    bad_op = find_nonfinite(loss)
    if bad_op is not None:
        raise FloatingPointError(f"non-finite value produced by op '{bad_op}'")
    loss.backward()
    if x.grad is None:
        analytic = np.zeros_like(x.data)
    else:
        analytic = x.grad.copy()
    if not np.isfinite(analytic).all():
        raise FloatingPointError("non-finite analytic gradient")

    numeric = np.zeros_like(analytic)
    flat = x.data.reshape(-1)
    num_flat = numeric.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            f_plus = computation(x).item()
            flat[i] = orig - epsilon
            f_minus = computation(x).item()
            flat[i] = orig
            num_flat[i] = (f_plus - f_minus) / (2.0 * epsilon)
    if not np.isfinite(numeric).all():
        raise FloatingPointError("non-finite central difference")

    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-12)
    return float(np.max(np.abs(analytic - numeric) / denom))
