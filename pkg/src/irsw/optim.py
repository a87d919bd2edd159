"""Adam optimizer and stepped learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    """Per-parameter first/second moment buffers plus shared hyperparameters."""

    first_moment: list = field(default_factory=list)
    second_moment: list = field(default_factory=list)
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    learning_rate: float = 1e-3

    def __post_init__(self):
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.step_count < 0:
            raise ValueError("step_count must be non-negative")


def adam_state_for(params, learning_rate=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8):
    return AdamState(
        first_moment=[np.zeros_like(p.data) for p in params],
        second_moment=[np.zeros_like(p.data) for p in params],
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
        learning_rate=learning_rate,
    )


def adam_step(params, grads, state):
    """One bias-corrected Adam update, in place on the parameter tensors.

    ``grads`` must shape-match ``params`` entry by entry; a non-finite
    gradient aborts with a message identifying the offending parameter.
    """
    if len(params) != len(grads):
        raise ValueError("params and grads must have equal length")
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for i, (p, g) in enumerate(zip(params, grads)):
        if g is None:
            raise ValueError(f"missing gradient for parameter {p.name or i}")
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.data.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.name or i} {p.data.shape}")
        if not np.isfinite(g).all():
            raise FloatingPointError(f"non-finite gradient for parameter {p.name or i} at step {t}")
        m = state.first_moment[i]
        v = state.second_moment[i]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p.data -= state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
    return params, state


class Adam:
    """Convenience wrapper that pulls gradients straight off the parameters."""

    def __init__(self, params, learning_rate=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.params = list(params)
        self.state = adam_state_for(self.params, learning_rate, beta1, beta2, epsilon)

    @property
    def learning_rate(self):
        return self.state.learning_rate

    @learning_rate.setter
    def learning_rate(self, value):
        if value <= 0:
            raise ValueError("learning_rate must be positive")
        self.state.learning_rate = value

    def step(self):
        adam_step(self.params, [p.grad for p in self.params], self.state)

    def zero_grad(self):
        for p in self.params:
            p.grad = None


@dataclass
class LrSchedule:
    """Learning rate, optionally decayed by a fixed factor every N epochs."""

    initial_rate: float
    decay_factor: float = 1.0
    decay_interval_epochs: int = 1
    mode: str = "constant"

    def __post_init__(self):
        if self.initial_rate <= 0.0:
            raise ValueError("initial_rate must be positive")
        if not (0.0 < self.decay_factor <= 1.0):
            raise ValueError("decay_factor must lie in (0, 1]")
        if self.decay_interval_epochs < 1:
            raise ValueError("decay_interval_epochs must be positive")
        if self.mode not in ("stepped", "constant"):
            raise ValueError(f"unknown schedule mode {self.mode!r}")

    def rate_at(self, epoch):
        if self.mode == "constant":
            return self.initial_rate
        return self.initial_rate * self.decay_factor ** (epoch // self.decay_interval_epochs)
