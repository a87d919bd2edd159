"""Axial-attention feature recovery (CAN), convolutional denoising (CMN)
and their two-stage composition.

Inputs are real tensors of shape (batch, 2, N_t, M): channels 0/1 hold the
real and imaginary parts of the zero-augmented LS estimate. Attention acts
along the IRS-element axis M, independently per BS antenna; everything else
is shape-preserving convolution, so the networks run unchanged for any
(N_t, M).
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import Tensor, RunningStats


def _uniform_fan_in(rng, shape, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, shape)


class Conv2d:
    """Same-padded stride-1 convolution layer with bias."""

    def __init__(self, in_ch, out_ch, ksize, rng, name):
        fan_in = in_ch * ksize * ksize
        self.w = T.parameter(_uniform_fan_in(rng, (out_ch, in_ch, ksize, ksize), fan_in), f"{name}.w")
        self.b = T.parameter(_uniform_fan_in(rng, (out_ch,), fan_in), f"{name}.b")

    def __call__(self, x):
        return T.conv2d(x, self.w, self.b)

    def params(self):
        return [self.w, self.b]

    def zero_(self):
        self.w.data[...] = 0.0
        self.b.data[...] = 0.0

    def identity_(self):
        """Make a 1x1 layer pass its input through unchanged."""
        if self.w.data.shape[2] != 1 or self.w.data.shape[0] != self.w.data.shape[1]:
            raise ValueError("identity init needs a square-channel 1x1 layer")
        self.w.data[...] = 0.0
        for c in range(self.w.data.shape[0]):
            self.w.data[c, c, 0, 0] = 1.0
        self.b.data[...] = 0.0


class BatchNorm2d:
    def __init__(self, channels, name, momentum=0.1, eps=1e-5):
        self.gamma = T.parameter(np.ones(channels), f"{name}.gamma")
        self.beta = T.parameter(np.zeros(channels), f"{name}.beta")
        self.stats = RunningStats(channels)
        self.name = name
        self.momentum = momentum
        self.eps = eps
        self.training = True

    def __call__(self, x):
        return T.batchnorm2d(x, self.gamma, self.beta, self.stats, self.training, self.momentum, self.eps)

    def params(self):
        return [self.gamma, self.beta]

    def buffers(self):
        return [(f"{self.name}.running_mean", self.stats.mean), (f"{self.name}.running_var", self.stats.var)]


class PReLU:
    def __init__(self, name, init_slope=0.25):
        self.slope = T.parameter(np.array(init_slope), f"{name}.slope")

    def __call__(self, x):
        return T.prelu(x, self.slope)

    def params(self):
        return [self.slope]


class MbProjection:
    """Multi-convolutional projection: two 1x1 convolutions with ReLU between."""

    def __init__(self, in_ch, out_ch, rng, name):
        self.conv1 = Conv2d(in_ch, out_ch, 1, rng, f"{name}.conv1")
        self.conv2 = Conv2d(out_ch, out_ch, 1, rng, f"{name}.conv2")

    def __call__(self, x):
        return self.conv2(T.relu(self.conv1(x)))

    def params(self):
        return self.conv1.params() + self.conv2.params()


class AxialAttention:
    """Scaled dot-product attention along the M axis, per BS antenna.

    Q/K/V come from multi-convolutional 1x1 projections, so no operation
    mixes different antenna rows: permuting the N_t axis of the input
    permutes the output identically.
    """

    def __init__(self, in_ch, d, rng, name):
        if d < 1:
            raise ValueError("attention feature width d must be >= 1")
        self.d = d
        self.proj_q = MbProjection(in_ch, d, rng, f"{name}.q")
        self.proj_k = MbProjection(in_ch, d, rng, f"{name}.k")
        self.proj_v = MbProjection(in_ch, d, rng, f"{name}.v")

    def __call__(self, x):
        q = T.transpose(self.proj_q(x), (0, 2, 3, 1))  # (N, N_t, M, d)
        k = T.transpose(self.proj_k(x), (0, 2, 3, 1))
        v = T.transpose(self.proj_v(x), (0, 2, 3, 1))
        logits = T.scale(T.matmul(q, T.transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(self.d))
        if not np.isfinite(logits.data).all():
            raise FloatingPointError("non-finite attention logits")
        scores = T.softmax(logits, axis=-1)            # (N, N_t, M, M)
        out = T.matmul(scores, v)                      # (N, N_t, M, d)
        return T.transpose(out, (0, 3, 1, 2))

    def params(self):
        return self.proj_q.params() + self.proj_k.params() + self.proj_v.params()


class AttentionBlock:
    """x + Conv(Attention(x)), the residual attention unit of the CAN."""

    def __init__(self, width, d, rng, name):
        self.attention = AxialAttention(width, d, rng, f"{name}.attn")
        self.conv = Conv2d(d, width, 3, rng, f"{name}.conv")

    def __call__(self, x):
        return x + self.conv(self.attention(x))

    def params(self):
        return self.attention.params() + self.conv.params()


class ConvBlock:
    """BN(Conv(PReLU(BN(Conv(x))))) + x, the residual denoising unit of the CMN."""

    def __init__(self, width, rng, name):
        self.conv1 = Conv2d(width, width, 3, rng, f"{name}.conv1")
        self.bn1 = BatchNorm2d(width, f"{name}.bn1")
        self.act = PReLU(f"{name}.prelu")
        self.conv2 = Conv2d(width, width, 3, rng, f"{name}.conv2")
        self.bn2 = BatchNorm2d(width, f"{name}.bn2")

    def __call__(self, x):
        return x + self.bn2(self.conv2(self.act(self.bn1(self.conv1(x)))))

    def params(self):
        return (
            self.conv1.params() + self.bn1.params() + self.act.params()
            + self.conv2.params() + self.bn2.params()
        )

    def bn_layers(self):
        return [self.bn1, self.bn2]


class Can:
    """Feature-recovery network: two attention blocks between plain convs.

    forward(x):
        p1 = ReLU(Conv(x)); a1 = AB1(p1) + p1
        p2 = ReLU(Conv(a1)); a2 = AB2(p2) + p2
        return x - ReLU(Conv(a2))
    """

    def __init__(self, rng, width=32, d=16, name="can"):
        self.width = width
        self.d = d
        self.conv_in = Conv2d(2, width, 3, rng, f"{name}.conv_in")
        self.ab1 = AttentionBlock(width, d, rng, f"{name}.ab1")
        self.conv_mid = Conv2d(width, width, 3, rng, f"{name}.conv_mid")
        self.ab2 = AttentionBlock(width, d, rng, f"{name}.ab2")
        self.conv_out = Conv2d(width, 2, 3, rng, f"{name}.conv_out")

    def __call__(self, x):
        p1 = T.relu(self.conv_in(x))
        a1 = self.ab1(p1) + p1
        p2 = T.relu(self.conv_mid(a1))
        a2 = self.ab2(p2) + p2
        return x - T.relu(self.conv_out(a2))

    def params(self):
        return (
            self.conv_in.params() + self.ab1.params() + self.conv_mid.params()
            + self.ab2.params() + self.conv_out.params()
        )


class Cmn:
    """Denoising network: Conv(BN(Conv(CB2(CB1(PReLU(Conv(x))))))) + Conv(x)."""

    def __init__(self, rng, width=32, name="cmn"):
        self.width = width
        self.conv_in = Conv2d(2, width, 3, rng, f"{name}.conv_in")
        self.act = PReLU(f"{name}.prelu")
        self.cb1 = ConvBlock(width, rng, f"{name}.cb1")
        self.cb2 = ConvBlock(width, rng, f"{name}.cb2")
        self.conv_mid = Conv2d(width, width, 3, rng, f"{name}.conv_mid")
        self.bn = BatchNorm2d(width, f"{name}.bn")
        self.conv_out = Conv2d(width, 2, 3, rng, f"{name}.conv_out")
        # Identity start for the skip projection: the trunk then only has to
        # learn the residual correction, which converges at the fixed 1e-4 rate.
        self.conv_skip = Conv2d(2, 2, 1, rng, f"{name}.conv_skip")
        self.conv_skip.identity_()

    def __call__(self, x):
        t = self.act(self.conv_in(x))
        t = self.cb2(self.cb1(t))
        t = self.conv_out(self.bn(self.conv_mid(t)))
        return t + self.conv_skip(x)

    def params(self):
        return (
            self.conv_in.params() + self.act.params() + self.cb1.params() + self.cb2.params()
            + self.conv_mid.params() + self.bn.params() + self.conv_out.params()
            + self.conv_skip.params()
        )

    def bn_layers(self):
        return self.cb1.bn_layers() + self.cb2.bn_layers() + [self.bn]


class MbaModel:
    """Two-stage estimator: CAN recovers masked features, CMN denoises."""

    def __init__(self, seed=0, width=32, d=16):
        rng = np.random.default_rng(seed)
        self.width = width
        self.d = d
        self.can = Can(rng, width=width, d=d)
        self.cmn = Cmn(rng, width=width)
        self.can_trained = False
        self.cmn_trained = False

    def set_training(self, mode):
        for bn in self.cmn.bn_layers():
            bn.training = mode

    def forward_can(self, x):
        return self.can(x)

    def forward_cmn(self, h_can):
        return self.cmn(h_can)

    def forward(self, x):
        return self.cmn(self.can(x))

    def predict_can(self, x_data):
        with T.no_grad():
            return self.can(Tensor(x_data)).data

    def predict(self, x_data):
        """Full MBA forward pass on raw arrays, BN in eval mode."""
        was_training = self.cmn.bn.training
        self.set_training(False)
        try:
            with T.no_grad():
                return self.cmn(self.can(Tensor(x_data))).data
        finally:
            self.set_training(was_training)

    def params(self, stage=None):
        if stage == "can":
            return self.can.params()
        if stage == "cmn":
            return self.cmn.params()
        return self.can.params() + self.cmn.params()

    def state(self):
        """Named parameter and buffer arrays, in stable order."""
        entries = [(p.name, p.data) for p in self.params()]
        for bn in self.cmn.bn_layers():
            entries.extend(bn.buffers())
        return entries

    def load_state(self, blobs):
        table = dict(blobs)
        for name, arr in self.state():
            if name not in table:
                raise KeyError(f"checkpoint is missing parameter {name!r}")
            src = table[name]
            if src.shape != arr.shape:
                raise ValueError(f"checkpoint shape {src.shape} does not match {name} {arr.shape}")
            arr[...] = src
        self.can_trained = True


# -- complexity accounting ---------------------------------------------------


def _conv_cost(layers):
    """Sum of s^2 * n_in * n_out over a list of (in, out, ksize) conv specs."""
    return sum(k * k * ci * co for ci, co, k in layers)


def can_conv_layers(width, d):
    return [(2, width, 3), (d, width, 3), (width, width, 3), (d, width, 3), (width, 2, 3)]


def cmn_conv_layers(width):
    return [
        (2, width, 3),
        (width, width, 3), (width, width, 3),   # CB1
        (width, width, 3), (width, width, 3),   # CB2
        (width, width, 3), (width, 2, 3), (2, 2, 1),
    ]


def mb_conv_layers(width, d):
    return [(width, d, 1), (d, d, 1)]


def flops_can(n_t, m, k, width=32, d=16):
    """Per-run multiply count of the CAN stage across K subcarriers."""
    per_sc = (
        n_t * m * _conv_cost(can_conv_layers(width, d))
        + 2 * (m * n_t * d)
        + 6 * n_t * m * _conv_cost(mb_conv_layers(width, d))
    )
    return k * per_sc


def flops_mba(n_t, m, k, width=32, d=16):
    """Per-run multiply count of the full MBA (CAN + CMN), linear in N_t, M, K."""
    return flops_can(n_t, m, k, width, d) + k * n_t * m * _conv_cost(cmn_conv_layers(width))


def flops_ls(n_t, b, k):
    """LS estimator cost for a B-slot design across K subcarriers."""
    return k * n_t * b * b
