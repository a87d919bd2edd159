import numpy as np
import pytest

from irsw import tensor as T
from irsw.gradcheck import grad_check
from irsw.tensor import RunningStats, Tensor


class TestGradCheck:
    def test_linear_sum_is_exact(self):
        x = Tensor(np.random.default_rng(0).standard_normal((3, 3)))
        err = grad_check(lambda t: t.sum(), x, epsilon=1e-4)
        assert err < 1e-10

    def test_epsilon_bounds(self):
        x = Tensor(np.ones(2))
        with pytest.raises(ValueError):
            grad_check(lambda t: t.sum(), x, epsilon=1e-8)
        with pytest.raises(ValueError):
            grad_check(lambda t: t.sum(), x, epsilon=1e-3)

    def test_scalar_loss_required(self):
        with pytest.raises(ValueError):
            grad_check(lambda t: t * t, Tensor(np.ones(2)))

    def test_nonfinite_names_op(self):
        def bad(x):
            y = T.softmax(x * 1e400, axis=0)  # overflow in scale
            return y.sum()

        with np.errstate(all="ignore"), pytest.raises(FloatingPointError, match="scale"):
            grad_check(bad, Tensor(np.array([1.0, 2.0])))

    def test_composed_stack(self):
        # conv -> bn -> prelu -> softmax pipeline, checked against central
        # differences; offsets keep preactivations away from the PReLU kink.
        rng = np.random.default_rng(42)
        w = Tensor(rng.standard_normal((2, 2, 3, 3)) * 0.5)
        b = Tensor(rng.standard_normal(2) * 0.1)
        gamma = Tensor(rng.uniform(0.8, 1.2, 2))
        beta = Tensor(rng.standard_normal(2) * 0.1)
        slope = Tensor(np.array(0.25))
        coeff = Tensor(rng.standard_normal((2, 2, 4, 3)))

        def loss(x):
            h = T.conv2d(x, w, b)
            h = T.batchnorm2d(h, gamma, beta, RunningStats(2), training=True)
            h = T.prelu(h, slope)
            s = T.softmax(h, axis=1)
            return (s * coeff).sum()

        err = grad_check(loss, Tensor(rng.standard_normal((2, 2, 4, 3))), epsilon=1e-5)
        assert err < 1e-4
