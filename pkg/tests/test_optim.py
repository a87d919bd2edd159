import numpy as np
import pytest

from irsw.optim import Adam, AdamState, LrSchedule, adam_state_for, adam_step
from irsw.tensor import Tensor


class TestAdamState:
    def test_invariants(self):
        with pytest.raises(ValueError):
            AdamState(beta1=1.0)
        with pytest.raises(ValueError):
            AdamState(beta2=0.0)
        with pytest.raises(ValueError):
            AdamState(epsilon=0.0)
        with pytest.raises(ValueError):
            AdamState(learning_rate=-1.0)


class TestAdamStep:
    def test_zero_gradient_leaves_params(self):
        p = Tensor(np.array([1.0, -2.0]), requires_grad=True, name="p")
        state = adam_state_for([p], learning_rate=0.1)
        before = p.data.copy()
        for _ in range(5):
            adam_step([p], [np.zeros(2)], state)
        assert np.array_equal(p.data, before)
        assert np.all(state.first_moment[0] == 0.0)

    def test_moments_decay_after_impulse(self):
        p = Tensor(np.array([0.0]), requires_grad=True)
        state = adam_state_for([p], learning_rate=1e-3)
        adam_step([p], [np.array([4.0])], state)
        m1 = abs(state.first_moment[0][0])
        for _ in range(50):
            adam_step([p], [np.zeros(1)], state)
        assert abs(state.first_moment[0][0]) < m1 * 1e-2

    def test_constant_gradient_limit(self):
        # With constant gradient g the bias-corrected update tends to lr*sign(g).
        p = Tensor(np.array([0.0]), requires_grad=True)
        lr = 0.01
        state = adam_state_for([p], learning_rate=lr)
        g = np.array([-3.0])
        prev = p.data.copy()
        for _ in range(300):
            prev = p.data.copy()
            adam_step([p], [g], state)
        step = float(p.data[0] - prev[0])
        assert step == pytest.approx(lr * 1.0, rel=1e-3)  # sign(g) = -1, moving upward

    def test_quadratic_minimization(self):
        target = 1.7
        p = Tensor(np.array([1.0]), requires_grad=True)
        state = adam_state_for([p], learning_rate=0.01)
        for _ in range(500):
            grad = 2.0 * (p.data - target)
            adam_step([p], [grad], state)
        assert abs(float(p.data[0]) - target) < 1e-3

    def test_nonfinite_gradient_aborts_with_name(self):
        p = Tensor(np.array([1.0]), requires_grad=True, name="weights.w")
        state = adam_state_for([p])
        with pytest.raises(FloatingPointError, match="weights.w"):
            adam_step([p], [np.array([np.nan])], state)

    def test_shape_mismatch(self):
        p = Tensor(np.ones(3), requires_grad=True)
        state = adam_state_for([p])
        with pytest.raises(ValueError):
            adam_step([p], [np.ones(2)], state)

    def test_deterministic(self):
        def run():
            p = Tensor(np.array([1.0, 2.0]), requires_grad=True)
            state = adam_state_for([p], learning_rate=0.05)
            for i in range(20):
                adam_step([p], [np.array([0.3 * i, -0.1])], state)
            return p.data.copy()

        assert np.array_equal(run(), run())


class TestAdamWrapper:
    def test_step_uses_param_grads(self):
        p = Tensor(np.array([2.0]), requires_grad=True)
        opt = Adam([p], learning_rate=0.1)
        loss = (p * p).sum()
        loss.backward()
        opt.step()
        assert float(p.data[0]) < 2.0
        opt.zero_grad()
        assert p.grad is None


class TestLrSchedule:
    def test_stepped_decay(self):
        sched = LrSchedule(initial_rate=2e-4, decay_factor=0.6, decay_interval_epochs=150, mode="stepped")
        assert sched.rate_at(0) == 2e-4
        assert sched.rate_at(149) == 2e-4
        assert sched.rate_at(150) == pytest.approx(2e-4 * 0.6)
        assert sched.rate_at(450) == pytest.approx(2e-4 * 0.6 ** 3)

    def test_constant(self):
        sched = LrSchedule(initial_rate=1e-4)
        assert sched.rate_at(10_000) == 1e-4

    def test_invariants(self):
        with pytest.raises(ValueError):
            LrSchedule(initial_rate=0.0)
        with pytest.raises(ValueError):
            LrSchedule(initial_rate=1e-4, decay_factor=0.0)
        with pytest.raises(ValueError):
            LrSchedule(initial_rate=1e-4, mode="cosine")
