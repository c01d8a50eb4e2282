"""Tests for neural app."""

import math

import numpy as np
import pytest

from apps.core.exceptions import (
    ConfigError,
    NumericalError,
    ShapeError,
    StaleCacheError,
    StorageError,
)
from apps.core.rng import make_rng
from apps.core.storage import write_archive
from apps.neural.checkpoint import load_model, save_model
from apps.neural.conv import (
    conv2d_backward,
    conv2d_forward,
    maxpool2x2_backward,
    maxpool2x2_forward,
)
from apps.neural.gradcheck import numeric_gradient, relative_error
from apps.neural.layers import dense_backward, dense_forward, dropout, time_distributed_dense
from apps.neural.losses import mse, softmax, softmax_cross_entropy
from apps.neural.lstm import LstmLayer, LstmState, lstm_backward, lstm_forward
from apps.neural.models import CnnClassifier, LstmRegressor
from apps.neural.optim import AdamState, adam_step, adam_update
from apps.neural.params import ParamStore

INSTANCES = 20
TOLERANCE = 1e-4


def instances():
    return [make_rng(100, k) for k in range(INSTANCES)]


def assert_gradient(f, x, analytic):
    numeric = numeric_gradient(f, x)
    assert relative_error(analytic, numeric) < TOLERANCE


def sigmoid(z):
    return 1.0 / (1.0 + math.exp(-z))


class TestGradients:
    """Finite-difference checks of every hand-derived backward pass."""

    @pytest.mark.parametrize("rng", instances())
    def test_lstm(self, rng):
        """Test LSTM gradients w.r.t. weights, inputs and initial state."""
        batch, steps, features, hidden = 2, 3, 3, 4
        W = rng.normal(scale=0.5, size=(4 * hidden, features + hidden))
        b = rng.normal(scale=0.5, size=4 * hidden)
        x = rng.normal(size=(batch, steps, features))
        h0, c0 = rng.normal(size=(batch, hidden)), rng.normal(size=(batch, hidden))
        R, Rh, Rc = (
            rng.normal(size=(batch, steps, hidden)),
            rng.normal(size=(batch, hidden)),
            rng.normal(size=(batch, hidden)),
        )

        def loss():
            y, final, _ = lstm_forward(W, b, x, LstmState(h=h0, c=c0))
            return float((y * R).sum() + (final.h * Rh).sum() + (final.c * Rc).sum())

        _, _, cache = lstm_forward(W, b, x, LstmState(h=h0, c=c0))
        grads = lstm_backward(W, cache, R, LstmState(h=Rh, c=Rc))
        checks = ((W, grads.dW), (b, grads.db), (x, grads.dx), (h0, grads.dh0), (c0, grads.dc0))
        for value, analytic in checks:
            assert_gradient(loss, value, analytic)

    @pytest.mark.parametrize("rng", instances())
    def test_dense(self, rng):
        """Test dense gradients."""
        W, b, x = rng.normal(size=(4, 3)), rng.normal(size=3), rng.normal(size=(5, 4))
        R = rng.normal(size=(5, 3))
        dW, db, dx = dense_backward(W, x, R)

        def loss():
            return float((dense_forward(W, b, x) * R).sum())

        for value, analytic in ((W, dW), (b, db), (x, dx)):
            assert_gradient(loss, value, analytic)

    @pytest.mark.parametrize("rng", instances())
    def test_time_distributed_dense(self, rng):
        """Test gradients summed over batch and time steps."""
        W, b, x = rng.normal(size=(4, 2)), rng.normal(size=2), rng.normal(size=(2, 3, 4))
        R = rng.normal(size=(2, 3, 2))
        dW, db, dx = dense_backward(W, x, R)

        def loss():
            return float((time_distributed_dense(W, b, x) * R).sum())

        for value, analytic in ((W, dW), (b, db), (x, dx)):
            assert_gradient(loss, value, analytic)

    @pytest.mark.parametrize("rng", instances())
    def test_conv2d(self, rng):
        """Test convolution gradients."""
        x = rng.normal(size=(2, 5, 6, 2))
        K, b = rng.normal(size=(3, 3, 2, 3)), rng.normal(size=3)
        R = rng.normal(size=(2, 3, 4, 3))
        dK, db, dx = conv2d_backward(x, K, R)

        def loss():
            return float((conv2d_forward(x, K, b) * R).sum())

        for value, analytic in ((K, dK), (b, db), (x, dx)):
            assert_gradient(loss, value, analytic)

    @pytest.mark.parametrize("rng", instances())
    def test_maxpool(self, rng):
        """Test pooling gradients on an odd-sized input."""
        x = rng.normal(size=(2, 5, 5, 3))
        y, argmax = maxpool2x2_forward(x)
        R = rng.normal(size=y.shape)
        dx = maxpool2x2_backward(x.shape, argmax, R)

        def loss():
            return float((maxpool2x2_forward(x)[0] * R).sum())

        assert_gradient(loss, x, dx)
        assert not dx[:, 4, :, :].any() and not dx[:, :, 4, :].any()

    @pytest.mark.parametrize("rng", instances())
    def test_softmax_cross_entropy(self, rng):
        """Test cross-entropy gradient w.r.t. the logits."""
        logits = rng.normal(scale=2.0, size=(5, 4))
        labels = rng.integers(0, 4, size=5)
        _, grad = softmax_cross_entropy(logits, labels)
        assert_gradient(lambda: softmax_cross_entropy(logits, labels)[0], logits, grad)

    @pytest.mark.parametrize("rng", instances())
    def test_mse(self, rng):
        """Test squared-error gradient w.r.t. the prediction."""
        pred, target = rng.normal(size=(2, 3, 2)), rng.normal(size=(2, 3, 2))
        _, grad = mse(pred, target)
        assert_gradient(lambda: mse(pred, target)[0], pred, grad)

    @pytest.mark.parametrize("seed", range(3))
    def test_regressor(self, seed):
        """Test the whole stacked regressor without dropout."""
        model = LstmRegressor(hidden=3, layers=2, dropout=0.0, seed=seed)
        rng = make_rng(seed, 9)
        x, target = rng.normal(size=(2, 4, 3)), rng.normal(size=(2, 4, 2))
        y, _, cache = model.forward(x)
        _, dy = mse(y, target)
        model.store.zero_grad()
        model.backward(cache, dy)

        def loss():
            return mse(model.predict(x), target)[0]

        for param in model.store:
            assert_gradient(loss, param.value, param.grad.copy())


class TestLosses:
    """Tests for loss values."""

    def test_softmax_rows(self, rng):
        """Test probabilities sum to one even for large logits."""
        p = softmax(rng.normal(scale=500.0, size=(6, 5)))
        assert np.all(np.isfinite(p))
        assert np.allclose(p.sum(axis=1), 1.0)

    def test_cross_entropy_value(self):
        """Test uniform logits give log(classes)."""
        loss, _ = softmax_cross_entropy(np.zeros((3, 4)), np.array([0, 1, 3]))
        assert loss == pytest.approx(np.log(4.0))

    def test_shape_mismatch(self):
        """Test mismatched shapes."""
        with pytest.raises(ShapeError):
            mse(np.zeros((2, 3)), np.zeros((3, 2)))
        with pytest.raises(ShapeError):
            softmax_cross_entropy(np.zeros((3, 4)), np.zeros(2))


class TestAdam:
    """Tests for the optimizer."""

    def test_matches_formula(self):
        """Test three steps against the update written out by hand."""
        lr, b1, b2, eps = 0.01, 0.9, 0.999, 1e-8
        theta, m, v = np.array([1.0, -2.0]), np.zeros(2), np.zeros(2)
        expected, em, ev = theta.copy(), np.zeros(2), np.zeros(2)
        grads = [np.array([0.5, -1.0]), np.array([0.1, 2.0]), np.array([-0.3, 0.0])]
        for t, grad in enumerate(grads, 1):
            theta, m, v = adam_update(theta, grad, m, v, t, lr, b1, b2, eps)
            em = b1 * em + (1 - b1) * grad
            ev = b2 * ev + (1 - b2) * grad**2
            expected = expected - lr * (em / (1 - b1**t)) / (np.sqrt(ev / (1 - b2**t)) + eps)
        assert np.allclose(theta, expected, rtol=0, atol=1e-15)

    def test_first_step_size(self):
        """Test the bias-corrected first step moves each weight by about lr."""
        store = ParamStore()
        param = store.add("w", np.array([0.0, 0.0]))
        param.grad[:] = [3.0, -0.01]
        adam_step(store, AdamState(lr=0.1))
        assert np.allclose(param.value, [-0.1, 0.1], atol=1e-6)
        assert param.version == 1

    def test_non_finite_gradient(self):
        """Test a NaN gradient aborts before any weight changes."""
        store = ParamStore()
        first = store.add("a", np.ones(2))
        second = store.add("b", np.ones(2))
        first.grad[:] = 1.0
        second.grad[0] = np.nan
        state = AdamState()
        with pytest.raises(NumericalError) as exc_info:
            adam_step(store, state)
        assert exc_info.value.details["param"] == "b"
        assert np.array_equal(first.value, np.ones(2))
        assert state.t == 0


class TestParams:
    """Tests for the parameter store."""

    def test_stale_cache(self):
        """Test backward over a cache from before an update."""
        store = ParamStore()
        layer = LstmLayer(store, "lstm", 3, 4, make_rng(0))
        x = make_rng(1).normal(size=(2, 3, 3))
        y, _, cache = layer.forward(x)
        layer.backward(cache, np.ones_like(y))
        adam_step(store, AdamState())
        with pytest.raises(StaleCacheError):
            layer.backward(cache, np.ones_like(y))

    def test_duplicate_name(self):
        """Test parameter names are unique."""
        store = ParamStore()
        store.add("w", np.zeros(2))
        with pytest.raises(ShapeError):
            store.add("w", np.zeros(2))

    def test_non_finite_init(self):
        """Test non-finite initial values."""
        with pytest.raises(NumericalError):
            ParamStore().add("w", np.array([np.inf]))

    def test_forget_bias(self):
        """Test the forget-gate block of the bias starts at 1."""
        layer = LstmLayer(ParamStore(), "lstm", 3, 4, make_rng(0))
        assert np.array_equal(layer.b.value, np.r_[np.zeros(4), np.ones(4), np.zeros(8)])


class TestDropout:
    """Tests for inverted dropout."""

    def test_identity_in_inference(self, rng):
        """Test inference ignores the rate."""
        x = rng.normal(size=(4, 5))
        y, mask = dropout(x, 0.5, training=False)
        assert y is x and mask is None

    def test_training_mask(self, rng):
        """Test kept units are scaled by 1 / (1 - rate)."""
        y, mask = dropout(np.ones((200, 200)), 0.25, training=True, rng=rng)
        assert set(np.unique(mask)) <= {0.0, 1.0 / 0.75}
        assert (mask > 0).mean() == pytest.approx(0.75, abs=0.01)
        assert y.mean() == pytest.approx(1.0, abs=0.02)

    def test_expectation_preserved(self, rng):
        """Test the mean over 20,000 masks recovers each input value."""
        x = np.linspace(-2.0, 2.0, 50)
        y, _ = dropout(np.tile(x, (20_000, 1)), 0.2, training=True, rng=rng)
        assert np.allclose(y.mean(axis=0), x, atol=0.04)

    def test_invalid(self):
        """Test rate bounds and the generator requirement."""
        with pytest.raises(ConfigError):
            dropout(np.ones(3), 1.0, training=False)
        with pytest.raises(ConfigError):
            dropout(np.ones(3), 0.5, training=True)


class TestModels:
    """Tests for network stacks."""

    def test_regressor_shapes(self):
        """Test outputs and carried states."""
        model = LstmRegressor(hidden=5, layers=3, seed=1)
        y, states, _ = model.forward(np.zeros((4, 6, 3)))
        assert y.shape == (4, 6, 2)
        assert len(states) == 3 and states[0].h.shape == (4, 5)

    def test_regressor_seeded_init(self):
        """Test equal seeds give equal weights."""
        a, b = LstmRegressor(hidden=4, seed=7), LstmRegressor(hidden=4, seed=7)
        for name in a.store.names():
            assert np.array_equal(a.store[name].value, b.store[name].value)

    def test_classifier_shapes(self, rng):
        """Test logits for 23x23 images."""
        model = CnnClassifier(classes=5, channels=(2, 2, 2, 2), dense_units=8, seed=0)
        assert model.flat_features == 7 * 7 * 2
        assert model.logits(rng.random((3, 23, 23))).shape == (3, 5)

    def test_classifier_too_small(self):
        """Test images too small for the stack."""
        with pytest.raises(ShapeError):
            CnnClassifier(classes=2, image_side=9)


class TestCheckpoint:
    """Tests for model files."""

    def test_regressor_round_trip(self, tmp_path, rng):
        """Test weights and predictions survive bit-exactly."""
        model = LstmRegressor(hidden=4, layers=2, seed=3)
        path = save_model(model, tmp_path / "lstm.npz", meta={"time_steps": 6})
        loaded, meta = load_model(path)
        assert meta == {"time_steps": 6}
        assert loaded.config() == model.config()
        for name in model.store.names():
            assert np.array_equal(loaded.store[name].value, model.store[name].value)
        x = rng.normal(size=(2, 6, 3))
        assert np.array_equal(loaded.predict(x), model.predict(x))

    def test_classifier_round_trip(self, tmp_path, rng):
        """Test a classifier is rebuilt from its config."""
        model = CnnClassifier(classes=4, channels=(2, 2, 2, 2), dense_units=8, seed=5)
        loaded, _ = load_model(save_model(model, tmp_path / "cnn.npz"))
        images = rng.random((2, 23, 23))
        assert isinstance(loaded, CnnClassifier)
        assert np.array_equal(loaded.logits(images), model.logits(images))

    def test_gate_order_mismatch(self, tmp_path):
        """Test files with a different gate layout are refused."""
        model = LstmRegressor(hidden=2, layers=1)
        path = write_archive(
            tmp_path / "other.npz",
            "model",
            1,
            {"kind": model.kind, "gate_order": "ifog", "config": model.config()},
            model.store.state_dict(),
        )
        with pytest.raises(StorageError):
            load_model(path)


class TestLstmCell:
    """Tests for forward values of the LSTM cell."""

    def test_scalar_cell_by_hand(self):
        """Test one step of a 1-input 1-unit cell against the gate equations."""
        W = np.array([[0.1, 0.2], [0.3, -0.4], [0.5, 0.6], [-0.7, 0.8]])
        b = np.array([0.05, -0.05, 0.1, 0.0])
        x, h0, c0 = 0.5, 0.2, -0.3
        i = sigmoid(0.1 * x + 0.2 * h0 + 0.05)
        f = sigmoid(0.3 * x - 0.4 * h0 - 0.05)
        g = math.tanh(0.5 * x + 0.6 * h0 + 0.1)
        o = sigmoid(-0.7 * x + 0.8 * h0)
        c = f * c0 + i * g
        h = o * math.tanh(c)

        y, final, _ = lstm_forward(
            W, b, np.array([[[x]]]), LstmState(h=np.array([[h0]]), c=np.array([[c0]]))
        )
        assert final.c[0, 0] == pytest.approx(c, rel=1e-12)
        assert final.h[0, 0] == pytest.approx(h, rel=1e-12)
        assert y[0, 0, 0] == final.h[0, 0]

    def test_zero_weights(self):
        """Test all gates sit at 0.5 and the candidate at 0 without weights."""
        hidden, steps = 3, 6
        W, b = np.zeros((4 * hidden, 2 + hidden)), np.zeros(4 * hidden)
        x = make_rng(5).normal(size=(2, steps, 2))
        y, final, _ = lstm_forward(W, b, x, LstmState.zeros(2, hidden))
        assert not y.any() and not final.c.any()

        c0 = np.ones((2, hidden))
        y, final, _ = lstm_forward(W, b, x, LstmState(h=np.zeros((2, hidden)), c=c0))
        for t in range(steps):
            assert np.allclose(y[:, t, :], 0.5 * np.tanh(0.5 ** (t + 1)), rtol=1e-14)
        assert np.allclose(final.c, 0.5**steps, rtol=1e-14)

    @pytest.mark.parametrize("split", [1, 4, 7])
    def test_state_carry_composes(self, rng, split):
        """Test running two halves with the carried state equals one run."""
        hidden = 4
        W = rng.normal(scale=0.5, size=(4 * hidden, 3 + hidden))
        b = rng.normal(scale=0.5, size=4 * hidden)
        x = rng.normal(size=(2, 8, 3))
        start = LstmState(h=rng.normal(size=(2, hidden)), c=rng.normal(size=(2, hidden)))

        whole, final, _ = lstm_forward(W, b, x, start)
        head, carried, _ = lstm_forward(W, b, x[:, :split], start)
        tail, resumed, _ = lstm_forward(W, b, x[:, split:], carried)
        assert np.allclose(np.concatenate([head, tail], axis=1), whole, rtol=0, atol=1e-15)
        assert np.allclose(resumed.h, final.h, rtol=0, atol=1e-15)
        assert np.allclose(resumed.c, final.c, rtol=0, atol=1e-15)

    def test_duplicated_batch_doubles_gradients(self, rng):
        """Test repeating every sample twice doubles the weight gradients."""
        hidden = 3
        W = rng.normal(scale=0.5, size=(4 * hidden, 2 + hidden))
        b = rng.normal(scale=0.5, size=4 * hidden)
        x, dy = rng.normal(size=(2, 5, 2)), rng.normal(size=(2, 5, hidden))

        _, _, cache = lstm_forward(W, b, x, LstmState.zeros(2, hidden))
        single = lstm_backward(W, cache, dy)
        _, _, cache = lstm_forward(W, b, np.concatenate([x, x]), LstmState.zeros(4, hidden))
        double = lstm_backward(W, cache, np.concatenate([dy, dy]))
        assert np.allclose(double.dW, 2.0 * single.dW, rtol=1e-13, atol=1e-15)
        assert np.allclose(double.db, 2.0 * single.db, rtol=1e-13, atol=1e-15)
        assert np.allclose(double.dx[:2], single.dx, rtol=1e-13, atol=1e-15)


class TestConvForward:
    """Tests for convolution and pooling values."""

    def test_identity_kernel(self, rng):
        """Test a 1x1 identity kernel returns the input."""
        x = rng.normal(size=(2, 5, 4, 3))
        K = np.eye(3).reshape(1, 1, 3, 3)
        assert np.array_equal(conv2d_forward(x, K, np.zeros(3)), x)

    def test_bias_only(self, rng):
        """Test a zero kernel leaves the bias in every output."""
        x, K = rng.normal(size=(1, 4, 4, 2)), np.zeros((3, 3, 2, 2))
        y = conv2d_forward(x, K, np.array([1.5, -2.0]))
        assert y.shape == (1, 2, 2, 2)
        assert np.array_equal(y[..., 0], np.full((1, 2, 2), 1.5))

    def test_maxpool_picks_largest(self):
        """Test [[1, 2], [3, 4]] pools to 4 with the winner in the last slot."""
        x = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 2, 2, 1)
        y, argmax = maxpool2x2_forward(x)
        assert y.shape == (1, 1, 1, 1)
        assert y[0, 0, 0, 0] == 4.0
        assert argmax[0, 0, 0, 0] == 3
