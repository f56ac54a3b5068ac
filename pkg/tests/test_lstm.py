import numpy as np
import pytest

from hybridstream import lstm
from hybridstream.lstm import (
    DivergenceError,
    ModelParams,
    NetworkConfig,
    TENSOR_ORDER,
    TrainConfig,
    init_params,
)
from hybridstream.series import SupervisedSet


def enumerate_parameter_count(params: ModelParams) -> int:
    return sum(getattr(params, name).size for name in TENSOR_ORDER)


def fd_gradient(params, X, y, eps=1e-5):
    vec = params.to_vector()
    grad = np.zeros_like(vec)
    for i in range(vec.size):
        up, dn = vec.copy(), vec.copy()
        up[i] += eps
        dn[i] -= eps
        lu, _ = lstm.mse_and_grads(params.with_vector(up), X, y)
        ld, _ = lstm.mse_and_grads(params.with_vector(dn), X, y)
        grad[i] = (lu - ld) / (2 * eps)
    return grad


class TestParameterCount:
    def test_default_config_is_10981(self):
        cfg = NetworkConfig()
        assert cfg.parameter_count() == 10_981
        assert init_params(cfg).parameter_count() == 10_981

    def test_25_is_the_unique_width_for_10981(self):
        matches = [
            d
            for d in range(1, 200)
            if NetworkConfig(input_dim=d, lstm_units=40, dense_units=10).parameter_count() == 10_981
        ]
        assert matches == [25]

    def test_minimal_config(self):
        # 4*((1+1)*1+1) = 12 gate params, dense 1+1, output 1+1 => 16
        cfg = NetworkConfig(input_dim=1, lstm_units=1, dense_units=1, output_units=1)
        assert cfg.parameter_count() == 16
        assert enumerate_parameter_count(init_params(cfg)) == 16

    @pytest.mark.parametrize("seed", range(5))
    def test_formula_matches_tensor_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        cfg = NetworkConfig(
            input_dim=int(rng.integers(1, 30)),
            seq_len=int(rng.integers(1, 4)),
            lstm_units=int(rng.integers(1, 50)),
            dense_units=int(rng.integers(1, 20)),
            output_units=int(rng.integers(1, 3)),
        )
        assert cfg.parameter_count() == enumerate_parameter_count(init_params(cfg))


class TestForward:
    def test_collapses_to_output_bias_with_zero_weights(self):
        cfg = NetworkConfig(input_dim=4, lstm_units=3, dense_units=2)
        zero = init_params(cfg)
        zero = zero.with_vector(np.zeros(zero.parameter_count()))
        vec = zero.to_vector()
        vec[-1] = 1.25  # output bias is the last serialized parameter
        biased = zero.with_vector(vec)
        for x in (np.zeros(4), np.ones(4), np.linspace(-2, 2, 4)):
            assert lstm.forward(biased, x) == pytest.approx(1.25)

    def test_zero_input_zero_bias_gives_zero(self):
        cfg = NetworkConfig(input_dim=4, lstm_units=3, dense_units=2)
        params = init_params(cfg)  # biases init to zero
        assert lstm.forward(params, np.zeros(4)) == pytest.approx(0.0)

    def test_deterministic_across_runs(self):
        cfg = NetworkConfig(seed=17)
        x = np.linspace(0, 1, 25)
        a = lstm.forward(init_params(cfg), x)
        b = lstm.forward(init_params(cfg), x)
        assert a == b  # bit-identical

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="width"):
            lstm.forward(init_params(NetworkConfig()), np.zeros(24))

    def test_non_finite_input_rejected(self):
        x = np.zeros(25)
        x[3] = np.inf
        with pytest.raises(ValueError, match="non-finite"):
            lstm.forward(init_params(NetworkConfig()), x)


class TestPredictBatch:
    def test_empty_input_empty_output(self):
        out = lstm.predict_batch(init_params(NetworkConfig()), np.zeros((0, 25)))
        assert out.shape == (0,)

    def test_single_row_equals_forward(self):
        params = init_params(NetworkConfig(seed=2))
        x = np.linspace(-1, 1, 25)
        assert lstm.predict_batch(params, x[None, :])[0] == lstm.forward(params, x)

    def test_order_preserving(self):
        params = init_params(NetworkConfig(seed=2))
        rows = np.random.default_rng(0).normal(size=(200, 25))
        batch = lstm.predict_batch(params, rows)
        assert batch.shape == (200,)
        singles = np.array([lstm.forward(params, r) for r in rows])
        assert np.allclose(batch, singles, atol=1e-12)


class TestTrain:
    def _toy_data(self, n=8, width=10, seed=0):
        rng = np.random.default_rng(seed)
        return SupervisedSet(inputs=rng.normal(size=(n, width)), targets=rng.normal(size=n), lag=2)

    def test_zero_learning_rate_keeps_params(self):
        cfg = NetworkConfig(input_dim=10, lstm_units=4, dense_units=3)
        params = init_params(cfg)
        trained = lstm.train(params, self._toy_data(), TrainConfig(epochs=3, batch_size=4, learning_rate=0.0))
        assert np.array_equal(params.to_vector(), trained.to_vector())

    def test_overfits_single_sample(self):
        cfg = NetworkConfig(seed=3)
        rng = np.random.default_rng(5)
        data = SupervisedSet(inputs=rng.uniform(0, 1, size=(1, 25)), targets=np.array([0.7]), lag=5)
        trained = lstm.train(init_params(cfg), data, TrainConfig(epochs=200, batch_size=1, learning_rate=0.01))
        loss, _ = lstm.mse_and_grads(trained, data.inputs, data.targets)
        assert loss < 1e-3

    def test_deterministic_per_seed(self):
        cfg = NetworkConfig(input_dim=10, lstm_units=4, dense_units=3, seed=1)
        data = self._toy_data(n=32)
        tcfg = TrainConfig(epochs=4, batch_size=8, learning_rate=0.005, seed=9)
        a = lstm.train(init_params(cfg), data, tcfg)
        b = lstm.train(init_params(cfg), data, tcfg)
        assert np.array_equal(a.to_vector(), b.to_vector())
        c = lstm.train(init_params(cfg), data, TrainConfig(epochs=4, batch_size=8, learning_rate=0.005, seed=10))
        assert not np.array_equal(a.to_vector(), c.to_vector())

    def test_divergence_carries_epoch(self):
        cfg = NetworkConfig(input_dim=10, lstm_units=4, dense_units=3)
        data = self._toy_data(n=16)
        with pytest.raises(DivergenceError) as err:
            lstm.train(init_params(cfg), data, TrainConfig(epochs=5, batch_size=4, learning_rate=1e9, optimizer="sgd"))
        assert err.value.epoch is not None

    def test_empty_data_rejected(self):
        data = SupervisedSet(inputs=np.zeros((0, 10)), targets=np.zeros(0), lag=2)
        with pytest.raises(ValueError, match="empty"):
            lstm.train(init_params(NetworkConfig(input_dim=10, lstm_units=4, dense_units=3)), data,
                       TrainConfig(epochs=1, batch_size=4, learning_rate=0.01))

    def test_sgd_matches_manual_step(self):
        cfg = NetworkConfig(input_dim=4, lstm_units=2, dense_units=2, seed=0)
        params = init_params(cfg)
        data = SupervisedSet(inputs=np.ones((2, 4)), targets=np.array([0.5, -0.5]), lag=1)
        _, grads = lstm.mse_and_grads(params, data.inputs, data.targets)
        stepped = lstm.train(params, data, TrainConfig(epochs=1, batch_size=2, learning_rate=0.1, optimizer="sgd"))
        manual = params.to_vector() - 0.1 * np.concatenate([grads[n].ravel() for n in TENSOR_ORDER])
        assert np.allclose(stepped.to_vector(), manual, atol=1e-15)


class TestGradients:
    @pytest.mark.parametrize("trial", range(8))
    def test_bptt_matches_finite_differences(self, trial):
        rng = np.random.default_rng(trial)
        cfg = NetworkConfig(
            input_dim=int(rng.integers(1, 5)),
            seq_len=int(rng.integers(1, 4)),
            lstm_units=int(rng.integers(2, 6)),
            dense_units=int(rng.integers(1, 4)),
            seed=trial,
        )
        params = init_params(cfg)
        params = params.with_vector(params.to_vector() + 0.1 * rng.normal(size=params.parameter_count()))
        X = rng.normal(size=(int(rng.integers(2, 7)), cfg.row_width))
        y = rng.normal(size=X.shape[0])
        _, analytic = lstm.mse_and_grads(params, X, y)
        avec = np.concatenate([analytic[name].ravel() for name in TENSOR_ORDER])
        nvec = fd_gradient(params, X, y)
        rel = np.abs(avec - nvec) / np.maximum.reduce(
            [np.abs(avec), np.abs(nvec), np.full_like(avec, 1e-3)]
        )
        assert rel.max() < 1e-4
