import pytest

from hybridstream.drift import BaseSignalConfig, synth_base
from hybridstream.lstm import NetworkConfig, TrainConfig
from hybridstream.pipeline import InjectionConfig, SessionConfig, WeightPolicy
from hybridstream.series import Series


@pytest.fixture
def small_series() -> Series:
    return synth_base(BaseSignalConfig(length=400, noise_sigma=0.05, seed=11))


def tiny_session_config(policy: WeightPolicy | None = None, seed: int = 0) -> SessionConfig:
    """A fast session: 5 variables x 2 lags, 6-unit LSTM, count-40 windows."""
    return SessionConfig(
        lag=2,
        network=NetworkConfig(input_dim=10, seq_len=1, lstm_units=6, dense_units=4, seed=seed),
        batch_train=TrainConfig(epochs=3, batch_size=64, learning_rate=0.01, seed=seed + 1),
        speed_train=TrainConfig(epochs=3, batch_size=16, learning_rate=0.01, seed=seed + 2),
        injection=InjectionConfig(close_rule="count", min_records=40, buffer_capacity=200),
        policy=policy or WeightPolicy(mode="dynamic"),
        seed=seed,
    )


def tiny_data(n_windows: int = 5, seed: int = 0) -> tuple[Series, Series]:
    stream_len = 40 * n_windows + 4
    total = stream_len + stream_len // 2
    series = synth_base(BaseSignalConfig(length=total, noise_sigma=0.05, seed=seed))
    cut = total - stream_len
    return series.slice(0, cut), series.slice(cut, total)
