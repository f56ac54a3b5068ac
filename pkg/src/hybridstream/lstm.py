"""LSTM regression network with explicit forward and backward passes.

Pure numpy, float64 throughout. The network is one LSTM layer, one ReLU
dense layer and a linear output layer. Input rows are flat vectors of width
``seq_len * input_dim`` and are unrolled as ``seq_len`` timesteps of
``input_dim`` features; the final hidden state feeds the dense layer.
Gate order in the fused matrices is input, forget, cell-candidate, output.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


class DivergenceError(RuntimeError):
    """Raised when training or inference produces non-finite values."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


@dataclass(frozen=True)
class NetworkConfig:
    input_dim: int = 25
    seq_len: int = 1
    lstm_units: int = 40
    dense_units: int = 10
    output_units: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("input_dim", "seq_len", "lstm_units", "dense_units", "output_units"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def row_width(self) -> int:
        return self.seq_len * self.input_dim

    def parameter_count(self) -> int:
        d, u = self.input_dim, self.lstm_units
        dn, o = self.dense_units, self.output_units
        return 4 * ((d + u) * u + u) + u * dn + dn + dn * o + o


# (name, shape factory) in serialization order
TENSOR_ORDER = ("w_x", "w_h", "b_g", "w_d", "b_d", "w_o", "b_o")


@dataclass(frozen=True)
class ModelParams:
    """Immutable parameter snapshot; training returns a new snapshot."""

    config: NetworkConfig
    w_x: np.ndarray  # (input_dim, 4*units)
    w_h: np.ndarray  # (units, 4*units)
    b_g: np.ndarray  # (4*units,)
    w_d: np.ndarray  # (units, dense_units)
    b_d: np.ndarray  # (dense_units,)
    w_o: np.ndarray  # (dense_units, output_units)
    b_o: np.ndarray  # (output_units,)

    def __post_init__(self) -> None:
        cfg = self.config
        u = cfg.lstm_units
        expected = {
            "w_x": (cfg.input_dim, 4 * u),
            "w_h": (u, 4 * u),
            "b_g": (4 * u,),
            "w_d": (u, cfg.dense_units),
            "b_d": (cfg.dense_units,),
            "w_o": (cfg.dense_units, cfg.output_units),
            "b_o": (cfg.output_units,),
        }
        for name, shape in expected.items():
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def tensors(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in TENSOR_ORDER}

    def parameter_count(self) -> int:
        return sum(t.size for t in self.tensors().values())

    def to_vector(self) -> np.ndarray:
        return np.concatenate([t.ravel() for t in self.tensors().values()])

    def with_vector(self, vec: np.ndarray) -> "ModelParams":
        out = {}
        offset = 0
        for name in TENSOR_ORDER:
            t = getattr(self, name)
            out[name] = vec[offset : offset + t.size].reshape(t.shape).copy()
            offset += t.size
        if offset != vec.size:
            raise ValueError("vector length does not match parameter count")
        return replace(self, **out)


def init_params(config: NetworkConfig) -> ModelParams:
    """Seeded Glorot-uniform weight matrices, zero biases."""
    rng = np.random.default_rng(config.seed)
    u = config.lstm_units

    def glorot(fan_in: int, fan_out: int, shape: tuple[int, ...]) -> np.ndarray:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=shape)

    return ModelParams(
        config=config,
        w_x=glorot(config.input_dim, u, (config.input_dim, 4 * u)),
        w_h=glorot(u, u, (u, 4 * u)),
        b_g=np.zeros(4 * u),
        w_d=glorot(u, config.dense_units, (u, config.dense_units)),
        b_d=np.zeros(config.dense_units),
        w_o=glorot(config.dense_units, config.output_units, (config.dense_units, config.output_units)),
        b_o=np.zeros(config.output_units),
    )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _forward_cached(params: ModelParams, rows: np.ndarray) -> tuple[np.ndarray, dict]:
    """Run the network on (N, seq_len*input_dim) rows, keeping the per-step
    activations needed by the backward pass."""
    cfg = params.config
    n = rows.shape[0]
    u = cfg.lstm_units
    x_seq = rows.reshape(n, cfg.seq_len, cfg.input_dim)

    h = np.zeros((n, u))
    c = np.zeros((n, u))
    steps = []
    for t in range(cfg.seq_len):
        x_t = x_seq[:, t, :]
        z = x_t @ params.w_x + h @ params.w_h + params.b_g
        i = _sigmoid(z[:, :u])
        f = _sigmoid(z[:, u : 2 * u])
        g = np.tanh(z[:, 2 * u : 3 * u])
        o = _sigmoid(z[:, 3 * u :])
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        steps.append({"x": x_t, "h_prev": h, "c_prev": c, "i": i, "f": f, "g": g, "o": o, "tanh_c": tanh_c})
        h, c = h_new, c_new

    d_pre = h @ params.w_d + params.b_d
    a = np.maximum(d_pre, 0.0)
    out = a @ params.w_o + params.b_o
    cache = {"steps": steps, "h_final": h, "d_pre": d_pre, "a": a}
    return out, cache


def _backward(params: ModelParams, cache: dict, d_out: np.ndarray) -> dict[str, np.ndarray]:
    cfg = params.config
    u = cfg.lstm_units

    a, d_pre = cache["a"], cache["d_pre"]
    grads = {name: np.zeros_like(getattr(params, name)) for name in TENSOR_ORDER}

    grads["w_o"] = a.T @ d_out
    grads["b_o"] = d_out.sum(axis=0)
    d_a = d_out @ params.w_o.T
    d_dpre = d_a * (d_pre > 0.0)
    grads["w_d"] = cache["h_final"].T @ d_dpre
    grads["b_d"] = d_dpre.sum(axis=0)

    d_h = d_dpre @ params.w_d.T
    d_c = np.zeros_like(d_h)
    for step in reversed(cache["steps"]):
        i, f, g, o, tanh_c = step["i"], step["f"], step["g"], step["o"], step["tanh_c"]
        d_o = d_h * tanh_c
        d_c = d_c + d_h * o * (1.0 - tanh_c**2)
        d_i = d_c * g
        d_g = d_c * i
        d_f = d_c * step["c_prev"]
        d_z = np.concatenate(
            [d_i * i * (1.0 - i), d_f * f * (1.0 - f), d_g * (1.0 - g**2), d_o * o * (1.0 - o)],
            axis=1,
        )
        grads["w_x"] += step["x"].T @ d_z
        grads["w_h"] += step["h_prev"].T @ d_z
        grads["b_g"] += d_z.sum(axis=0)
        d_h = d_z @ params.w_h.T
        d_c = d_c * f
    return grads


def forward(params: ModelParams, input_row: np.ndarray) -> float:
    """Single-row prediction. Raises on dimension mismatch, non-finite input
    or non-finite output (divergence signal)."""
    row = np.asarray(input_row, dtype=np.float64).reshape(-1)
    if row.shape[0] != params.config.row_width:
        raise ValueError(f"expected input of width {params.config.row_width}, got {row.shape[0]}")
    if not np.all(np.isfinite(row)):
        raise ValueError("non-finite input")
    out, _ = _forward_cached(params, row[None, :])
    value = float(out[0, 0]) if params.config.output_units == 1 else out[0]
    if not np.all(np.isfinite(out)):
        raise DivergenceError("forward pass produced a non-finite prediction")
    return value


def predict_batch(params: ModelParams, inputs: np.ndarray) -> np.ndarray:
    """Vectorized, order-preserving forward over (N, row_width) inputs."""
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.size == 0:
        return np.zeros(0)
    if inputs.ndim != 2 or inputs.shape[1] != params.config.row_width:
        raise ValueError(f"expected inputs of shape (n, {params.config.row_width})")
    if not np.all(np.isfinite(inputs)):
        raise ValueError("non-finite input")
    out, _ = _forward_cached(params, inputs)
    if not np.all(np.isfinite(out)):
        raise DivergenceError("prediction batch produced non-finite values")
    return out[:, 0] if params.config.output_units == 1 else out


def mse_and_grads(params: ModelParams, inputs: np.ndarray, targets: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """Mean squared error over the batch and its gradient w.r.t. every tensor.
    Divergence shows up as a non-finite loss, not as a warning."""
    with np.errstate(over="ignore", invalid="ignore"):
        out, cache = _forward_cached(params, inputs)
        err = out - targets.reshape(out.shape)
        loss = float(np.mean(err**2))
        d_out = 2.0 * err / err.size
        return loss, _backward(params, cache, d_out)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int
    learning_rate: float
    seed: int = 0
    optimizer: str = "adam"  # "adam" | "sgd"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


def train(params: ModelParams, data, cfg: TrainConfig) -> ModelParams:
    """Mini-batch training, deterministic per (params, data, cfg).

    ``data`` is a SupervisedSet or any object with ``inputs`` and ``targets``
    arrays. Raises :class:`DivergenceError` carrying the epoch index when the
    running loss turns non-finite.
    """
    inputs = np.asarray(data.inputs, dtype=np.float64)
    targets = np.asarray(data.targets, dtype=np.float64)
    if inputs.shape[0] == 0:
        raise ValueError("training data is empty")

    rng = np.random.default_rng(cfg.seed)
    tensors = {name: getattr(params, name).copy() for name in TENSOR_ORDER}
    m = {name: np.zeros_like(t) for name, t in tensors.items()}
    v = {name: np.zeros_like(t) for name, t in tensors.items()}
    step = 0
    current = params

    for epoch in range(cfg.epochs):
        order = rng.permutation(inputs.shape[0])
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, inputs.shape[0], cfg.batch_size):
            batch_idx = order[start : start + cfg.batch_size]
            loss, grads = mse_and_grads(current, inputs[batch_idx], targets[batch_idx])
            if not np.isfinite(loss):
                raise DivergenceError(f"training loss diverged at epoch {epoch}", epoch=epoch)
            epoch_loss += loss
            n_batches += 1
            step += 1
            if cfg.optimizer == "adam":
                bc1 = 1.0 - cfg.beta1**step
                bc2 = 1.0 - cfg.beta2**step
                for name, g in grads.items():
                    m[name] = cfg.beta1 * m[name] + (1.0 - cfg.beta1) * g
                    v[name] = cfg.beta2 * v[name] + (1.0 - cfg.beta2) * g * g
                    tensors[name] = tensors[name] - cfg.learning_rate * (m[name] / bc1) / (
                        np.sqrt(v[name] / bc2) + cfg.eps
                    )
            else:
                for name, g in grads.items():
                    tensors[name] = tensors[name] - cfg.learning_rate * g
            current = replace(params, **tensors)
        if not np.isfinite(epoch_loss / max(n_batches, 1)):
            raise DivergenceError(f"training loss diverged at epoch {epoch}", epoch=epoch)
    return current
